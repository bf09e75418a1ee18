//! Split files, vocabulary and embeddings for a run.

use std::path::{Path, PathBuf};

use nti::data::*;
use nti::models::Example;
use nti::train::EvalSet;
use nti::Scalar;

use crate::config::{CliTask, RunConfig};
use crate::error::{io_err, CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub fn parse(s: &str) -> CliResult<Self> {
        match s {
            "train" => Ok(Split::Train),
            "dev" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            _ => Err(CliError::Usage(format!("unknown split {s:?}, expected train, dev or test"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }

    fn offset(self) -> u64 {
        match self {
            Split::Train => 0,
            Split::Dev => 1,
            Split::Test => 2,
        }
    }
}

/// Parsed split before vocabulary lookup.
#[derive(Clone, Debug)]
pub enum RawSplit {
    Sentences(Vec<LabeledSentence>),
    Pairs(Vec<SentencePair>),
    Qa(Vec<QAPair>),
}

impl RawSplit {
    fn tokens(&self) -> Box<dyn Iterator<Item = &String> + '_> {
        match self {
            RawSplit::Sentences(v) => Box::new(v.iter().flat_map(|s| &s.tokens)),
            RawSplit::Pairs(v) => Box::new(v.iter().flat_map(|p| p.premise.iter().chain(&p.hypothesis))),
            RawSplit::Qa(v) => Box::new(v.iter().flat_map(|p| p.question.iter().chain(&p.answer))),
        }
    }
}

fn file_name(task: CliTask, split: Split) -> Option<&'static str> {
    Some(match (task, split) {
        (CliTask::Sst, Split::Train) => "train.txt",
        (CliTask::Sst, Split::Dev) => "dev.txt",
        (CliTask::Sst, Split::Test) => "test.txt",
        (CliTask::Snli, Split::Train) => "snli_1.0_train.txt",
        (CliTask::Snli, Split::Dev) => "snli_1.0_dev.txt",
        (CliTask::Snli, Split::Test) => "snli_1.0_test.txt",
        (CliTask::WikiQa, Split::Train) => "WikiQA-train.tsv",
        (CliTask::WikiQa, Split::Dev) => "WikiQA-dev.tsv",
        (CliTask::WikiQa, Split::Test) => "WikiQA-test.tsv",
        _ => return None,
    })
}

/// File backing `split`, if the task reads from disk.
pub fn split_path(cfg: &RunConfig, split: Split) -> Option<PathBuf> {
    Some(cfg.data.as_ref()?.join(file_name(cfg.task, split)?))
}

/// Reads or generates one split; `Ok(None)` when its file is absent.
pub fn load_split(cfg: &RunConfig, split: Split) -> CliResult<Option<RawSplit>> {
    let seed = cfg.model.seed.wrapping_add(split.offset());
    let n = if split == Split::Train { cfg.synthetic_n } else { cfg.synthetic_dev_n };
    let raw = match cfg.task {
        CliTask::Synthetic(kind) => RawSplit::Sentences(synthetic_task(kind, seed, n, cfg.max_len)?),
        CliTask::SyntheticPairs => RawSplit::Pairs(synthetic_pairs(seed, n, cfg.max_len)?),
        task => {
            let path = split_path(cfg, split).expect("corpus tasks have data paths");
            if !path.exists() {
                return Ok(None);
            }
            match task {
                CliTask::Sst => {
                    let sentences = load_sst(&path, cfg.sst_mode)?;
                    if split == Split::Train && cfg.sst_phrases {
                        RawSplit::Sentences(phrase_examples(&sentences))
                    } else {
                        RawSplit::Sentences(sentences)
                    }
                }
                CliTask::Snli => RawSplit::Pairs(load_snli(&path)?),
                _ => RawSplit::Qa(load_wikiqa(&path)?),
            }
        }
    };
    Ok(Some(raw))
}

pub fn require_split(cfg: &RunConfig, split: Split) -> CliResult<RawSplit> {
    load_split(cfg, split)?.ok_or_else(|| {
        let path = split_path(cfg, split).unwrap_or_default();
        io_err(&path, std::io::Error::from(std::io::ErrorKind::NotFound))
    })
}

pub fn build_vocab<'a>(splits: impl IntoIterator<Item = &'a RawSplit>, lowercase: bool) -> Vocabulary {
    let mut vocab = Vocabulary::new(lowercase);
    for s in splits {
        for t in s.tokens() {
            vocab.insert(t);
        }
    }
    vocab
}

/// One token per line, reserved entries omitted.
pub fn write_vocab(vocab: &Vocabulary, path: &Path) -> CliResult<()> {
    let mut text = String::new();
    for i in 2..vocab.len() {
        text.push_str(vocab.token(i).unwrap_or_default());
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn read_vocab(path: &Path, lowercase: bool) -> CliResult<Vocabulary> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    Ok(Vocabulary::build(text.lines(), lowercase))
}

pub fn embeddings<T: Scalar>(cfg: &RunConfig, vocab: &Vocabulary) -> CliResult<EmbeddingTable<T>> {
    Ok(match &cfg.embeddings {
        Some(path) => load_embeddings(path, vocab, cfg.model.k_in)?,
        None => EmbeddingTable::random(vocab, cfg.model.k_in, cfg.model.seed),
    })
}

pub fn examples(raw: &RawSplit, vocab: &Vocabulary) -> Vec<Example> {
    match raw {
        RawSplit::Sentences(v) => v.iter().map(|s| Example::sentence(s, vocab)).collect(),
        RawSplit::Pairs(v) => v.iter().map(|p| Example::pair(p, vocab)).collect(),
        RawSplit::Qa(v) => v.iter().map(|p| Example::qa(p, vocab)).collect(),
    }
}

/// Ranked groups for answer selection, labeled examples otherwise.
pub fn eval_set(raw: &RawSplit, vocab: &Vocabulary) -> EvalSet {
    match raw {
        RawSplit::Qa(pairs) => EvalSet::Ranked(
            group_pairs(pairs)
                .iter()
                .map(|g| g.iter().map(|p| Example::qa(p, vocab)).collect())
                .collect(),
        ),
        other => EvalSet::Labeled(examples(other, vocab)),
    }
}
