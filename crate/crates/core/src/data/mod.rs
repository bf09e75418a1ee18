//! Corpora, vocabulary and fixed word embeddings.
//!
//! All corpora arrive pre-tokenized; tokens are split on whitespace.

mod embeddings;
mod snli;
mod sst;
mod synthetic;
mod vocab;
mod wikiqa;

pub use embeddings::{load_embeddings, EmbeddingTable};
pub use snli::{load_snli, load_snli_with, write_snli, NliLabel, SentencePair, SnliFormat};
pub use sst::{load_sst, parse_sst_line, phrase_examples, write_sst, LabeledSentence, Phrase, SstMode};
pub use synthetic::{synthetic_pairs, synthetic_task, synthetic_treebank, SyntheticKind};
pub use vocab::Vocabulary;
pub use wikiqa::{group_pairs, load_wikiqa, write_wikiqa, QAPair};

use std::path::Path;

use crate::error::{Error, Result};

pub(crate) fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_string).collect()
}
