//! Run configuration: variant preset, then `key=value` config file, then flags.

use std::path::{Path, PathBuf};

use clap::Args;
use nti::data::{SstMode, SyntheticKind};
use nti::kv::KvRecord;
use nti::models::{ModelConfig, Task, Variant};
use nti::train::TrainConfig;

use crate::error::{io_err, CliError, CliResult};

/// Every flag mirrors the config key of the same name (`--k-in` is `k_in`).
#[derive(Args, Debug, Default, Clone)]
pub struct ConfigFlags {
    /// `key=value` file supplying defaults; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// sst, snli, wikiqa, synthetic-parity, synthetic-contains-pair,
    /// synthetic-length-bucket or synthetic-pairs.
    #[arg(long)]
    pub task: Option<String>,
    #[arg(long)]
    pub variant: Option<String>,
    /// Directory with the task's split files.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Whitespace text embeddings; seeded random vectors when absent.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// fine or binary.
    #[arg(long)]
    pub sst_mode: Option<String>,
    /// Train SST on every labeled phrase rather than whole sentences.
    #[arg(long)]
    pub sst_phrases: Option<bool>,
    #[arg(long)]
    pub lowercase: Option<bool>,
    #[arg(long)]
    pub synthetic_n: Option<usize>,
    #[arg(long)]
    pub synthetic_dev_n: Option<usize>,
    #[arg(long)]
    pub max_len: Option<usize>,
    /// f32 or f64.
    #[arg(long)]
    pub precision: Option<String>,

    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub k_in: Option<usize>,
    #[arg(long)]
    pub leaf_mode: Option<String>,
    #[arg(long)]
    pub nonleaf_mode: Option<String>,
    #[arg(long)]
    pub attention_mode: Option<String>,
    #[arg(long)]
    pub score_mode: Option<String>,
    #[arg(long)]
    pub tree_shape: Option<String>,
    #[arg(long)]
    pub tie_encoder_weights: Option<bool>,
    #[arg(long)]
    pub dropout_input: Option<f64>,
    #[arg(long)]
    pub dropout_output: Option<f64>,
    #[arg(long)]
    pub mlp_hidden: Option<usize>,
    #[arg(long)]
    pub n_classes: Option<usize>,

    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub l2: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub eval_train: Option<bool>,
}

impl ConfigFlags {
    fn to_kv(&self) -> KvRecord {
        let mut kv = KvRecord::new();
        macro_rules! put {
            ($($field:ident),+) => {
                $(if let Some(v) = &self.$field {
                    kv.set(stringify!($field), v);
                })+
            };
        }
        put!(task, variant, sst_mode, sst_phrases, lowercase, synthetic_n, synthetic_dev_n, max_len, precision);
        put!(k, k_in, leaf_mode, nonleaf_mode, attention_mode, score_mode, tree_shape, tie_encoder_weights);
        put!(dropout_input, dropout_output, mlp_hidden, n_classes, batch_size, lr, l2, epochs, seed, eval_train);
        for (key, path) in [("data", &self.data), ("embeddings", &self.embeddings)] {
            if let Some(p) = path {
                kv.set(key, p.display());
            }
        }
        kv
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CliTask {
    Sst,
    Snli,
    WikiQa,
    Synthetic(SyntheticKind),
    SyntheticPairs,
}

impl CliTask {
    pub fn parse(s: &str) -> CliResult<Self> {
        Ok(match s {
            "sst" => CliTask::Sst,
            "snli" | "nli" => CliTask::Snli,
            "wikiqa" | "qa" => CliTask::WikiQa,
            "synthetic-pairs" => CliTask::SyntheticPairs,
            other => match other.strip_prefix("synthetic-") {
                Some(kind) => CliTask::Synthetic(SyntheticKind::parse(kind)?),
                None => return Err(CliError::Usage(format!("unknown task {other:?}"))),
            },
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            CliTask::Sst => "sst",
            CliTask::Snli => "snli",
            CliTask::WikiQa => "wikiqa",
            CliTask::Synthetic(SyntheticKind::Parity) => "synthetic-parity",
            CliTask::Synthetic(SyntheticKind::ContainsPair) => "synthetic-contains-pair",
            CliTask::Synthetic(SyntheticKind::LengthBucket) => "synthetic-length-bucket",
            CliTask::SyntheticPairs => "synthetic-pairs",
        }
    }

    pub fn model_task(self) -> Task {
        match self {
            CliTask::Sst => Task::Sst,
            CliTask::Snli | CliTask::SyntheticPairs => Task::Nli,
            CliTask::WikiQa => Task::Qa,
            CliTask::Synthetic(_) => Task::Sentence,
        }
    }

    pub fn needs_data(self) -> bool {
        matches!(self, CliTask::Sst | CliTask::Snli | CliTask::WikiQa)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Precision {
    F32,
    F64,
}

/// Fully resolved run settings.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub task: CliTask,
    pub variant: Variant,
    pub data: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub sst_mode: SstMode,
    pub sst_phrases: bool,
    pub lowercase: bool,
    pub synthetic_n: usize,
    pub synthetic_dev_n: usize,
    pub max_len: usize,
    pub precision: Precision,
    pub model: ModelConfig,
    pub train: TrainConfig,
}

fn parse<V: std::str::FromStr>(kv: &KvRecord, key: &str) -> CliResult<Option<V>> {
    Ok(kv.parse_value(key)?)
}

fn existing(path: &str) -> CliResult<PathBuf> {
    std::fs::canonicalize(path).map_err(|e| io_err(Path::new(path), e))
}

impl RunConfig {
    pub fn resolve(flags: &ConfigFlags) -> CliResult<Self> {
        let mut kv = match &flags.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
                KvRecord::parse(&text, &path.display().to_string())?
            }
            None => KvRecord::new(),
        };
        kv.merge(&flags.to_kv());
        Self::from_kv(&kv)
    }

    pub fn from_kv(kv: &KvRecord) -> CliResult<Self> {
        let task = CliTask::parse(kv.get("task").ok_or_else(|| CliError::Usage("--task is required".into()))?)?;
        let variant = match kv.get("variant") {
            Some(v) => Variant::parse(v)?,
            None if task == CliTask::WikiQa => Variant::NtiAnfLstm,
            None => Variant::NtiSlstm,
        };
        let data = kv.get("data").map(existing).transpose()?;
        if task.needs_data() && data.is_none() {
            return Err(CliError::Usage(format!("--data is required for task {}", task.name())));
        }
        let embeddings = kv.get("embeddings").map(existing).transpose()?;
        let sst_mode = match kv.get("sst_mode").unwrap_or("fine") {
            "fine" => SstMode::Fine,
            "binary" => SstMode::Binary,
            other => return Err(CliError::Core(nti::Error::Config(format!("unknown sst_mode {other}")))),
        };
        let precision = match kv.get("precision").unwrap_or("f64") {
            "f64" => Precision::F64,
            "f32" => Precision::F32,
            other => return Err(CliError::Core(nti::Error::Config(format!("unknown precision {other}")))),
        };

        let mut model = ModelConfig::for_variant(variant, task.model_task());
        model.n_classes = match task {
            CliTask::Sst => sst_mode.n_classes(),
            CliTask::Synthetic(kind) => kind.n_classes(),
            _ => model.n_classes,
        };
        let mut model_kv = kv.clone();
        model_kv.set("task", task.model_task());
        model.apply_kv(&model_kv)?;
        if kv.get("k_in").is_none() && embeddings.is_none() {
            model.k_in = model.k;
        }
        model.validate()?;

        let mut train = TrainConfig::for_variant(variant);
        if !task.needs_data() {
            train.batch_size = 4;
            train.lr = 5e-3;
        }
        if let Some(v) = parse(kv, "batch_size")? {
            train.batch_size = v;
        }
        if let Some(v) = parse(kv, "lr")? {
            train.lr = v;
        }
        if let Some(v) = parse(kv, "l2")? {
            train.l2 = v;
        }
        if let Some(v) = parse(kv, "epochs")? {
            train.epochs = v;
        }
        if let Some(v) = parse(kv, "eval_train")? {
            train.eval_train = v;
        }
        train.seed = model.seed;
        train.validate()?;

        Ok(RunConfig {
            task,
            variant,
            data,
            embeddings,
            sst_mode,
            sst_phrases: parse(kv, "sst_phrases")?.unwrap_or(true),
            lowercase: parse(kv, "lowercase")?.unwrap_or(false),
            synthetic_n: parse(kv, "synthetic_n")?.unwrap_or(200),
            synthetic_dev_n: parse(kv, "synthetic_dev_n")?.unwrap_or(200),
            max_len: parse(kv, "max_len")?.unwrap_or(16),
            precision,
            model,
            train,
        })
    }

    /// Every resolved field; reading it back reproduces this config.
    pub fn to_kv(&self) -> KvRecord {
        let mut kv = KvRecord::new();
        kv.set("task", self.task.name());
        kv.set("variant", self.variant);
        if let Some(p) = &self.data {
            kv.set("data", p.display());
        }
        if let Some(p) = &self.embeddings {
            kv.set("embeddings", p.display());
        }
        kv.set("sst_mode", if self.sst_mode == SstMode::Fine { "fine" } else { "binary" });
        kv.set("sst_phrases", self.sst_phrases);
        kv.set("lowercase", self.lowercase);
        kv.set("synthetic_n", self.synthetic_n);
        kv.set("synthetic_dev_n", self.synthetic_dev_n);
        kv.set("max_len", self.max_len);
        kv.set("precision", if self.precision == Precision::F64 { "f64" } else { "f32" });
        for (k, v) in self.model.to_kv().iter() {
            if k != "task" {
                kv.set(k, v);
            }
        }
        kv.set("batch_size", self.train.batch_size);
        kv.set("lr", self.train.lr);
        kv.set("l2", self.train.l2);
        kv.set("epochs", self.train.epochs);
        kv.set("eval_train", self.train.eval_train);
        kv
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        Self::from_kv(&KvRecord::parse(&text, &path.display().to_string())?)
    }
}
