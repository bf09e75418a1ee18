//! `nti`: train, evaluate and inspect neural tree indexers.

mod config;
mod dataset;
mod error;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nti::data::{EmbeddingTable, Vocabulary};
use nti::models::{Model, TreeShape};
use nti::train::{predicted_label, train_run};
use nti::tree::padded_len;
use nti::Scalar;

use config::{ConfigFlags, Precision, RunConfig};
use dataset::Split;
use error::{io_err, CliError, CliResult};

#[derive(Parser, Debug)]
#[command(name = "nti", version, about = "Neural tree indexers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a model and write config.txt, vocab.txt, metrics.tsv and model.ckpt.
    Train(Box<TrainArgs>),
    /// Print metrics of a trained run on one split.
    Eval(EvalArgs),
    /// Export node-by-node attention weights for one sentence pair as CSV.
    Attend(AttendArgs),
    /// Accuracy bucketed by the number of pad leaves.
    PadSweep(PadSweepArgs),
    /// Rank corpus lines by cosine similarity of root vectors to a query.
    Neighbors(NeighborsArgs),
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[command(flatten)]
    config: ConfigFlags,
    /// Run directory; defaults to `$NTI_OUT_DIR/<task>-<variant>-seed<seed>`
    /// with `NTI_OUT_DIR` falling back to `runs`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Directory written by `train`.
    #[arg(long)]
    run: PathBuf,
    /// Checkpoint to load instead of `<run>/model.ckpt`.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, default_value = "test")]
    split: String,
}

#[derive(Args, Debug)]
struct AttendArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long)]
    premise: String,
    #[arg(long)]
    hypothesis: String,
    /// Defaults to `<run>/attention.csv`.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PadSweepArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, default_value = "dev")]
    split: String,
}

#[derive(Args, Debug)]
struct NeighborsArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long)]
    query: String,
    /// One phrase or sentence per line.
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value_t = 10)]
    top: usize,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return report(&CliError::Usage(clap_message(&e))),
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(&e),
    }
}

fn clap_message(e: &clap::Error) -> String {
    let text = e.render().to_string();
    let text = text.trim_start().strip_prefix("error:").unwrap_or(&text);
    text.lines().map(str::trim).filter(|l| !l.is_empty()).collect::<Vec<_>>().join(" ")
}

fn report(e: &CliError) -> ExitCode {
    let msg = e.to_string().lines().map(str::trim).collect::<Vec<_>>().join(" ");
    eprintln!("error: {}: {}", e.kind(), msg);
    ExitCode::from(e.exit_code() as u8)
}

macro_rules! at_precision {
    ($precision:expr, $f:ident($($arg:expr),*)) => {
        match $precision {
            Precision::F64 => $f::<f64>($($arg),*),
            Precision::F32 => $f::<f32>($($arg),*),
        }
    };
}

fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Train(args) => {
            let cfg = RunConfig::resolve(&args.config)?;
            let dir = args.out.unwrap_or_else(|| default_out_dir(&cfg));
            std::fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
            at_precision!(cfg.precision, train(&cfg, &dir))
        }
        Command::Eval(args) => {
            let run = RunDir::open(&args.run.run)?;
            let split = Split::parse(&args.split)?;
            at_precision!(run.cfg.precision, eval(&run, &args.run, split))
        }
        Command::Attend(args) => {
            let run = RunDir::open(&args.run.run)?;
            at_precision!(run.cfg.precision, attend(&run, &args))
        }
        Command::PadSweep(args) => {
            let run = RunDir::open(&args.run.run)?;
            let split = Split::parse(&args.split)?;
            at_precision!(run.cfg.precision, pad_sweep(&run, &args.run, split))
        }
        Command::Neighbors(args) => {
            let run = RunDir::open(&args.run.run)?;
            at_precision!(run.cfg.precision, neighbors(&run, &args))
        }
    }
}

fn default_out_dir(cfg: &RunConfig) -> PathBuf {
    let root = std::env::var_os("NTI_OUT_DIR").unwrap_or_else(|| "runs".into());
    PathBuf::from(root).join(format!("{}-{}-seed{}", cfg.task.name(), cfg.variant, cfg.model.seed))
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

fn train<T: Scalar>(cfg: &RunConfig, dir: &Path) -> CliResult<()> {
    let train_raw = dataset::require_split(cfg, Split::Train)?;
    let dev_raw = dataset::load_split(cfg, Split::Dev)?;
    let test_raw = dataset::load_split(cfg, Split::Test)?;
    let vocab = dataset::build_vocab(
        [Some(&train_raw), dev_raw.as_ref(), test_raw.as_ref()].into_iter().flatten(),
        cfg.lowercase,
    );
    write_file(&dir.join("config.txt"), &cfg.to_kv().render())?;
    dataset::write_vocab(&vocab, &dir.join("vocab.txt"))?;

    let emb = dataset::embeddings::<T>(cfg, &vocab)?;
    let examples = dataset::examples(&train_raw, &vocab);
    let dev = dev_raw.map(|r| dataset::eval_set(&r, &vocab));
    let mut model = Model::<T>::new(cfg.model.clone())?;

    let metrics_path = dir.join("metrics.tsv");
    let mut log = BufWriter::new(File::create(&metrics_path).map_err(|e| io_err(&metrics_path, e))?);
    let mut write_error = None;
    let result = train_run(&mut model, &cfg.train, &examples, dev.as_ref(), &emb, |record| {
        let line = record.render();
        println!("{line}");
        if write_error.is_none() {
            write_error = writeln!(log, "{line}").err();
        }
    });
    if let Some(e) = write_error.or_else(|| log.flush().err()) {
        return Err(io_err(&metrics_path, e));
    }
    match result {
        Ok(report) => {
            model.save(&dir.join("model.ckpt"))?;
            eprintln!("best epoch {}, run directory {}", report.best_epoch, dir.display());
            Ok(())
        }
        Err(e @ nti::Error::NonFinite(_)) => {
            model.save(&dir.join("model.ckpt"))?;
            Err(e.into())
        }
        Err(e) => Err(e.into()),
    }
}

/// A finished run: its frozen config and vocabulary.
struct RunDir {
    dir: PathBuf,
    cfg: RunConfig,
    vocab: Vocabulary,
}

impl RunDir {
    fn open(dir: &Path) -> CliResult<Self> {
        let cfg = RunConfig::load(&dir.join("config.txt"))?;
        let vocab = dataset::read_vocab(&dir.join("vocab.txt"), cfg.lowercase)?;
        Ok(RunDir {
            dir: dir.to_path_buf(),
            cfg,
            vocab,
        })
    }

    fn model<T: Scalar>(&self, args: &RunArgs) -> CliResult<(Model<T>, EmbeddingTable<T>)> {
        let path = args.checkpoint.clone().unwrap_or_else(|| self.dir.join("model.ckpt"));
        let model = Model::<T>::load(&path)?;
        let stored = model.config().to_kv();
        let expected = self.cfg.model.to_kv();
        let differing: Vec<String> = expected
            .iter()
            .filter(|(k, v)| stored.get(k) != Some(*v))
            .map(|(k, v)| format!("{k} (config {v}, checkpoint {})", stored.get(k).unwrap_or("missing")))
            .collect();
        if !differing.is_empty() {
            return Err(nti::Error::Checkpoint(format!(
                "{} does not match the run config: {}",
                path.display(),
                differing.join(", ")
            ))
            .into());
        }
        let emb = dataset::embeddings::<T>(&self.cfg, &self.vocab)?;
        if emb.len() != self.vocab.len() {
            return Err(nti::Error::Checkpoint("embedding table does not match the vocabulary".into()).into());
        }
        Ok((model, emb))
    }
}

fn eval<T: Scalar>(run: &RunDir, args: &RunArgs, split: Split) -> CliResult<()> {
    let (model, emb) = run.model::<T>(args)?;
    let raw = dataset::require_split(&run.cfg, split)?;
    for (metric, value) in dataset::eval_set(&raw, &run.vocab).evaluate(&model, &emb)? {
        println!("{}\t{metric}\t{value}", split.name());
    }
    Ok(())
}

fn tokens(text: &str) -> Vec<&str> {
    text.split_whitespace().collect()
}

fn attend<T: Scalar>(run: &RunDir, args: &AttendArgs) -> CliResult<()> {
    let (model, emb) = run.model::<T>(&args.run)?;
    let premise = tokens(&args.premise);
    let hypothesis = tokens(&args.hypothesis);
    let map = model.attention_map(&run.vocab.encode(&premise), &run.vocab.encode(&hypothesis), &emb)?;
    let path = args.output.clone().unwrap_or_else(|| run.dir.join("attention.csv"));
    write_file(&path, &map.to_csv(&premise, &hypothesis)?)?;
    println!("{}", path.display());
    Ok(())
}

fn pad_sweep<T: Scalar>(run: &RunDir, args: &RunArgs, split: Split) -> CliResult<()> {
    let (model, emb) = run.model::<T>(args)?;
    let raw = dataset::require_split(&run.cfg, split)?;
    let examples = dataset::examples(&raw, &run.vocab);
    if examples.is_empty() {
        return Err(nti::Error::InvalidInput(format!("{} split is empty", split.name())).into());
    }
    // pad count -> (examples, correct)
    let mut buckets: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for ex in &examples {
        let len = ex.primary_len();
        let pads = match model.config().tree_shape {
            TreeShape::Balanced => padded_len(len) - len,
            TreeShape::LeftBranching => 0,
        };
        let bucket = buckets.entry(pads).or_default();
        bucket.0 += 1;
        bucket.1 += usize::from(predicted_label(&model, ex, &emb)? == ex.label());
    }
    println!("pad\tcount\taccuracy");
    let mut accuracies = Vec::new();
    for (pads, (count, correct)) in &buckets {
        let acc = *correct as f64 / *count as f64;
        accuracies.push(acc);
        println!("{pads}\t{count}\t{acc}");
    }
    let max = accuracies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = accuracies.iter().copied().fold(f64::INFINITY, f64::min);
    println!("spread\t{}\t{}", examples.len(), max - min);
    Ok(())
}

fn cosine<T: Scalar>(a: &[T], b: &[T]) -> f64 {
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (x, y) = (x.as_f64(), y.as_f64());
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na.sqrt() * nb.sqrt())
    }
}

fn neighbors<T: Scalar>(run: &RunDir, args: &NeighborsArgs) -> CliResult<()> {
    let (model, emb) = run.model::<T>(&args.run)?;
    let text = std::fs::read_to_string(&args.corpus).map_err(|e| io_err(&args.corpus, e))?;
    let corpus: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
    if corpus.is_empty() {
        return Err(nti::Error::InvalidInput(format!("corpus {} has no entries", args.corpus.display())).into());
    }
    let query = model.encode_root(&run.vocab.encode(&tokens(&args.query)), &emb)?;
    let mut scored = Vec::with_capacity(corpus.len());
    for line in &corpus {
        let root = model.encode_root(&run.vocab.encode(&tokens(line)), &emb)?;
        scored.push((cosine(&query, &root), *line));
    }
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    for (rank, (sim, line)) in scored.iter().take(args.top).enumerate() {
        println!("{}\t{sim}\t{line}", rank + 1);
    }
    Ok(())
}
