use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::EmbeddingTable;
use crate::error::{Error, Result};
use crate::models::{Example, Model, Variant};
use crate::params::{ParamKind, ParamStore};
use crate::scalar::Scalar;

use super::adam::{adam_step, AdamState};
use super::dropout::Mode;
use super::metrics::{evaluate_accuracy, evaluate_map_mrr};

/// `strength * sum ||W||^2` over weight matrices; biases are excluded.
pub fn l2_penalty<T: Scalar>(params: &ParamStore<T>, strength: f64) -> T {
    let s: T = params
        .iter()
        .filter(|(_, p)| p.kind == ParamKind::Weight)
        .flat_map(|(_, p)| p.value.data().iter().map(|&w| w * w))
        .sum();
    T::lit(strength) * s
}

/// Adds `2 * strength * W` to the gradients of weight matrices.
pub fn l2_gradient<T: Scalar>(params: &ParamStore<T>, strength: f64, grads: &mut [Vec<T>]) {
    if strength == 0.0 {
        return;
    }
    let c = T::lit(2.0 * strength);
    for (id, p) in params.iter() {
        if p.kind == ParamKind::Weight {
            for (g, &w) in grads[id.index()].iter_mut().zip(p.value.data()) {
                *g += c * w;
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub lr: f64,
    pub l2: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Log accuracy on the training set every epoch.
    pub eval_train: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 32,
            lr: 1e-3,
            l2: 0.0,
            epochs: 10,
            seed: 0,
            eval_train: true,
        }
    }
}

impl TrainConfig {
    pub fn for_variant(variant: Variant) -> Self {
        let (lr, l2, epochs, _, _) = variant.schedule();
        TrainConfig {
            lr,
            l2,
            epochs,
            ..TrainConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if !(self.lr >= 0.0 && self.l2 >= 0.0) {
            return Err(Error::Config("lr and l2 must be non-negative".into()));
        }
        Ok(())
    }
}

/// Evaluation data: labeled examples, or questions with candidate answers.
#[derive(Clone, Debug)]
pub enum EvalSet {
    Labeled(Vec<Example>),
    Ranked(Vec<Vec<Example>>),
}

impl EvalSet {
    /// Named metrics; the first one selects the best epoch.
    pub fn evaluate<T: Scalar>(&self, model: &Model<T>, emb: &EmbeddingTable<T>) -> Result<Vec<(&'static str, f64)>> {
        match self {
            EvalSet::Labeled(ex) => Ok(vec![("accuracy", evaluate_accuracy(model, ex, emb)?)]),
            EvalSet::Ranked(groups) => {
                let (map, mrr) = evaluate_map_mrr(model, groups, emb)?;
                Ok(vec![("map", map), ("mrr", mrr)])
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricRecord {
    pub epoch: usize,
    pub split: String,
    pub metric: String,
    pub value: f64,
}

impl MetricRecord {
    pub fn render(&self) -> String {
        format!("{}\t{}\t{}\t{}", self.epoch, self.split, self.metric, self.value)
    }
}

/// Tab-separated `epoch split metric value` lines.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MetricsLog {
    pub records: Vec<MetricRecord>,
}

impl MetricsLog {
    pub fn push(&mut self, epoch: usize, split: &str, metric: &str, value: f64) -> &MetricRecord {
        self.records.push(MetricRecord {
            epoch,
            split: split.to_string(),
            metric: metric.to_string(),
            value,
        });
        self.records.last().expect("just pushed")
    }

    /// Last value logged for `(split, metric)`.
    pub fn last(&self, split: &str, metric: &str) -> Option<f64> {
        self.records
            .iter()
            .rev()
            .find(|r| r.split == split && r.metric == metric)
            .map(|r| r.value)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            let _ = writeln!(out, "{}", r.render());
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct TrainReport {
    pub log: MetricsLog,
    /// Epoch whose parameters the model holds on return.
    pub best_epoch: usize,
    pub best_dev: Option<f64>,
    pub steps: u64,
}

fn mean_loss<T: Scalar>(model: &Model<T>, examples: &[Example], emb: &EmbeddingTable<T>) -> Result<f64> {
    let mut total = 0.0;
    for ex in examples {
        total += model.loss(ex, emb)?.as_f64();
    }
    Ok(total / examples.len() as f64)
}

/// Epoch loop with seeded shuffling, mean-gradient minibatches and Adam.
///
/// Epoch 0 logs the initial parameters. With a dev set, the model ends up
/// holding the parameters of the best dev epoch. A non-finite loss or
/// gradient stops training with `Error::NonFinite`, leaving the model at the
/// last good parameters.
pub fn train_run<T: Scalar>(
    model: &mut Model<T>,
    cfg: &TrainConfig,
    train: &[Example],
    dev: Option<&EvalSet>,
    emb: &EmbeddingTable<T>,
    mut on_record: impl FnMut(&MetricRecord),
) -> Result<TrainReport> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::InvalidInput("training set is empty".into()));
    }
    let mut log = MetricsLog::default();
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
    let mut adam = AdamState::new(model.params(), cfg.lr);
    let train_set = EvalSet::Labeled(train.to_vec());
    let mut best: Option<(f64, usize, ParamStore<T>)> = None;
    let mut last_good = model.params().clone();

    let mut evaluate = |model: &Model<T>, epoch: usize, train_loss: f64, log: &mut MetricsLog| -> Result<Option<f64>> {
        on_record(log.push(epoch, "train", "loss", train_loss));
        if cfg.eval_train {
            for (name, v) in train_set.evaluate(model, emb)? {
                on_record(log.push(epoch, "train", name, v));
            }
        }
        let mut primary = None;
        if let Some(dev) = dev {
            for (name, v) in dev.evaluate(model, emb)? {
                primary.get_or_insert(v);
                on_record(log.push(epoch, "dev", name, v));
            }
        }
        Ok(primary)
    };

    let initial = mean_loss(model, train, emb)?;
    if let Some(score) = evaluate(model, 0, initial, &mut log)? {
        best = Some((score, 0, model.params().clone()));
    }

    let mut order: Vec<usize> = (0..train.len()).collect();
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let mut grads = model.params().zeros_like();
            for &i in batch {
                let (loss, g) = model.loss_and_grads(&train[i], emb, &mut Mode::Train(&mut dropout_rng))?;
                if !loss.is_finite() {
                    *model.params_mut() = last_good;
                    return Err(Error::NonFinite(format!("training loss at epoch {epoch}")));
                }
                epoch_loss += loss.as_f64();
                g.accumulate_into(&mut grads);
            }
            let scale = T::one() / T::lit(batch.len() as f64);
            for g in grads.iter_mut().flatten() {
                *g *= scale;
            }
            l2_gradient(model.params(), cfg.l2, &mut grads);
            if let Err(e) = adam_step(model.params_mut(), &grads, &mut adam) {
                *model.params_mut() = last_good;
                return Err(e);
            }
        }
        if model.params().iter().any(|(_, p)| !p.value.is_finite()) {
            *model.params_mut() = last_good;
            return Err(Error::NonFinite(format!("parameters after epoch {epoch}")));
        }
        last_good = model.params().clone();
        let score = evaluate(model, epoch, epoch_loss / train.len() as f64, &mut log)?;
        if let Some(score) = score {
            if best.as_ref().is_none_or(|(b, _, _)| score > *b) {
                best = Some((score, epoch, model.params().clone()));
            }
        }
    }

    let (best_dev, best_epoch) = match best {
        Some((score, epoch, params)) => {
            *model.params_mut() = params;
            (Some(score), epoch)
        }
        None => (None, cfg.epochs),
    };
    Ok(TrainReport {
        log,
        best_epoch,
        best_dev,
        steps: adam.t,
    })
}
