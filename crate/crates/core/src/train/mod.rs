//! Optimization and evaluation: Adam, dropout, l2, the epoch loop, metrics.

mod adam;
mod dropout;
mod metrics;
mod run;

pub use adam::{adam_step, AdamState};
pub use dropout::{apply_dropout, dropout_var, Mode};
pub use metrics::{accuracy, argmax, evaluate_accuracy, evaluate_map_mrr, map_mrr, predicted_label, RankedGroup};
pub use run::{l2_gradient, l2_penalty, train_run, EvalSet, MetricRecord, MetricsLog, TrainConfig, TrainReport};
