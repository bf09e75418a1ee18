//! Neural tree indexers.
//!
//! Sequence encoders that pad a token sequence to a power of two, build a
//! balanced full binary tree over it, and compose node representations
//! bottom-up with an S-LSTM or an attentive non-leaf function. Attention over
//! the finished tree (global or tree-structured) supports sentence matching.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the precision.

pub mod attention;
pub mod autodiff;
pub mod cells;
pub mod data;
pub mod kv;
pub mod models;
pub mod params;
pub mod train;
pub mod tree;

mod error;
mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Tensor64 = autodiff::Tensor<f64>;
pub type Tensor32 = autodiff::Tensor<f32>;
pub type ParamStore64 = params::ParamStore<f64>;
pub type ParamStore32 = params::ParamStore<f32>;
pub type Model64 = models::Model<f64>;
pub type Model32 = models::Model<f32>;
pub type EmbeddingTable64 = data::EmbeddingTable<f64>;
pub type EmbeddingTable32 = data::EmbeddingTable<f32>;
