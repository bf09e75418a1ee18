//! Reverse-mode automatic differentiation over dense tensors.

mod dd;
mod gradcheck;
mod graph;
mod tensor;

pub use dd::Dd;
pub use gradcheck::{check_gradients, check_gradients_precise, finite_difference_check, Objective, DEFAULT_EPS};
pub use graph::{softmax, Elementwise, Gradients, Graph, Var};
pub(crate) use graph::sigmoid;
pub use tensor::Tensor;
