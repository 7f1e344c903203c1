//! Minimal reverse-mode autodiff and a three-model zoo: a hinge-loss linear
//! baseline, an MLP and a graph convolution network with a learnable
//! adjacency.
//!
//! ```
//! use eerbench::nn::{Graph, Tensor};
//!
//! let mut g = Graph::new();
//! let x = g.leaf(Tensor::scalar(3.0));
//! let y = g.mul(x, x).unwrap();
//! g.backward(y).unwrap();
//! assert_eq!(g.grad(x).item(), Some(6.0));
//! ```

mod checkpoint;
mod graph;
mod model;
mod tensor;

pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointIndex, ParamEntry, INDEX_FILE, WEIGHTS_FILE};
pub use graph::{Graph, Var};
pub use model::{build_model, sgd_step, Hyperparams, LossKind, ModelGraph, ModelTag, Parameter};
pub use tensor::Tensor;

#[derive(Debug, thiserror::Error)]
pub enum NnError {
    #[error("{op}: incompatible shapes {left:?} and {right:?}")]
    Shape { op: &'static str, left: Vec<usize>, right: Vec<usize> },
    #[error("backward needs a scalar loss, got shape {0:?}")]
    NonScalar(Vec<usize>),
    #[error("{0} produced a non-finite value")]
    NonFinite(&'static str),
    #[error("label {label} out of range for {classes} classes")]
    Label { label: usize, classes: usize },
    #[error("unknown model tag `{0}` (linear_hinge, mlp, graphconv)")]
    UnknownTag(String),
    #[error("{0}")]
    Data(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
