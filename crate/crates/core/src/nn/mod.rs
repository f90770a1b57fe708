//! Small feed-forward networks with analytic gradients, Adam, and a
//! diagonal-Gaussian policy head. All arithmetic is `f64`.

mod adam;
mod mlp;
mod policy;

pub use adam::OptimState;
pub use mlp::{Mlp, Trace};
pub use policy::{GaussianPolicy, PolicyMode, StochasticPolicy, LOG_STD_MAX, LOG_STD_MIN};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NnError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("empty batch")]
    EmptyBatch,
    #[error("non-finite loss at sample {sample}")]
    NonFinite { sample: usize },
    #[error("invalid architecture: {0}")]
    Architecture(alloc::string::String),
}
