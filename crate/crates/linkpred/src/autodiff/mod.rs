//! Minimal dense-array math with reverse-mode gradients: the substrate
//! for the encoders, predictors, and ranking objectives.

mod gradcheck;
mod optim;
mod sparse;
mod store;
mod tape;
mod tensor;

pub use gradcheck::{grad_check, GradCheckReport};
pub use optim::{optimizer_step, OptimMethod};
pub use sparse::SparseMatrix;
pub use store::{Param, ParameterStore};
pub use tape::{Mode, Tape, TensorId};
pub use tensor::Tensor;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DiffError {
    #[error("shape mismatch in {op}: left is {}x{}, right is {}x{}", lhs.0, lhs.1, rhs.0, rhs.1)]
    ShapeMismatch {
        op: &'static str,
        lhs: (usize, usize),
        rhs: (usize, usize),
    },
    #[error("operation {op} produced a non-finite value")]
    NonFinite { op: &'static str },
    #[error("invalid tensor data length {len} for shape {rows}x{cols}")]
    DataLength { len: usize, rows: usize, cols: usize },
    #[error("dropout probability must be in [0, 1), got {p}")]
    InvalidDropout { p: f64 },
    #[error("row index {index} out of range for {rows} rows")]
    RowOutOfRange { index: usize, rows: usize },
    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),
    #[error("parameter `{0}` already exists")]
    DuplicateParameter(String),
    #[error("tensor was not produced by this tape")]
    ForeignTensor,
    #[error("expected a 1x1 scalar tensor, got {rows}x{cols}")]
    NotScalar { rows: usize, cols: usize },
    #[error("backward requires a nonempty tape")]
    EmptyTape,
    #[error("learning rate must be positive, got {0}")]
    InvalidLearningRate(f64),
    #[error("weight decay must be non-negative, got {0}")]
    InvalidWeightDecay(f64),
    #[error("finite-difference step must be positive, got {0}")]
    InvalidEps(f64),
    #[error("function is not deterministic: forward passes gave {first} and {second}")]
    NonDeterministic { first: f64, second: f64 },
    #[error("margin weight gamma must be in (0, 1], got {0}")]
    InvalidGamma(f64),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("checkpoint format error: {0}")]
    Checkpoint(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
