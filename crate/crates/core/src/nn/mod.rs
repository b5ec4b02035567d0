//! Stacked LSTM language-model numerics: forward recursion, truncated
//! backpropagation through time, softmax cross-entropy and Adam.

mod bptt;
mod loss;
mod lstm;
mod matrix;
mod optim;
mod scalar;

use thiserror::Error;

pub use bptt::{backward, bptt_gradients, forward, sequence_loss, Dropout, ForwardCache, SequenceBatch};
pub use loss::{cross_entropy_loss, softmax};
pub use lstm::{Architecture, LstmLayerParams, Network, OutputLayer, RnnState, FORGET_BIAS, INIT_RANGE};
pub use matrix::{gemm, Matrix, View};
pub use optim::{adam_step, clip_gradients, AdamConfig, AdamState};
pub use scalar::{dot, sigmoid, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NnError {
    #[error("{what}: expected {expected}, found {found}")]
    ShapeMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("non-finite value in input")]
    NonFiniteInput,
    #[error("temperature must be positive and finite, got {0}")]
    InvalidTemperature(f64),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("loss is not finite")]
    NonFiniteLoss,
}
