//! Dataset splitting and the generate, score, retrain design cycle.

mod cycle;
mod split;
pub mod synth;

use std::path::PathBuf;

use thiserror::Error;

pub use cycle::{
    epoch_sweep, run_cycle, sweep_sample_config, CycleConfig, CycleState, IterationLog, Scorer, SweepEpoch,
    MANIFEST_FILE,
};
pub use split::{split_dataset, SplitSize, SplitSpec};

use crate::lm::LmError;
use crate::tpm::TpmError;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("corpus has {have} usable molecules, the split needs {need}")]
    CorpusTooSmall { need: usize, have: usize },
    #[error(
        "iteration {iteration}: no sampled molecule was predicted active, so there is nothing to fine-tune on; \
         sample more molecules or relax the activity threshold"
    )]
    EmptyActivePool { iteration: usize },
    #[error("state directory {0} is locked by another run (remove the lock file if that run is dead)")]
    StateLocked(PathBuf),
    #[error("state directory was created with a different configuration: {0}")]
    StateMismatch(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Lm(#[from] LmError),
    #[error(transparent)]
    Tpm(#[from] TpmError),
}
