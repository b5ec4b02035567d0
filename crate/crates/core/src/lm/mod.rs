//! Character-level SMILES language model: vocabulary, checkpoints,
//! training, fine-tuning and sampling.

mod checkpoint;
mod sample;
mod train;
mod vocab;

use thiserror::Error;

pub use checkpoint::{Checkpoint, EpochRecord, Phase, KIND as CHECKPOINT_KIND};
pub use sample::{sample_stream, SampleConfig, SeedPolicy, StopCriterion};
pub use train::{
    encode_lines, evaluate_loss, fine_tune, train, train_with_vocabulary, window_starts, FineTuneConfig,
    FineTuneOutcome, LossReport, SkippedLine, TrainingConfig,
};
pub use vocab::{encode_one_hot, split_symbols, Vocabulary, EOL};

use crate::artifact::ArtifactError;
use crate::nn::NnError;

#[derive(Debug, Error)]
pub enum LmError {
    #[error("the corpus contains no molecules")]
    EmptyCorpus,
    #[error("invalid vocabulary: {0}")]
    BadVocabulary(String),
    #[error("symbol {symbol:?} at position {position} is not in the vocabulary")]
    UnknownSymbol { symbol: String, position: usize },
    #[error("index {index} out of range for a vocabulary of {len} symbols")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("vocabulary mismatch: {0}")]
    VocabularyMismatch(String),
    #[error("loss became non-finite in epoch {epoch}, batch {batch}; try a lower learning rate or clip norm")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Artifact(#[from] ArtifactError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("{0}")]
    Callback(String),
}
