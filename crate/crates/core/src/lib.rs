//! Character-level chemical language models: SMILES handling, an LSTM
//! language model with training, fine-tuning and sampling, fingerprint
//! metrics, a fingerprint classifier and library-level evaluation.

pub mod artifact;
pub mod eval;
pub mod lm;
pub mod metrics;
pub mod nn;
pub mod pipeline;
pub mod seed;
pub mod smiles;
pub mod tpm;
