use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::smiles::canonicalize;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum SplitSize {
    /// Fraction of the corpus that goes to training; the rest is test.
    TrainFraction(f64),
    Counts { train: usize, test: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub size: SplitSize,
    pub seed: u64,
    /// Canonicalise, drop invalid lines and deduplicate before splitting.
    pub dedup: bool,
}

/// Random disjoint train/test split. With `dedup` the outputs are
/// canonical SMILES; otherwise lines are used as given and must already be
/// distinct.
pub fn split_dataset<S: AsRef<str>>(
    corpus: &[S],
    spec: &SplitSpec,
) -> Result<(Vec<String>, Vec<String>), PipelineError> {
    let mut items: Vec<String> = if spec.dedup {
        let mut seen = BTreeSet::new();
        corpus
            .iter()
            .filter_map(|s| canonicalize(s.as_ref()).ok())
            .filter(|c| seen.insert(c.clone()))
            .collect()
    } else {
        corpus.iter().map(|s| s.as_ref().to_string()).collect()
    };
    let n = items.len();
    let (train, test) = match spec.size {
        SplitSize::TrainFraction(f) => {
            if !(0.0..=1.0).contains(&f) {
                return Err(PipelineError::InvalidConfig(format!("train fraction {f} outside [0, 1]")));
            }
            let train = (n as f64 * f).round() as usize;
            (train, n - train)
        }
        SplitSize::Counts { train, test } => {
            if train + test > n {
                return Err(PipelineError::CorpusTooSmall {
                    need: train + test,
                    have: n,
                });
            }
            (train, test)
        }
    };
    if n == 0 {
        return Err(PipelineError::CorpusTooSmall { need: 1, have: 0 });
    }
    items.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));
    let test_part = items.split_off(train);
    Ok((items, test_part.into_iter().take(test).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus() -> Vec<String> {
        ["C", "CC", "CCC", "CCCC", "CCO", "CCN", "c1ccccc1", "c1ccncc1", "CO", "CN"]
            .iter()
            .map(|s| s.to_string())
            .collect()
    }

    #[test]
    fn half_split_is_disjoint_and_covers_input() {
        let spec = SplitSpec {
            size: SplitSize::TrainFraction(0.5),
            seed: 3,
            dedup: true,
        };
        let (train, test) = split_dataset(&corpus(), &spec).unwrap();
        assert_eq!((train.len(), test.len()), (5, 5));
        let a: BTreeSet<_> = train.iter().collect();
        let b: BTreeSet<_> = test.iter().collect();
        assert!(a.is_disjoint(&b));
        let union: BTreeSet<String> = train.iter().chain(&test).cloned().collect();
        let input: BTreeSet<String> = corpus().iter().map(|s| canonicalize(s).unwrap()).collect();
        assert_eq!(union, input);
        assert_eq!(split_dataset(&corpus(), &spec).unwrap(), (train, test));
    }

    #[test]
    fn dedup_collapses_spellings() {
        let spec = SplitSpec {
            size: SplitSize::Counts { train: 1, test: 1 },
            seed: 0,
            dedup: true,
        };
        let (train, test) = split_dataset(&["CCO", "OCC", "C(O)C", "CN"], &spec).unwrap();
        assert_ne!(train, test);
        let spec = SplitSpec {
            size: SplitSize::Counts { train: 2, test: 1 },
            ..spec
        };
        assert!(matches!(
            split_dataset(&["CCO", "OCC", "CN"], &spec),
            Err(PipelineError::CorpusTooSmall { need: 3, have: 2 })
        ));
    }
}
