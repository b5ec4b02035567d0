use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::checkpoint::Checkpoint;
use super::LmError;
use crate::nn::softmax;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopCriterion {
    /// Generate this many symbols (EOL included); an unfinished last line
    /// is dropped.
    Symbols(usize),
    /// Generate this many complete lines.
    Molecules(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedPolicy {
    /// The first input is EOL, as if a previous line had just ended.
    #[default]
    Eol,
    /// The first input is a uniformly drawn non-EOL symbol, which also
    /// starts the first line.
    RandomSymbol,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleConfig {
    pub stop: StopCriterion,
    pub temperature: f64,
    pub seed: u64,
    #[serde(default)]
    pub seed_policy: SeedPolicy,
    /// Lines reaching this many symbols are cut and ended with EOL.
    pub max_line_symbols: usize,
}

impl SampleConfig {
    pub fn molecules(count: usize, seed: u64) -> Self {
        SampleConfig {
            stop: StopCriterion::Molecules(count),
            temperature: 1.0,
            seed,
            seed_policy: SeedPolicy::Eol,
            max_line_symbols: 400,
        }
    }

    pub fn symbols(count: usize, seed: u64) -> Self {
        SampleConfig {
            stop: StopCriterion::Symbols(count),
            ..Self::molecules(0, seed)
        }
    }

    pub fn with_temperature(mut self, temperature: f64) -> Self {
        self.temperature = temperature;
        self
    }
}

/// Index drawn from `probs` with the uniform variate `u` in `[0, 1)`.
fn categorical(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (k, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

/// Generates text symbol by symbol from the zero state, feeding each drawn
/// symbol back as the next input. Returns LF-terminated lines.
pub fn sample_stream(model: &Checkpoint, config: &SampleConfig) -> Result<String, LmError> {
    if !(config.temperature > 0.0 && config.temperature.is_finite()) {
        return Err(LmError::InvalidConfig(format!(
            "temperature must be positive, got {}",
            config.temperature
        )));
    }
    if config.max_line_symbols == 0 {
        return Err(LmError::InvalidConfig("maximum line length must be positive".into()));
    }
    let vocab = &model.vocabulary;
    let net = &model.network;
    let eol = vocab.eol();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut state = net.initial_state();
    let mut out = String::new();
    let mut line = String::new();
    let mut line_symbols = 0usize;
    let mut emitted = 0usize;
    let mut lines = 0usize;
    let done = |emitted: usize, lines: usize| match config.stop {
        StopCriterion::Symbols(n) => emitted >= n,
        StopCriterion::Molecules(n) => lines >= n,
    };

    let mut input = eol;
    if config.seed_policy == SeedPolicy::RandomSymbol && vocab.len() > 1 && !done(0, 0) {
        let mut k = rng.gen_range(0..vocab.len() - 1);
        if k >= eol {
            k += 1;
        }
        line.push_str(vocab.symbol(k).expect("index in range"));
        line_symbols = 1;
        emitted = 1;
        input = k;
    }
    while !done(emitted, lines) {
        let logits = net.step_symbol(&mut state, input)?;
        let logits: Vec<f64> = logits.iter().map(|&v| v as f64).collect();
        let probs = softmax(&logits, config.temperature)?;
        let mut k = categorical(&probs, rng.gen::<f64>());
        if k != eol && line_symbols + 1 >= config.max_line_symbols {
            line.push_str(vocab.symbol(k).expect("index in range"));
            k = eol;
        }
        emitted += 1;
        if k == eol {
            out.push_str(&line);
            out.push('\n');
            line.clear();
            line_symbols = 0;
            lines += 1;
        } else {
            line.push_str(vocab.symbol(k).expect("index in range"));
            line_symbols += 1;
        }
        input = k;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn categorical_picks_by_cumulative_mass() {
        let p = [0.2, 0.0, 0.5, 0.3];
        assert_eq!(categorical(&p, 0.0), 0);
        assert_eq!(categorical(&p, 0.19), 0);
        assert_eq!(categorical(&p, 0.2), 2);
        assert_eq!(categorical(&p, 0.69), 2);
        assert_eq!(categorical(&p, 0.7), 3);
        assert_eq!(categorical(&[0.5, 0.49999], 0.999999), 1);
    }
}
