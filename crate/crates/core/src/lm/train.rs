use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::checkpoint::{Checkpoint, EpochRecord, Phase};
use super::{LmError, Vocabulary};
use crate::nn::{
    adam_step, bptt_gradients, clip_gradients, forward, AdamConfig, AdamState, Architecture, Dropout, Network, NnError,
    SequenceBatch,
};
use crate::seed;

const STREAM_INIT: u64 = 1;
const STREAM_SHUFFLE: u64 = 2;
const STREAM_DROPOUT: u64 = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingConfig {
    pub layers: usize,
    pub hidden: usize,
    pub dropout: f64,
    pub batch_size: usize,
    pub unroll: usize,
    pub clip_norm: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Stop after this many epochs without a lower training loss.
    pub patience: Option<usize>,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            layers: 3,
            hidden: 256,
            dropout: 0.2,
            batch_size: 128,
            unroll: 64,
            clip_norm: 5.0,
            learning_rate: 1e-3,
            epochs: 10,
            seed: 0,
            patience: None,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<(), LmError> {
        let bad = |m: &str| Err(LmError::InvalidConfig(m.to_string()));
        if self.layers == 0 || self.hidden == 0 || self.batch_size == 0 || self.unroll == 0 || self.epochs == 0 {
            return bad("layers, hidden size, batch size, unroll length and epochs must be positive");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must lie in [0, 1)");
        }
        if !(self.clip_norm > 0.0 && self.learning_rate > 0.0) {
            return bad("clip norm and learning rate must be positive");
        }
        if self.patience == Some(0) {
            return bad("patience must be positive");
        }
        Ok(())
    }

    pub fn architecture(&self, vocabulary_size: usize) -> Architecture {
        Architecture::new(vocabulary_size, vec![self.hidden; self.layers], vocabulary_size)
    }
}

/// Settings for continuing training on a small corpus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FineTuneConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub unroll: usize,
    pub clip_norm: f64,
    /// Dropout rate; the base model's rate when absent.
    pub dropout: Option<f64>,
    pub seed: u64,
}

impl Default for FineTuneConfig {
    fn default() -> Self {
        FineTuneConfig {
            epochs: 5,
            learning_rate: 1e-3,
            batch_size: 8,
            unroll: 64,
            clip_norm: 5.0,
            dropout: None,
            seed: 0,
        }
    }
}

/// A corpus line that could not be encoded with the model vocabulary.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedLine {
    /// 1-based line number.
    pub line: usize,
    pub symbol: String,
}

/// Encodes every nonempty line; lines with unknown symbols are reported
/// instead of failing the whole corpus.
pub fn encode_lines<S: AsRef<str>>(vocab: &Vocabulary, lines: &[S]) -> (Vec<Vec<usize>>, Vec<SkippedLine>) {
    let mut encoded = Vec::new();
    let mut skipped = Vec::new();
    for (i, line) in lines.iter().enumerate() {
        let line = line.as_ref().trim_end_matches(['\n', '\r']);
        if line.is_empty() {
            continue;
        }
        match vocab.encode(line) {
            Ok(seq) => encoded.push(seq),
            Err(LmError::UnknownSymbol { symbol, .. }) => skipped.push(SkippedLine { line: i + 1, symbol }),
            Err(e) => unreachable!("encode only reports unknown symbols: {e}"),
        }
    }
    (encoded, skipped)
}

/// Concatenated training text for one epoch: EOL, then every molecule
/// followed by EOL, in an order drawn from `rng`. Reordering each epoch
/// keeps the model from learning which molecule follows which.
fn symbol_stream(eol: usize, molecules: &[Vec<usize>], rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut order: Vec<usize> = (0..molecules.len()).collect();
    order.shuffle(rng);
    let mut stream = Vec::with_capacity(1 + molecules.iter().map(|m| m.len() + 1).sum::<usize>());
    stream.push(eol);
    for i in order {
        stream.extend_from_slice(&molecules[i]);
        stream.push(eol);
    }
    stream
}

/// Start offsets of contiguous windows of `unroll` inputs (each with its
/// `unroll` shifted targets). The last window is aligned to the end of the
/// stream so every symbol is predicted at least once; a stream shorter than
/// the unroll length forms a single shorter window.
pub fn window_starts(stream_len: usize, unroll: usize) -> (Vec<usize>, usize) {
    if stream_len < 2 {
        return (Vec::new(), 0);
    }
    let predictable = stream_len - 1;
    if predictable <= unroll {
        return (vec![0], predictable);
    }
    let mut starts: Vec<usize> = (0..).map(|i| i * unroll).take_while(|s| s + unroll <= predictable).collect();
    let last = predictable - unroll;
    if *starts.last().expect("at least one window") != last {
        starts.push(last);
    }
    (starts, unroll)
}

struct EpochParams {
    batch_size: usize,
    unroll: usize,
    dropout: f64,
    clip_norm: f64,
    adam: AdamConfig,
    seed: u64,
}

fn run_epoch(
    net: &mut Network<f32>,
    adam: &mut AdamState<f32>,
    molecules: &[Vec<usize>],
    eol: usize,
    params: &EpochParams,
    phase: Phase,
    epoch: usize,
) -> Result<EpochRecord, LmError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(params.seed, &[STREAM_SHUFFLE, epoch as u64]));
    let stream = symbol_stream(eol, molecules, &mut rng);
    let (mut starts, len) = window_starts(stream.len(), params.unroll);
    starts.shuffle(&mut rng);
    let mut loss_sum = 0.0;
    let mut symbols = 0;
    let mut updates = 0;
    for (b, chunk) in starts.chunks(params.batch_size).enumerate() {
        let bsz = chunk.len();
        let n = len * bsz;
        let mut inputs = vec![0; n];
        let mut targets = vec![0; n];
        for (j, &s) in chunk.iter().enumerate() {
            for t in 0..len {
                inputs[t * bsz + j] = stream[s + t];
                targets[t * bsz + j] = stream[s + t + 1];
            }
        }
        let batch = SequenceBatch::new(len, bsz, inputs, targets, vec![true; n])?;
        let dropout = (params.dropout > 0.0).then(|| Dropout {
            rate: params.dropout,
            seed: seed::derive(params.seed, &[STREAM_DROPOUT, epoch as u64, b as u64]),
        });
        let (loss, mut grads) = match bptt_gradients(net, &batch, dropout) {
            Err(NnError::NonFiniteLoss) => return Err(LmError::NonFiniteLoss { epoch, batch: b }),
            other => other?,
        };
        if !grads.all_finite() {
            return Err(LmError::NonFiniteLoss { epoch, batch: b });
        }
        clip_gradients(&mut grads, params.clip_norm);
        adam_step(net, &grads, adam, &params.adam)?;
        loss_sum += loss * n as f64;
        symbols += n;
        updates += 1;
    }
    log::debug!("{phase:?} epoch {epoch}: {updates} updates over {symbols} symbols");
    Ok(EpochRecord {
        phase,
        epoch,
        loss: if symbols == 0 { 0.0 } else { loss_sum / symbols as f64 },
        symbols,
        updates,
    })
}

/// Trains a model from scratch on `lines`, with a vocabulary built from the
/// corpus. `on_epoch` sees the checkpoint after every epoch.
pub fn train<S: AsRef<str>>(
    lines: &[S],
    config: &TrainingConfig,
    on_epoch: &mut dyn FnMut(&Checkpoint) -> Result<(), LmError>,
) -> Result<Checkpoint, LmError> {
    let vocab = Vocabulary::build(lines)?;
    train_with_vocabulary(vocab, lines, config, on_epoch)
}

/// Trains from scratch with a fixed vocabulary; every corpus symbol must be
/// in it.
pub fn train_with_vocabulary<S: AsRef<str>>(
    vocabulary: Vocabulary,
    lines: &[S],
    config: &TrainingConfig,
    on_epoch: &mut dyn FnMut(&Checkpoint) -> Result<(), LmError>,
) -> Result<Checkpoint, LmError> {
    config.validate()?;
    let (molecules, skipped) = encode_lines(&vocabulary, lines);
    if let Some(first) = skipped.first() {
        return Err(LmError::VocabularyMismatch(format!(
            "{} corpus lines use symbols outside the vocabulary (first: line {}, symbol {:?})",
            skipped.len(),
            first.line,
            first.symbol
        )));
    }
    if molecules.is_empty() {
        return Err(LmError::EmptyCorpus);
    }
    let eol = vocabulary.eol();
    let network = Network::init(
        &config.architecture(vocabulary.len()),
        seed::derive(config.seed, &[STREAM_INIT]),
    );
    let mut ck = Checkpoint {
        optimizer: Some(AdamState::new(&network)),
        vocabulary,
        network,
        config: config.clone(),
        history: Vec::new(),
    };
    let params = EpochParams {
        batch_size: config.batch_size,
        unroll: config.unroll,
        dropout: config.dropout,
        clip_norm: config.clip_norm,
        adam: AdamConfig {
            learning_rate: config.learning_rate,
            ..AdamConfig::default()
        },
        seed: config.seed,
    };
    let mut best = f64::INFINITY;
    let mut stale = 0;
    for epoch in 1..=config.epochs {
        let adam = ck.optimizer.as_mut().expect("optimizer present during training");
        let record = run_epoch(&mut ck.network, adam, &molecules, eol, &params, Phase::Train, epoch)?;
        log::info!("epoch {epoch}: loss {:.4} nats/symbol", record.loss);
        let loss = record.loss;
        ck.history.push(record);
        on_epoch(&ck)?;
        if loss < best {
            best = loss;
            stale = 0;
        } else {
            stale += 1;
            if config.patience.is_some_and(|p| stale >= p) {
                log::info!("stopping after epoch {epoch}: no improvement for {stale} epochs");
                break;
            }
        }
    }
    Ok(ck)
}

#[derive(Clone, Debug)]
pub struct FineTuneOutcome {
    pub checkpoint: Checkpoint,
    pub skipped: Vec<SkippedLine>,
}

/// Continues training `base` on a small corpus with fresh optimizer
/// moments. `on_epoch(e, ck)` is called for epoch 0 (the base parameters)
/// and after each fine-tuning epoch.
pub fn fine_tune<S: AsRef<str>>(
    base: &Checkpoint,
    lines: &[S],
    config: &FineTuneConfig,
    on_epoch: &mut dyn FnMut(usize, &Checkpoint) -> Result<(), LmError>,
) -> Result<FineTuneOutcome, LmError> {
    let dropout = config.dropout.unwrap_or(base.config.dropout);
    if config.batch_size == 0 || config.unroll == 0 || !(0.0..1.0).contains(&dropout) || config.learning_rate <= 0.0 {
        return Err(LmError::InvalidConfig(
            "fine-tuning needs a positive batch size, unroll length and learning rate, and dropout in [0, 1)".into(),
        ));
    }
    let (molecules, skipped) = encode_lines(&base.vocabulary, lines);
    for s in &skipped {
        log::warn!("skipping line {}: symbol {:?} is not in the model vocabulary", s.line, s.symbol);
    }
    if molecules.is_empty() {
        return Err(LmError::VocabularyMismatch(match skipped.first() {
            Some(first) => format!(
                "all {} lines were skipped (first: line {}, symbol {:?})",
                skipped.len(),
                first.line,
                first.symbol
            ),
            None => "the fine-tuning corpus is empty".to_string(),
        }));
    }
    let eol = base.vocabulary.eol();
    let mut ck = base.clone();
    ck.optimizer = Some(AdamState::new(&ck.network));
    let params = EpochParams {
        batch_size: config.batch_size,
        unroll: config.unroll,
        dropout,
        clip_norm: config.clip_norm,
        adam: AdamConfig {
            learning_rate: config.learning_rate,
            ..AdamConfig::default()
        },
        seed: config.seed,
    };
    on_epoch(0, &ck)?;
    for epoch in 1..=config.epochs {
        let adam = ck.optimizer.as_mut().expect("optimizer present during training");
        let record = run_epoch(&mut ck.network, adam, &molecules, eol, &params, Phase::FineTune, epoch)?;
        log::info!("fine-tune epoch {epoch}: loss {:.4} nats/symbol", record.loss);
        ck.history.push(record);
        on_epoch(epoch, &ck)?;
    }
    Ok(FineTuneOutcome { checkpoint: ck, skipped })
}

/// Per-molecule loss of a model on a corpus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    /// Mean negative log-likelihood per predicted symbol, in nats.
    pub nats_per_symbol: f64,
    pub symbols: usize,
    pub molecules: usize,
    pub skipped: Vec<SkippedLine>,
}

/// Scores each line independently: the model starts from the zero state
/// with EOL as input and predicts every symbol of the line and the final
/// EOL. No dropout.
pub fn evaluate_loss<S: AsRef<str>>(model: &Checkpoint, lines: &[S]) -> Result<LossReport, LmError> {
    const CHUNK: usize = 64;
    let (molecules, skipped) = encode_lines(&model.vocabulary, lines);
    let eol = model.vocabulary.eol();
    let mut total = 0.0;
    let mut symbols = 0;
    for chunk in molecules.chunks(CHUNK) {
        let seqs: Vec<(Vec<usize>, Vec<usize>)> = chunk
            .iter()
            .map(|m| {
                let mut x = vec![eol];
                x.extend_from_slice(m);
                let mut y = m.clone();
                y.push(eol);
                (x, y)
            })
            .collect();
        let batch = SequenceBatch::from_sequences(&seqs)?;
        let cache = forward(&model.network, &batch, None)?;
        total += cache.loss_sum();
        symbols += cache.valid_count();
    }
    Ok(LossReport {
        nats_per_symbol: if symbols == 0 { 0.0 } else { total / symbols as f64 },
        symbols,
        molecules: molecules.len(),
        skipped,
    })
}
