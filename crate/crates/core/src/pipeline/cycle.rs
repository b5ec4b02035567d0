use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::artifact::fnv1a64;
use crate::eval::{generation_stats, GenerationStats, Report};
use crate::lm::{fine_tune, sample_stream, Checkpoint, FineTuneConfig, LmError, SampleConfig};
use crate::seed;
use crate::tpm::{ActivityClassifier, FingerprintConfig, LogisticRegression, TpmError};

pub const MANIFEST_FILE: &str = "manifest.json";
const LOCK_FILE: &str = "lock";
const STATE_FILE: &str = "state.json";
const CHECKPOINT_FILE: &str = "checkpoint.clm";

const STREAM_CYCLE_SAMPLE: u64 = 10;
const STREAM_CYCLE_FINE_TUNE: u64 = 11;
const STREAM_SWEEP_SAMPLE: u64 = 12;

/// A classifier together with the fingerprint it expects.
#[derive(Clone, Copy)]
pub struct Scorer<'a> {
    pub classifier: &'a dyn ActivityClassifier,
    pub fingerprint: FingerprintConfig,
}

impl<'a> Scorer<'a> {
    pub fn from_model(model: &'a LogisticRegression) -> Self {
        Scorer {
            classifier: model,
            fingerprint: model.fingerprint,
        }
    }

    /// `None` for strings that are not valid molecules.
    pub fn is_active(&self, smiles: &str) -> Result<Option<bool>, TpmError> {
        match self.fingerprint.fingerprint(smiles) {
            Some(fp) => Ok(Some(self.classifier.predict(&fp)?.1)),
            None => Ok(None),
        }
    }

    /// Members of `molecules` predicted active.
    pub fn predicted_actives(&self, molecules: &BTreeSet<String>) -> Result<BTreeSet<String>, TpmError> {
        let all: Vec<&String> = molecules.iter().collect();
        let flags = all
            .par_iter()
            .map(|s| self.is_active(s))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(all
            .into_iter()
            .zip(flags)
            .filter(|(_, f)| *f == Some(true))
            .map(|(s, _)| s.clone())
            .collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleConfig {
    /// Fine-tune / sample / select rounds after the unbiased iteration 0.
    pub iterations: usize,
    /// Symbols drawn per sampling round (iteration 0, and after each
    /// fine-tuning epoch of later iterations).
    pub sample_symbols: usize,
    pub temperature: f64,
    pub fine_tune: FineTuneConfig,
    pub seed: u64,
}

impl Default for CycleConfig {
    fn default() -> Self {
        CycleConfig {
            iterations: 3,
            sample_symbols: 10_000,
            temperature: 1.0,
            fine_tune: FineTuneConfig::default(),
            seed: 0,
        }
    }
}

impl CycleConfig {
    fn sample_config(&self, iteration: usize, epoch: usize) -> SampleConfig {
        SampleConfig::symbols(
            self.sample_symbols,
            seed::derive(self.seed, &[STREAM_CYCLE_SAMPLE, iteration as u64, epoch as u64]),
        )
        .with_temperature(self.temperature)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationLog {
    pub iteration: usize,
    pub sampled: usize,
    pub valid: usize,
    /// Distinct valid molecules.
    pub unique: usize,
    /// Distinct valid molecules the classifier calls active.
    pub predicted_active: usize,
    /// Predicted actives not already in the pool.
    pub new_actives: usize,
    pub pool_size: usize,
}

impl IterationLog {
    pub fn predicted_active_ratio(&self) -> f64 {
        if self.unique == 0 {
            0.0
        } else {
            self.predicted_active as f64 / self.unique as f64
        }
    }

    fn report(&self) -> Report {
        let mut r = Report::new();
        r.push("iteration", self.iteration);
        r.push("sampled", self.sampled);
        r.push("valid", self.valid);
        r.push("unique", self.unique);
        r.push("predicted_active", self.predicted_active);
        r.push("predicted_active_ratio", format!("{:.6}", self.predicted_active_ratio()));
        r.push("new_actives", self.new_actives);
        r.push("pool_size", self.pool_size);
        r
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CycleState {
    /// Cumulative pool of predicted actives (canonical SMILES).
    pub pool: BTreeSet<String>,
    pub log: Vec<IterationLog>,
    /// Latest fine-tuned checkpoint on disk, when a state directory is used.
    pub checkpoint: Option<PathBuf>,
}

#[derive(Serialize, Deserialize, PartialEq, Debug)]
struct Manifest {
    config: CycleConfig,
    fingerprint: FingerprintConfig,
    base_checkpoint_fnv1a64: String,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_atomic(path: &Path, text: &str) -> Result<(), PipelineError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, text).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    let text = serde_json::to_string_pretty(value).map_err(|source| PipelineError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    write_atomic(path, &text)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, PipelineError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|source| PipelineError::Json {
        path: path.to_path_buf(),
        source,
    })
}

fn lines_text<'a>(lines: impl IntoIterator<Item = &'a String>) -> String {
    let mut out = String::new();
    for l in lines {
        out.push_str(l);
        out.push('\n');
    }
    out
}

/// Exclusive ownership of a state directory for the lifetime of a run.
struct StateLock {
    path: PathBuf,
}

impl StateLock {
    fn acquire(dir: &Path) -> Result<Self, PipelineError> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let path = dir.join(LOCK_FILE);
        match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(StateLock { path }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(PipelineError::StateLocked(dir.to_path_buf())),
            Err(e) => Err(io_err(&path)(e)),
        }
    }
}

impl Drop for StateLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

fn iteration_dir(dir: &Path, iteration: usize) -> PathBuf {
    dir.join(format!("iter_{iteration:03}"))
}

/// Loads the last completed iteration from `dir`, checking that the
/// directory was created for the same run.
fn resume(
    dir: &Path,
    manifest: &Manifest,
    base: &Checkpoint,
) -> Result<(CycleState, Checkpoint), PipelineError> {
    let manifest_path = dir.join(MANIFEST_FILE);
    if manifest_path.exists() {
        let mut stored: Manifest = read_json(&manifest_path)?;
        // The iteration count may grow between runs.
        stored.config.iterations = manifest.config.iterations;
        if stored != *manifest {
            return Err(PipelineError::StateMismatch(format!(
                "{} does not match the requested configuration, base checkpoint or classifier fingerprint",
                manifest_path.display()
            )));
        }
    }
    write_json(&manifest_path, manifest)?;
    let mut last = None;
    let mut k = 0;
    while iteration_dir(dir, k).join(STATE_FILE).exists() {
        last = Some(k);
        k += 1;
    }
    let Some(k) = last else {
        return Ok((CycleState::default(), base.clone()));
    };
    let state: CycleState = read_json(&iteration_dir(dir, k).join(STATE_FILE))?;
    let model = match &state.checkpoint {
        Some(path) => Checkpoint::load(path)?,
        None => base.clone(),
    };
    log::info!("resuming cycle after iteration {k} (pool {})", state.pool.len());
    Ok((state, model))
}

/// Runs iteration 0 (sample the unbiased model, keep predicted actives)
/// followed by `config.iterations` rounds of fine-tuning on the cumulative
/// pool, sampling after every epoch and adding new predicted actives.
/// Fine-tuning continues from the latest fine-tuned model. With a state
/// directory every finished iteration is persisted, and a rerun resumes
/// after the last finished one.
pub fn run_cycle(
    base: &Checkpoint,
    scorer: &Scorer<'_>,
    config: &CycleConfig,
    state_dir: Option<&Path>,
) -> Result<CycleState, PipelineError> {
    if config.sample_symbols == 0 {
        return Err(PipelineError::InvalidConfig("sample_symbols must be positive".into()));
    }
    let _lock = state_dir.map(StateLock::acquire).transpose()?;
    let (mut state, mut model) = match state_dir {
        Some(dir) => {
            let manifest = Manifest {
                config: config.clone(),
                fingerprint: scorer.fingerprint,
                base_checkpoint_fnv1a64: format!("{:016x}", fnv1a64(&base.to_bytes()?)),
            };
            resume(dir, &manifest, base)?
        }
        None => (CycleState::default(), base.clone()),
    };

    for iteration in state.log.len()..=config.iterations {
        let mut lines: Vec<String> = Vec::new();
        if iteration == 0 {
            lines.extend(sample_stream(base, &config.sample_config(0, 0))?.lines().map(str::to_string));
        } else {
            let pool: Vec<&String> = state.pool.iter().collect();
            let ft = FineTuneConfig {
                seed: seed::derive(config.seed, &[STREAM_CYCLE_FINE_TUNE, iteration as u64]),
                ..config.fine_tune.clone()
            };
            let outcome = fine_tune(&model, &pool, &ft, &mut |epoch, ck| {
                if epoch > 0 {
                    let text = sample_stream(ck, &config.sample_config(iteration, epoch))?;
                    lines.extend(text.lines().map(str::to_string));
                }
                Ok::<(), LmError>(())
            })?;
            model = outcome.checkpoint;
            model.optimizer = None;
        }
        let stats = generation_stats(&lines, &BTreeSet::new());
        let actives = scorer.predicted_actives(&stats.valid_set)?;
        let new_actives = actives.difference(&state.pool).count();
        state.pool.extend(actives.iter().cloned());
        let entry = IterationLog {
            iteration,
            sampled: stats.lines,
            valid: stats.valid,
            unique: stats.valid_set.len(),
            predicted_active: actives.len(),
            new_actives,
            pool_size: state.pool.len(),
        };
        log::info!(
            "cycle iteration {iteration}: {} sampled, {} unique valid, {} predicted active ({:.3}), pool {}",
            entry.sampled,
            entry.unique,
            entry.predicted_active,
            entry.predicted_active_ratio(),
            entry.pool_size
        );
        if let Some(dir) = state_dir {
            let it_dir = iteration_dir(dir, iteration);
            fs::create_dir_all(&it_dir).map_err(io_err(&it_dir))?;
            write_atomic(&it_dir.join("samples.smi"), &lines_text(&lines))?;
            write_atomic(&it_dir.join("pool.smi"), &lines_text(&state.pool))?;
            let mut report = entry.report();
            stats.write_report(&mut report);
            write_atomic(&it_dir.join("stats.txt"), &report.to_string())?;
            if iteration > 0 {
                let path = it_dir.join(CHECKPOINT_FILE);
                model.save(&path)?;
                state.checkpoint = Some(path);
            }
        }
        state.log.push(entry);
        if let Some(dir) = state_dir {
            write_json(&iteration_dir(dir, iteration).join(STATE_FILE), &state)?;
        }
        if state.pool.is_empty() {
            return Err(PipelineError::EmptyActivePool { iteration });
        }
    }
    Ok(state)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepEpoch {
    pub epoch: usize,
    pub lines: Vec<String>,
    pub stats: GenerationStats,
    /// Distinct valid molecules predicted active, when a scorer is given.
    pub predicted_active: Option<usize>,
}

impl SweepEpoch {
    pub fn predicted_active_ratio(&self) -> Option<f64> {
        let unique = self.stats.valid_set.len();
        self.predicted_active
            .map(|a| if unique == 0 { 0.0 } else { a as f64 / unique as f64 })
    }
}

/// Sampling settings used after fine-tuning epoch `epoch` of a sweep.
pub fn sweep_sample_config(template: &SampleConfig, epoch: usize) -> SampleConfig {
    SampleConfig {
        seed: seed::derive(template.seed, &[STREAM_SWEEP_SAMPLE, epoch as u64]),
        ..template.clone()
    }
}

/// Fine-tunes `base` on `actives` and samples after every epoch (epoch 0 is
/// the base model). Novelty is measured against `training`. With `out_dir`
/// each epoch's samples and stats are written as `epoch_NN.smi` and
/// `epoch_NN.stats.txt`.
pub fn epoch_sweep<S: AsRef<str>>(
    base: &Checkpoint,
    actives: &[S],
    fine_tune_config: &FineTuneConfig,
    sample: &SampleConfig,
    scorer: Option<&Scorer<'_>>,
    training: &BTreeSet<String>,
    out_dir: Option<&Path>,
) -> Result<Vec<SweepEpoch>, PipelineError> {
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let mut epochs = Vec::new();
    let mut failure: Option<PipelineError> = None;
    let result = fine_tune(base, actives, fine_tune_config, &mut |epoch, ck| {
        let text = sample_stream(ck, &sweep_sample_config(sample, epoch))?;
        let lines: Vec<String> = text.lines().map(str::to_string).collect();
        let stats = generation_stats(&lines, training);
        let predicted_active = match scorer {
            Some(s) => match s.predicted_actives(&stats.valid_set) {
                Ok(a) => Some(a.len()),
                Err(e) => {
                    let msg = e.to_string();
                    failure = Some(e.into());
                    return Err(LmError::Callback(msg));
                }
            },
            None => None,
        };
        let sweep = SweepEpoch {
            epoch,
            lines,
            stats,
            predicted_active,
        };
        if let Some(dir) = out_dir {
            let mut report = Report::new();
            report.push("epoch", epoch);
            sweep.stats.write_report(&mut report);
            if let (Some(a), Some(r)) = (sweep.predicted_active, sweep.predicted_active_ratio()) {
                report.push("predicted_active", a);
                report.push("predicted_active_ratio", format!("{r:.6}"));
            }
            let write = |name: String, text: String| {
                let path = dir.join(name);
                fs::write(&path, text).map_err(|e| LmError::Callback(format!("{}: {e}", path.display())))
            };
            write(format!("epoch_{epoch:02}.smi"), lines_text(&sweep.lines))?;
            write(format!("epoch_{epoch:02}.stats.txt"), report.to_string())?;
        }
        log::info!(
            "sweep epoch {epoch}: {} lines, {} valid, ratio {:?}",
            sweep.stats.lines,
            sweep.stats.valid,
            sweep.predicted_active_ratio()
        );
        epochs.push(sweep);
        Ok(())
    });
    match (result, failure) {
        (_, Some(e)) => Err(e),
        (Err(e), None) => Err(e.into()),
        (Ok(_), None) => Ok(epochs),
    }
}
