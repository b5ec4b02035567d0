use std::collections::BTreeSet;
use std::fs;
use std::sync::OnceLock;

use chemlm::eval::{canonical_set, generation_stats};
use chemlm::lm::{sample_stream, train, Checkpoint, FineTuneConfig, SampleConfig, TrainingConfig};
use chemlm::metrics::Fingerprint;
use chemlm::pipeline::synth::{self, SynthConfig};
use chemlm::pipeline::{
    epoch_sweep, run_cycle, sweep_sample_config, CycleConfig, PipelineError, Scorer, MANIFEST_FILE,
};
use chemlm::tpm::{ActivityClassifier, FingerprintConfig, TpmError};

/// Constant-probability classifier.
struct Constant(f64);

impl ActivityClassifier for Constant {
    fn width(&self) -> usize {
        FingerprintConfig::default().width
    }

    fn probability(&self, _fp: &Fingerprint) -> Result<f64, TpmError> {
        Ok(self.0)
    }
}

static ACCEPT: Constant = Constant(1.0);
static REJECT: Constant = Constant(0.0);

fn scorer(c: &'static Constant) -> Scorer<'static> {
    Scorer {
        classifier: c,
        fingerprint: FingerprintConfig::default(),
    }
}

fn base() -> &'static Checkpoint {
    static BASE: OnceLock<Checkpoint> = OnceLock::new();
    BASE.get_or_init(|| {
        let corpus = synth::generate(&SynthConfig {
            molecules: 200,
            motif_rate: 0.2,
            seed: 5,
        });
        let cfg = TrainingConfig {
            layers: 1,
            hidden: 32,
            dropout: 0.0,
            batch_size: 16,
            unroll: 32,
            learning_rate: 0.01,
            epochs: 6,
            seed: 1,
            ..TrainingConfig::default()
        };
        train(&corpus, &cfg, &mut |_| Ok(())).unwrap()
    })
}

fn small_cycle(iterations: usize) -> CycleConfig {
    CycleConfig {
        iterations,
        sample_symbols: 600,
        temperature: 1.0,
        fine_tune: FineTuneConfig {
            epochs: 2,
            batch_size: 4,
            unroll: 32,
            ..FineTuneConfig::default()
        },
        seed: 3,
    }
}

#[test]
fn accept_all_pool_is_every_distinct_valid_sample() {
    let dir = tempfile::tempdir().unwrap();
    let state = run_cycle(base(), &scorer(&ACCEPT), &small_cycle(2), Some(dir.path())).unwrap();
    assert_eq!(state.log.len(), 3);

    let mut expected = BTreeSet::new();
    for it in 0..3 {
        let it_dir = dir.path().join(format!("iter_{it:03}"));
        let samples = fs::read_to_string(it_dir.join("samples.smi")).unwrap();
        let lines: Vec<&str> = samples.lines().collect();
        let set = canonical_set(&lines);
        let log = &state.log[it];
        assert_eq!(log.sampled, lines.len());
        assert_eq!(log.unique, set.len());
        assert_eq!(log.predicted_active, set.len());
        assert_eq!(log.new_actives, set.difference(&expected).count());
        expected.extend(set);
        assert_eq!(log.pool_size, expected.len());
        let pool = fs::read_to_string(it_dir.join("pool.smi")).unwrap();
        assert_eq!(pool.lines().count(), expected.len());
        let stats = fs::read_to_string(it_dir.join("stats.txt")).unwrap();
        assert!(stats.contains(&format!("pool_size: {}", expected.len())), "{stats}");
        assert_eq!(it_dir.join("checkpoint.clm").exists(), it > 0);
    }
    assert_eq!(state.pool, expected);
    assert!(!dir.path().join("lock").exists());
}

#[test]
fn iteration_zero_samples_the_base_model_only() {
    let cfg = small_cycle(0);
    let state = run_cycle(base(), &scorer(&ACCEPT), &cfg, None).unwrap();
    assert_eq!(state.log.len(), 1);
    assert!(state.checkpoint.is_none());
    let a = run_cycle(base(), &scorer(&ACCEPT), &cfg, None).unwrap();
    assert_eq!(a, state);
}

#[test]
fn resumed_cycle_matches_uninterrupted_run() {
    let full_dir = tempfile::tempdir().unwrap();
    let full = run_cycle(base(), &scorer(&ACCEPT), &small_cycle(2), Some(full_dir.path())).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let first = run_cycle(base(), &scorer(&ACCEPT), &small_cycle(1), Some(dir.path())).unwrap();
    assert_eq!(first.log[..], full.log[..2]);
    let resumed = run_cycle(base(), &scorer(&ACCEPT), &small_cycle(2), Some(dir.path())).unwrap();
    assert_eq!(resumed.log, full.log);
    assert_eq!(resumed.pool, full.pool);
    assert_eq!(
        fs::read(dir.path().join("iter_002/samples.smi")).unwrap(),
        fs::read(full_dir.path().join("iter_002/samples.smi")).unwrap()
    );
}

#[test]
fn state_directory_guards() {
    let dir = tempfile::tempdir().unwrap();
    run_cycle(base(), &scorer(&ACCEPT), &small_cycle(0), Some(dir.path())).unwrap();
    assert!(dir.path().join(MANIFEST_FILE).exists());

    let other = CycleConfig { seed: 99, ..small_cycle(0) };
    let err = run_cycle(base(), &scorer(&ACCEPT), &other, Some(dir.path())).unwrap_err();
    assert!(matches!(err, PipelineError::StateMismatch(_)), "{err}");

    fs::write(dir.path().join("lock"), "").unwrap();
    let err = run_cycle(base(), &scorer(&ACCEPT), &small_cycle(0), Some(dir.path())).unwrap_err();
    assert!(matches!(err, PipelineError::StateLocked(_)), "{err}");
}

#[test]
fn empty_pool_stops_the_cycle() {
    let err = run_cycle(base(), &scorer(&REJECT), &small_cycle(2), None).unwrap_err();
    assert!(matches!(err, PipelineError::EmptyActivePool { iteration: 0 }), "{err}");
}

#[test]
fn sweep_epoch_zero_is_the_base_model() {
    let dir = tempfile::tempdir().unwrap();
    let actives = synth::generate(&SynthConfig {
        molecules: 20,
        motif_rate: 1.0,
        seed: 8,
    });
    let ft = FineTuneConfig {
        epochs: 2,
        batch_size: 4,
        unroll: 32,
        ..FineTuneConfig::default()
    };
    let template = SampleConfig::symbols(500, 4);
    let training: BTreeSet<String> = actives.iter().cloned().collect();
    let sweep = epoch_sweep(base(), &actives, &ft, &template, Some(&scorer(&ACCEPT)), &training, Some(dir.path()))
        .unwrap();
    assert_eq!(sweep.iter().map(|e| e.epoch).collect::<Vec<_>>(), [0, 1, 2]);

    let base_text = sample_stream(base(), &sweep_sample_config(&template, 0)).unwrap();
    let base_lines: Vec<String> = base_text.lines().map(str::to_string).collect();
    assert_eq!(sweep[0].lines, base_lines);
    assert_eq!(sweep[0].stats, generation_stats(&base_lines, &training));
    for e in &sweep {
        assert_eq!(e.predicted_active, Some(e.stats.valid_set.len()));
        let written = fs::read_to_string(dir.path().join(format!("epoch_{:02}.smi", e.epoch))).unwrap();
        assert_eq!(written.lines().count(), e.lines.len());
        let stats = fs::read_to_string(dir.path().join(format!("epoch_{:02}.stats.txt", e.epoch))).unwrap();
        assert!(stats.contains(&format!("valid: {}", e.stats.valid)), "{stats}");
    }
}
