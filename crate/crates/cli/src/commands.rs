use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use chemlm::eval::{
    canonical_set, edit_distance_histogram, generation_stats, reproduction_ratio, similarity_histogram,
    EnrichmentReport, Report,
};
use chemlm::lm::{fine_tune, sample_stream, train, Checkpoint, SampleConfig, StopCriterion, Vocabulary};
use chemlm::metrics::{descriptor_csv, descriptors, ecfp, fingerprint_csv, Fingerprint};
use chemlm::pipeline::{
    epoch_sweep, run_cycle, split_dataset, synth, CycleConfig, Scorer, SplitSize, SplitSpec,
};
use chemlm::smiles::{canonical_smiles, parse_valid};
use chemlm::tpm::{
    cross_validate, label_by_threshold, parse_activity_csv, ActivityClassifier, FingerprintConfig, FitConfig,
    LogisticRegression, Measure, ThresholdRule,
};

use crate::config::{resolve, Resolved};
use crate::manifest::{unix_now, FileDigest, RunManifest};
use crate::options::*;
use crate::{Cli, CliError, Command};

/// Input/output bookkeeping for one run: every byte read or written goes
/// through here so the manifest can record its digest.
pub(crate) struct Ctx<'a> {
    out_dir: PathBuf,
    stdin: &'a mut dyn Read,
    stdout: &'a mut dyn Write,
    inputs: Vec<FileDigest>,
    outputs: Vec<FileDigest>,
}

fn data<E: std::fmt::Display>(context: impl std::fmt::Display) -> impl FnOnce(E) -> CliError {
    move |e| CliError::Data(format!("{context}: {e}"))
}

fn required<'s>(value: &'s str, name: &str) -> Result<&'s str, CliError> {
    if value.is_empty() {
        Err(CliError::Usage(format!("--{} is required", name.replace('_', "-"))))
    } else {
        Ok(value)
    }
}

impl Ctx<'_> {
    fn read(&mut self, path: &str) -> Result<Vec<u8>, CliError> {
        let bytes = if path == "-" {
            let mut buf = Vec::new();
            self.stdin.read_to_end(&mut buf).map_err(data("<stdin>"))?;
            buf
        } else {
            fs::read(path).map_err(data(path))?
        };
        self.inputs.push(FileDigest::of(path, &bytes));
        Ok(bytes)
    }

    fn read_text(&mut self, path: &str) -> Result<String, CliError> {
        String::from_utf8(self.read(path)?).map_err(data(path))
    }

    /// Non-blank lines with their 1-based line numbers.
    fn read_lines(&mut self, path: &str) -> Result<Vec<(usize, String)>, CliError> {
        Ok(self
            .read_text(path)?
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim().to_string()))
            .filter(|(_, l)| !l.is_empty())
            .collect())
    }

    fn read_smiles(&mut self, path: &str) -> Result<Vec<String>, CliError> {
        Ok(self.read_lines(path)?.into_iter().map(|(_, l)| l).collect())
    }

    fn read_checkpoint(&mut self, path: &str) -> Result<Checkpoint, CliError> {
        Checkpoint::from_bytes(&self.read(path)?).map_err(data(path))
    }

    fn read_tpm(&mut self, path: &str) -> Result<LogisticRegression, CliError> {
        LogisticRegression::from_bytes(&self.read(path)?).map_err(data(path))
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        if name == "-" {
            self.stdout.write_all(bytes).map_err(data("<stdout>"))?;
        } else {
            let path = self.path(name);
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent).map_err(data(parent.display()))?;
            }
            fs::write(&path, bytes).map_err(data(path.display()))?;
        }
        self.outputs.push(FileDigest::of(name, bytes));
        Ok(())
    }
}

fn lines_text<'a>(lines: impl IntoIterator<Item = &'a String>) -> String {
    let mut out = String::new();
    for l in lines {
        out.push_str(l);
        out.push('\n');
    }
    out
}

/// Resolves options for `command` from defaults, the config file and flags.
fn layered<T: Serialize + DeserializeOwned + Default, A: Serialize>(
    cli: &Cli,
    command: &str,
    args: &A,
) -> Result<(Resolved<T>, Option<String>), CliError> {
    let (section, file) = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            let table: toml::Table =
                toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            (table.get(command).cloned(), Some(path.display().to_string()))
        }
        None => (None, None),
    };
    let mut flags = serde_json::to_value(args).expect("flags serialise");
    if let (Some(seed), Value::Object(m)) = (cli.seed, &mut flags) {
        m.insert("seed".into(), Value::from(seed));
    }
    Ok((resolve(section.as_ref(), command, flags)?, file))
}

fn command_name(command: &Command) -> &'static str {
    match command {
        Command::Canon(_) => "canon",
        Command::Vocab(_) => "vocab",
        Command::Train(_) => "train",
        Command::Finetune(_) => "finetune",
        Command::Sample(_) => "sample",
        Command::Fp(_) => "fp",
        Command::TpmFit(_) => "tpm-fit",
        Command::TpmPredict(_) => "tpm-predict",
        Command::Split(_) => "split",
        Command::Eval(_) => "eval",
        Command::Cycle(_) => "cycle",
        Command::Sweep(_) => "sweep",
        Command::Synth(_) => "synth",
        Command::Replay(_) => "replay",
    }
}

pub(crate) fn execute(cli: &Cli, argv: &[String], stdin: &mut dyn Read, stdout: &mut dyn Write) -> Result<(), CliError> {
    let name = command_name(&cli.command);
    let started = unix_now();
    let mut ctx = Ctx {
        out_dir: cli.out_dir.clone(),
        stdin,
        stdout,
        inputs: Vec::new(),
        outputs: Vec::new(),
    };
    macro_rules! resolved {
        ($ty:ty, $args:expr) => {{
            let (r, file) = layered::<$ty, _>(cli, name, $args)?;
            (serde_json::to_value(&r.options).expect("options serialise"), r.sources, file)
        }};
    }
    let (config, sources, config_file) = match &cli.command {
        Command::Replay(args) => return replay(cli, argv, &args.manifest, &mut ctx),
        Command::Canon(a) => resolved!(CanonOptions, a),
        Command::Vocab(a) => resolved!(VocabOptions, a),
        Command::Train(a) => resolved!(TrainOptions, a),
        Command::Finetune(a) => resolved!(FinetuneOptions, a),
        Command::Sample(a) => resolved!(SampleOptions, a),
        Command::Fp(a) => resolved!(FpOptions, a),
        Command::TpmFit(a) => resolved!(TpmFitOptions, a),
        Command::TpmPredict(a) => resolved!(TpmPredictOptions, a),
        Command::Split(a) => resolved!(SplitOptions, a),
        Command::Eval(a) => resolved!(EvalOptions, a),
        Command::Cycle(a) => resolved!(CycleOptions, a),
        Command::Sweep(a) => resolved!(SweepOptions, a),
        Command::Synth(a) => resolved!(SynthOptions, a),
    };
    dispatch(name, &config, &mut ctx)?;
    let manifest = RunManifest {
        command: name.to_string(),
        toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
        argv: argv.to_vec(),
        seed: config.get("seed").and_then(Value::as_u64),
        config,
        config_sources: sources,
        config_file,
        inputs: ctx.inputs.clone(),
        outputs: ctx.outputs.clone(),
        started_unix: started,
        finished_unix: unix_now(),
    };
    write_manifest(&ctx.out_dir, &manifest)
}

fn write_manifest(out_dir: &Path, manifest: &RunManifest) -> Result<(), CliError> {
    let path = out_dir.join(format!("{}.manifest.json", manifest.command));
    fs::create_dir_all(out_dir).map_err(data(out_dir.display()))?;
    let text = serde_json::to_string_pretty(manifest).expect("manifest serialises");
    fs::write(&path, text + "\n").map_err(data(path.display()))
}

fn options<T: DeserializeOwned>(config: &Value) -> Result<T, CliError> {
    serde_json::from_value(config.clone()).map_err(|e| CliError::Usage(format!("invalid options: {e}")))
}

fn dispatch(name: &str, config: &Value, ctx: &mut Ctx) -> Result<(), CliError> {
    match name {
        "canon" => canon(options(config)?, ctx),
        "vocab" => vocab(options(config)?, ctx),
        "train" => train_cmd(options(config)?, ctx),
        "finetune" => finetune(options(config)?, ctx),
        "sample" => sample(options(config)?, ctx),
        "fp" => fp(options(config)?, ctx),
        "tpm-fit" => tpm_fit(options(config)?, ctx),
        "tpm-predict" => tpm_predict(options(config)?, ctx),
        "split" => split(options(config)?, ctx),
        "eval" => eval(options(config)?, ctx),
        "cycle" => cycle(options(config)?, ctx),
        "sweep" => sweep(options(config)?, ctx),
        "synth" => synth_cmd(options(config)?, ctx),
        other => Err(CliError::Usage(format!("unknown command {other:?}"))),
    }
}

/// Re-runs a manifest's command with its recorded options into the current
/// output directory, after checking that the inputs are unchanged, and
/// fails if any output differs from the recorded digest.
fn replay(cli: &Cli, argv: &[String], manifest_path: &Path, ctx: &mut Ctx) -> Result<(), CliError> {
    let text = fs::read_to_string(manifest_path).map_err(data(manifest_path.display()))?;
    let recorded: RunManifest = serde_json::from_str(&text).map_err(data(manifest_path.display()))?;
    for input in &recorded.inputs {
        if input.path == "-" {
            continue;
        }
        let bytes = fs::read(&input.path).map_err(data(&input.path))?;
        if FileDigest::of(&input.path, &bytes) != *input {
            return Err(CliError::Data(format!("input {} changed since the recorded run", input.path)));
        }
    }
    let started = unix_now();
    dispatch(&recorded.command, &recorded.config, ctx)?;
    let differing: Vec<&str> = recorded
        .outputs
        .iter()
        .filter(|o| !ctx.outputs.contains(o))
        .map(|o| o.path.as_str())
        .collect();
    let manifest = RunManifest {
        argv: argv.to_vec(),
        config_file: None,
        inputs: ctx.inputs.clone(),
        outputs: ctx.outputs.clone(),
        started_unix: started,
        finished_unix: unix_now(),
        ..recorded.clone()
    };
    if cli.out_dir.join(format!("{}.manifest.json", recorded.command)) != manifest_path {
        write_manifest(&ctx.out_dir, &manifest)?;
    }
    if differing.is_empty() {
        log::info!("replay: {} outputs identical to the recorded run", recorded.outputs.len());
        Ok(())
    } else {
        Err(CliError::Data(format!(
            "replay produced different bytes for: {}",
            differing.join(", ")
        )))
    }
}

fn canon(o: CanonOptions, ctx: &mut Ctx) -> Result<(), CliError> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for (line, smiles) in ctx.read_lines(&o.input)? {
        let canonical = match parse_valid(&smiles).and_then(|g| canonical_smiles(&g)) {
            Ok(c) => c,
            Err(e) if o.skip_invalid => {
                log::warn!("{}:{line}: skipped: {e}", o.input);
                continue;
            }
            Err(e) => return Err(CliError::Data(format!("{}:{line}: {smiles:?}: {e}", o.input))),
        };
        if !o.dedup || seen.insert(canonical.clone()) {
            out.push(canonical);
        }
    }
    ctx.write(&o.out, lines_text(&out).as_bytes())
}

fn vocab(o: VocabOptions, ctx: &mut Ctx) -> Result<(), CliError> {
    let lines = ctx.read_smiles(&o.input)?;
    let v = Vocabulary::build(&lines).map_err(data(&o.input))?;
    let text = serde_json::to_string_pretty(&v).expect("vocabulary serialises") + "\n";
    ctx.write(&o.out, text.as_bytes())
}

fn train_cmd(o: TrainOptions, ctx: &mut Ctx) -> Result<(), CliError> {
    let corpus = required(&o.corpus, "corpus")?.to_string();
    let lines = ctx.read_smiles(&corpus)?;
    let cfg = o.training_config();
    let ck = train(&lines, &cfg, &mut |ck| {
        if let Some(r) = ck.history.last() {
            log::info!("epoch {}: {:.4} nats/symbol over {} symbols", r.epoch, r.loss, r.symbols);
        }
        Ok(())
    })
    .map_err(data(&corpus))?;
    let bytes = ck.to_bytes().map_err(data(&o.out))?;
    ctx.write(&o.out, &bytes)
}

fn finetune(o: FinetuneOptions, ctx: &mut Ctx) -> Result<(), CliError> {
    let base = ctx.read_checkpoint(required(&o.base, "base")?)?;
    let corpus = required(&o.corpus, "corpus")?.to_string();
    let lines = ctx.read_smiles(&corpus)?;
    let cfg = fine_tune_config(o.epochs, o.lr, o.batch, o.unroll, o.clip, o.dropout, o.seed);
    let outcome = fine_tune(&base, &lines, &cfg, &mut |_, _| Ok(())).map_err(data(&corpus))?;
    if !outcome.skipped.is_empty() {
        log::warn!("{}: skipped {} lines with symbols outside the model vocabulary", corpus, outcome.skipped.len());
    }
    let bytes = outcome.checkpoint.to_bytes().map_err(data(&o.out))?;
    ctx.write(&o.out, &bytes)
}

fn sample(o: SampleOptions, ctx: &mut Ctx) -> Result<(), CliError> {
    let model = ctx.read_checkpoint(required(&o.model, "model")?)?;
    let stop = match (o.symbols, o.molecules) {
        (Some(_), Some(_)) => return Err(CliError::Usage("give either --symbols or --molecules, not both".into())),
        (Some(n), None) => StopCriterion::Symbols(n),
        (None, Some(n)) => StopCriterion::Molecules(n),
        (None, None) => StopCriterion::Symbols(10_000),
    };
    let cfg = SampleConfig {
        stop,
        temperature: o.temperature,
        seed: o.seed,
        seed_policy: o.seed_policy,
        max_line_symbols: o.max_line_symbols,
    };
    let text = sample_stream(&model, &cfg).map_err(|e| CliError::Usage(e.to_string()))?;
    ctx.write(&o.out, text.as_bytes())
}

fn fp(o: FpOptions, ctx: &mut Ctx) -> Result<(), CliError> {
    let mut graphs = Vec::new();
    for (line, smiles) in ctx.read_lines(&o.input)? {
        let g = parse_valid(&smiles).map_err(|e| CliError::Data(format!("{}:{line}: {smiles:?}: {e}", o.input)))?;
        let c = canonical_smiles(&g).map_err(data(format!("{}:{line}", o.input)))?;
        graphs.push((c, g));
    }
    let text = match o.kind {
        FpKind::Ecfp => {
            if o.width == 0 {
                return Err(CliError::Usage("--width must be positive".into()));
            }
            let rows: Vec<(String, Fingerprint)> =
                graphs.iter().map(|(c, g)| (c.clone(), ecfp(g, o.radius, o.width))).collect();
            fingerprint_csv(&rows)
        }
        FpKind::Descriptors => {
            let rows: Vec<_> = graphs.iter().map(|(c, g)| (c.clone(), descriptors(g))).collect();
            descriptor_csv(&rows)
        }
    };
    ctx.write(&o.out, text.as_bytes())
}

fn tpm_fit(o: TpmFitOptions, ctx: &mut Ctx) -> Result<(), CliError> {
    let path = required(&o.activities, "activities")?.to_string();
    let measure: Measure = o.measure.parse().map_err(|e: chemlm::tpm::TpmError| CliError::Usage(e.to_string()))?;
    let text = ctx.read_text(&path)?;
    let records = parse_activity_csv(&text).map_err(|(line, msg)| CliError::Data(format!("{path}:{line}: {msg}")))?;
    let fingerprint = FingerprintConfig {
        radius: o.radius,
        width: o.width,
    };
    let set = label_by_threshold(&records, ThresholdRule::new(measure, o.cutoff), fingerprint).map_err(data(&path))?;
    for i in &set.invalid_records {
        log::warn!("{path}: record {} is not a valid molecule and was skipped", i + 1);
    }
    let cfg = FitConfig {
        l2: o.l2,
        max_iterations: o.max_iterations,
        tolerance: o.tolerance,
        seed: o.seed,
    };
    let model = LogisticRegression::fit(&set, &cfg).map_err(data(&path))?;
    log::info!(
        "{} molecules ({} active), training accuracy {:.3}",
        set.len(),
        set.actives(),
        model.training_accuracy
    );
    if let Some(folds) = o.cv_folds {
        let acc = cross_validate(&set, folds, &cfg).map_err(data(&path))?;
        log::info!("{folds}-fold cross-validated accuracy {acc:.3}");
    }
    let bytes = model.to_bytes().map_err(data(&o.out))?;
    ctx.write(&o.out, &bytes)
}

fn tpm_predict(o: TpmPredictOptions, ctx: &mut Ctx) -> Result<(), CliError> {
    let model = ctx.read_tpm(required(&o.model, "model")?)?;
    let mut out = String::from("smiles,probability,active\n");
    for (_, smiles) in ctx.read_lines(&o.input)? {
        match model.fingerprint.fingerprint(&smiles) {
            Some(fp) => {
                let (p, active) = model.predict(&fp).map_err(data(&o.input))?;
                let _ = writeln!(out, "{smiles},{p:.6},{}", u8::from(active));
            }
            None => {
                let _ = writeln!(out, "{smiles},,");
            }
        }
    }
    ctx.write(&o.out, out.as_bytes())
}

fn split(o: SplitOptions, ctx: &mut Ctx) -> Result<(), CliError> {
    let lines = ctx.read_smiles(&o.input)?;
    let size = match (o.train_fraction, o.train_count, o.test_count) {
        (Some(f), None, None) => SplitSize::TrainFraction(f),
        (None, Some(train), Some(test)) => SplitSize::Counts { train, test },
        (None, None, None) => SplitSize::TrainFraction(0.5),
        _ => {
            return Err(CliError::Usage(
                "give either --train-fraction or both --train-count and --test-count".into(),
            ))
        }
    };
    let spec = SplitSpec {
        size,
        seed: o.seed,
        dedup: o.dedup,
    };
    let (train, test) = split_dataset(&lines, &spec).map_err(|e| match e {
        chemlm::pipeline::PipelineError::InvalidConfig(m) => CliError::Usage(m),
        other => CliError::Data(format!("{}: {other}", o.input)),
    })?;
    ctx.write(&o.train_out, lines_text(&train).as_bytes())?;
    ctx.write(&o.test_out, lines_text(&test).as_bytes())
}

fn fingerprints(set: &BTreeSet<String>, cfg: FingerprintConfig) -> Vec<Fingerprint> {
    set.iter().filter_map(|s| cfg.fingerprint(s)).collect()
}

fn eval(o: EvalOptions, ctx: &mut Ctx) -> Result<(), CliError> {
    // Blank sampled lines are kept: they count as invalid molecules.
    let generated: Vec<String> = ctx
        .read_text(required(&o.generated, "generated")?)?
        .lines()
        .map(|l| l.trim().to_string())
        .collect();
    let training = match &o.training {
        Some(p) => canonical_set(&ctx.read_smiles(p)?),
        None => BTreeSet::new(),
    };
    let stats = generation_stats(&generated, &training);
    let mut report = Report::new();
    stats.write_report(&mut report);
    if let Some(test_path) = &o.test {
        let test = canonical_set(&ctx.read_smiles(test_path)?);
        match &o.random {
            Some(p) => {
                let random = canonical_set(&ctx.read_smiles(p)?);
                EnrichmentReport::compute(&stats.valid_set, &random, &test)
                    .map_err(data(test_path))?
                    .write_report(&mut report);
            }
            None => {
                let r = reproduction_ratio(&stats.valid_set, &test).map_err(data(test_path))?;
                report.push("test_size", test.len());
                report.push("generated_reproduced", stats.valid_set.intersection(&test).count());
                report.push("reproduction_ratio", format!("{r:.6}"));
            }
        }
        if !training.is_empty() {
            let reproduced: Vec<&String> = stats.valid_set.intersection(&test).collect();
            let train_list: Vec<&String> = training.iter().collect();
            let h = edit_distance_histogram(&reproduced, &train_list).map_err(data("edit distance"))?;
            ctx.write(&o.edit_distance_csv, h.to_csv().as_bytes())?;
        }
    }
    let reference = match &o.reference {
        Some(p) => canonical_set(&ctx.read_smiles(p)?),
        None => training.clone(),
    };
    if !reference.is_empty() {
        let cfg = FingerprintConfig {
            radius: o.radius,
            width: o.width,
        };
        let h = similarity_histogram(&fingerprints(&stats.novel_set, cfg), &fingerprints(&reference, cfg), o.bin_width)
            .map_err(|e| CliError::Usage(e.to_string()))?;
        ctx.write(&o.similarity_csv, h.to_csv().as_bytes())?;
    }
    ctx.write(&o.out, report.to_string().as_bytes())
}

fn pipeline_err(e: chemlm::pipeline::PipelineError) -> CliError {
    match e {
        chemlm::pipeline::PipelineError::InvalidConfig(m) => CliError::Usage(m),
        other => CliError::Data(other.to_string()),
    }
}

fn cycle(o: CycleOptions, ctx: &mut Ctx) -> Result<(), CliError> {
    let base = ctx.read_checkpoint(required(&o.base, "base")?)?;
    let model = ctx.read_tpm(required(&o.tpm, "tpm")?)?;
    let config = CycleConfig {
        iterations: o.iterations,
        sample_symbols: o.sample_symbols,
        temperature: o.temperature,
        fine_tune: fine_tune_config(o.epochs, o.lr, o.batch, o.unroll, o.clip, o.dropout, o.seed),
        seed: o.seed,
    };
    let state_dir = ctx.path(&o.state_dir);
    let state = run_cycle(&base, &Scorer::from_model(&model), &config, Some(&state_dir)).map_err(pipeline_err)?;
    let mut csv = String::from("iteration,sampled,valid,unique,predicted_active,predicted_active_ratio,new_actives,pool_size\n");
    for l in &state.log {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{:.6},{},{}",
            l.iteration,
            l.sampled,
            l.valid,
            l.unique,
            l.predicted_active,
            l.predicted_active_ratio(),
            l.new_actives,
            l.pool_size
        );
    }
    ctx.write(&o.out, csv.as_bytes())?;
    ctx.write(&o.pool_out, lines_text(&state.pool).as_bytes())
}

fn sweep(o: SweepOptions, ctx: &mut Ctx) -> Result<(), CliError> {
    let base = ctx.read_checkpoint(required(&o.base, "base")?)?;
    let actives_path = required(&o.actives, "actives")?.to_string();
    let actives = ctx.read_smiles(&actives_path)?;
    let model = match &o.tpm {
        Some(p) => Some(ctx.read_tpm(p)?),
        None => None,
    };
    let training = match &o.training {
        Some(p) => canonical_set(&ctx.read_smiles(p)?),
        None => BTreeSet::new(),
    };
    let scorer = model.as_ref().map(Scorer::from_model);
    let ft = fine_tune_config(o.epochs, o.lr, o.batch, o.unroll, o.clip, o.dropout, o.seed);
    let template = SampleConfig::symbols(o.sample_symbols, o.seed).with_temperature(o.temperature);
    let epochs = epoch_sweep(&base, &actives, &ft, &template, scorer.as_ref(), &training, None).map_err(pipeline_err)?;
    let mut csv = String::from("epoch,lines,valid,novel,unique,predicted_active,predicted_active_ratio\n");
    for e in &epochs {
        ctx.write(&format!("{}/epoch_{:02}.smi", o.dir, e.epoch), lines_text(&e.lines).as_bytes())?;
        let mut report = Report::new();
        report.push("epoch", e.epoch);
        e.stats.write_report(&mut report);
        let _ = write!(
            csv,
            "{},{},{},{},{},",
            e.epoch, e.stats.lines, e.stats.valid, e.stats.novel, e.stats.unique
        );
        match (e.predicted_active, e.predicted_active_ratio()) {
            (Some(a), Some(r)) => {
                report.push("predicted_active", a);
                report.push("predicted_active_ratio", format!("{r:.6}"));
                let _ = writeln!(csv, "{a},{r:.6}");
            }
            _ => csv.push_str(",\n"),
        }
        ctx.write(&format!("{}/epoch_{:02}.stats.txt", o.dir, e.epoch), report.to_string().as_bytes())?;
    }
    ctx.write(&o.out, csv.as_bytes())
}

fn synth_cmd(o: SynthOptions, ctx: &mut Ctx) -> Result<(), CliError> {
    if !(0.0..=1.0).contains(&o.motif_rate) {
        return Err(CliError::Usage(format!("--motif-rate {} outside [0, 1]", o.motif_rate)));
    }
    let corpus = synth::generate(&synth::SynthConfig {
        molecules: o.molecules,
        motif_rate: o.motif_rate,
        seed: o.seed,
    });
    ctx.write(&o.out, lines_text(&corpus).as_bytes())?;
    if let Some(path) = &o.activities {
        let records = synth::activity_records(&corpus, o.seed);
        ctx.write(path, synth::activity_csv(&records).as_bytes())?;
    }
    Ok(())
}
