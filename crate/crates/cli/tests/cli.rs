use std::fs;
use std::path::Path;

use chemlm_cli::{run, RunManifest};
use serde_json::Value;

struct Outcome {
    code: i32,
    stdout: String,
    stderr: String,
}

fn chemlm(args: &[&str]) -> Outcome {
    chemlm_stdin(args, "")
}

fn chemlm_stdin(args: &[&str], stdin: &str) -> Outcome {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("chemlm").chain(args.iter().copied());
    let code = run(argv, &mut stdin.as_bytes(), &mut out, &mut err);
    Outcome {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn manifest(dir: &Path, command: &str) -> RunManifest {
    let text = fs::read_to_string(dir.join(format!("{command}.manifest.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn help_and_version_exit_zero() {
    let o = chemlm(&["--help"]);
    assert_eq!(o.code, 0);
    assert!(o.stdout.contains("canon"));
    assert_eq!(chemlm(&["--version"]).code, 0);
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let o = chemlm(&["train", "--bogus", "1"]);
    assert_eq!(o.code, 1);
    assert!(o.stderr.contains("--bogus"));
}

#[test]
fn missing_required_option_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = chemlm(&["--out-dir", p(dir.path()), "train"]);
    assert_eq!(o.code, 1, "{}", o.stderr);
    assert!(o.stderr.contains("--corpus"));
}

#[test]
fn canon_reports_the_invalid_line() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.smi");
    fs::write(&input, "CCO\nC1CC\nc1ccccc1\n").unwrap();
    let o = chemlm(&["--out-dir", p(dir.path()), "canon", "--input", p(&input)]);
    assert_eq!(o.code, 2);
    assert!(o.stderr.contains(&format!("{}:2", p(&input))), "{}", o.stderr);

    let o = chemlm(&["--out-dir", p(dir.path()), "canon", "--input", p(&input), "--skip-invalid"]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let out = fs::read_to_string(dir.path().join("canonical.smi")).unwrap();
    assert_eq!(out.lines().count(), 2);
}

#[test]
fn canon_reads_stdin_and_writes_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let o = chemlm_stdin(&["--out-dir", p(dir.path()), "canon", "--out", "-", "--dedup"], "OCC\nCCO\nC(C)O\n");
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert_eq!(o.stdout.lines().count(), 1);
    let m = manifest(dir.path(), "canon");
    assert_eq!(m.inputs[0].path, "-");
    assert_eq!(m.outputs[0].bytes as usize, o.stdout.len());
}

#[test]
fn flags_override_config_file_which_overrides_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.smi");
    let lines: String = (1..=20).map(|n| format!("{}O\n", "C".repeat(n))).collect();
    fs::write(&input, lines).unwrap();
    let config = dir.path().join("run.toml");
    fs::write(&config, "[split]\ntrain_fraction = 0.25\nseed = 5\n\n[train]\nepochs = 99\n").unwrap();

    let o = chemlm(&[
        "--out-dir",
        p(dir.path()),
        "--config",
        p(&config),
        "--seed",
        "9",
        "split",
        "--input",
        p(&input),
    ]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let m = manifest(dir.path(), "split");
    assert_eq!(m.config["train_fraction"], Value::from(0.25));
    assert_eq!(m.config["seed"], Value::from(9));
    assert_eq!(m.seed, Some(9));
    let source = |k: &str| serde_json::to_value(m.config_sources[k]).unwrap();
    assert_eq!(source("train_fraction"), "file");
    assert_eq!(source("seed"), "flag");
    assert_eq!(source("dedup"), "default");
    let train = fs::read_to_string(dir.path().join("train.smi")).unwrap();
    let test = fs::read_to_string(dir.path().join("test.smi")).unwrap();
    assert_eq!(train.lines().count(), 5);
    assert_eq!(test.lines().count(), 15);
}

#[test]
fn unknown_config_key_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    fs::write(&config, "[canon]\ndedupe = true\n").unwrap();
    let o = chemlm_stdin(&["--out-dir", p(dir.path()), "--config", p(&config), "canon"], "CCO\n");
    assert_eq!(o.code, 1);
    assert!(o.stderr.contains("dedupe"), "{}", o.stderr);
}

#[test]
fn eval_reports_counts_and_histograms() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, text: &str| {
        let path = dir.path().join(name);
        fs::write(&path, text).unwrap();
        path
    };
    let generated = write("gen.smi", "CCO\nOCC\nC1CC\n\nc1ccccc1\nCCN\n");
    let training = write("train.smi", "CCO\nCCC\n");
    let test = write("test.smi", "c1ccccc1\nc1ccncc1\n");
    let o = chemlm(&[
        "--out-dir",
        p(dir.path()),
        "eval",
        "--generated",
        p(&generated),
        "--training",
        p(&training),
        "--test",
        p(&test),
    ]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let report = fs::read_to_string(dir.path().join("eval.txt")).unwrap();
    let get = |k: &str| {
        report
            .lines()
            .find_map(|l| l.strip_prefix(&format!("{k}: ")))
            .unwrap_or_else(|| panic!("{k} missing from {report}"))
            .to_string()
    };
    assert_eq!(get("lines"), "6");
    assert_eq!(get("valid"), "4");
    assert_eq!(get("novel"), "2");
    assert_eq!(get("unique"), "2");
    assert_eq!(get("reproduction_ratio"), "0.500000");
    let sim = fs::read_to_string(dir.path().join("similarity_histogram.csv")).unwrap();
    let counted: usize = sim.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse::<usize>().unwrap()).sum();
    assert_eq!(counted, 2);
    // benzene is reproduced; its nearest training molecule is 8 edits away
    let ed = fs::read_to_string(dir.path().join("edit_distance_histogram.csv")).unwrap();
    assert!(ed.lines().any(|l| l.ends_with(",1") && l.starts_with("8,")), "{ed}");
}

#[test]
fn replay_rejects_changed_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.smi");
    fs::write(&input, "CCO\nCCN\n").unwrap();
    let run_dir = dir.path().join("a");
    assert_eq!(chemlm(&["--out-dir", p(&run_dir), "canon", "--input", p(&input)]).code, 0);
    let manifest_path = run_dir.join("canon.manifest.json");

    let replay_dir = dir.path().join("b");
    let o = chemlm(&["--out-dir", p(&replay_dir), "replay", p(&manifest_path)]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert_eq!(
        fs::read(run_dir.join("canonical.smi")).unwrap(),
        fs::read(replay_dir.join("canonical.smi")).unwrap()
    );

    fs::write(&input, "CCO\nCCS\n").unwrap();
    let o = chemlm(&["--out-dir", p(&replay_dir), "replay", p(&manifest_path)]);
    assert_eq!(o.code, 2);
    assert!(o.stderr.contains("changed"), "{}", o.stderr);
}

#[test]
fn synth_fit_and_predict_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = p(dir.path());
    let o = chemlm(&["--out-dir", d, "--seed", "4", "synth", "--molecules", "400", "--activities", "act.csv"]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let act = dir.path().join("act.csv");
    let o = chemlm(&["--out-dir", d, "tpm-fit", "--activities", p(&act), "--width", "1024"]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let corpus = dir.path().join("corpus.smi");
    let model = dir.path().join("tpm.clm");
    let o = chemlm(&["--out-dir", d, "tpm-predict", "--model", p(&model), "--input", p(&corpus)]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let predictions = fs::read_to_string(dir.path().join("predictions.csv")).unwrap();
    let rows: Vec<&str> = predictions.lines().skip(1).collect();
    assert_eq!(rows.len(), 400);
    let motif_rows = rows.iter().filter(|r| r.contains("[nH]")).count();
    let active_rows = rows.iter().filter(|r| r.ends_with(",1")).count();
    assert!(active_rows > 0 && active_rows <= motif_rows + 5, "{active_rows} active, {motif_rows} with NH");
}

#[test]
fn bad_activity_file_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let act = dir.path().join("act.csv");
    fs::write(&act, "smiles,measure,value\nCCO,IC50,abc\n").unwrap();
    let o = chemlm(&["--out-dir", p(dir.path()), "tpm-fit", "--activities", p(&act)]);
    assert_eq!(o.code, 2);
    assert!(o.stderr.contains(":2"), "{}", o.stderr);
}

#[test]
fn train_sample_and_fine_tune_small_model() {
    let dir = tempfile::tempdir().unwrap();
    let d = p(dir.path());
    assert_eq!(chemlm(&["--out-dir", d, "synth", "--molecules", "120"]).code, 0);
    let corpus = dir.path().join("corpus.smi");
    let o = chemlm(&[
        "--out-dir", d, "train", "--corpus", p(&corpus), "--layers", "1", "--hidden", "16", "--epochs", "1",
        "--batch", "8",
    ]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let model = dir.path().join("model.clm");
    let o = chemlm(&["--out-dir", d, "finetune", "--base", p(&model), "--corpus", p(&corpus), "--epochs", "1"]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    let tuned = dir.path().join("finetuned.clm");
    let o = chemlm(&["--out-dir", d, "sample", "--model", p(&tuned), "--molecules", "7", "--out", "-"]);
    assert_eq!(o.code, 0, "{}", o.stderr);
    assert_eq!(o.stdout.matches('\n').count(), 7);
    let o = chemlm(&["--out-dir", d, "sample", "--model", p(&tuned), "--molecules", "7", "--symbols", "5"]);
    assert_eq!(o.code, 1);
    let o = chemlm(&["--out-dir", d, "sample", "--model", p(&corpus)]);
    assert_eq!(o.code, 2);
}
