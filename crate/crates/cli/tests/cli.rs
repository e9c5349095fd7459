//! End-to-end tests of the installed binary.
//!
//! Every test works in its own temporary directory with a small synthetic
//! dataset, drives the real executable, and checks artifacts, stdout, and
//! exit codes. The configuration keeps the dataset tiny so the whole file
//! stays fast.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin(dir: &Path) -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_gaze-zsl"));
    cmd.current_dir(dir);
    cmd.env_remove("GAZE_ZSL_RUN_ROOT");
    cmd
}

const CONFIG: &str = "\
[synth]
n_classes = 4
images_per_class = 6
participants = 2
samples_per_stream = 80
seed = 1

[splits]
count = 2

[cv]
learning_rates = [0.1, 1.0]
epoch_counts = [10]
";

fn setup() -> tempfile::TempDir {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("run.toml"), CONFIG).unwrap();
    tmp
}

fn run_ok(dir: &Path, args: &[&str]) -> String {
    let out = bin(dir).args(args).output().unwrap();
    assert!(
        out.status.success(),
        "gaze-zsl {args:?} failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr),
    );
    String::from_utf8(out.stdout).unwrap()
}

fn run_err(dir: &Path, args: &[&str]) -> (i32, String) {
    let Output { status, stderr, .. } = bin(dir).args(args).output().unwrap();
    assert!(!status.success(), "gaze-zsl {args:?} unexpectedly succeeded");
    (
        status.code().expect("exit code"),
        String::from_utf8(stderr).unwrap(),
    )
}

#[test]
fn full_pipeline_produces_every_artifact() {
    let tmp = setup();
    let dir = tmp.path();

    run_ok(dir, &["synth"]);
    assert!(dir.join("data/manifest.toml").is_file());
    assert!(dir.join("runs/synth/config.toml").is_file());
    assert!(dir.join("runs/synth/digests.txt").is_file());

    let stdout = run_ok(dir, &["preprocess"]);
    assert!(stdout.contains("sequences"), "{stdout}");
    assert!(dir.join("runs/preprocess/fixations.csv").is_file());

    let stdout = run_ok(dir, &["embed"]);
    assert!(stdout.contains("4 classes"), "{stdout}");
    assert!(dir.join("runs/embed/embeddings.txt").is_file());

    let stdout = run_ok(dir, &["train"]);
    assert!(stdout.contains("training accuracy"), "{stdout}");
    assert!(dir.join("runs/train/model.txt").is_file());

    let stdout = run_ok(dir, &["eval"]);
    assert!(stdout.contains("mean accuracy"), "{stdout}");
    let record = fs::read_to_string(dir.join("runs/eval/record.toml")).unwrap();
    let parsed: toml::Value = toml::from_str(&record).unwrap();
    let mean = parsed["mean_accuracy"].as_float().unwrap();
    assert!((0.0..=1.0).contains(&mean), "mean {mean}");
    assert_eq!(parsed["split_accuracies"].as_array().unwrap().len(), 2);
}

#[test]
fn identical_invocations_are_hash_equal() {
    let tmp = setup();
    let dir = tmp.path();

    run_ok(dir, &["synth"]);
    run_ok(dir, &["synth", "--out", "synth2"]);
    let a = fs::read_to_string(dir.join("runs/synth/digests.txt")).unwrap();
    let b = fs::read_to_string(dir.join("runs/synth2/digests.txt")).unwrap();
    assert_eq!(a, b, "regenerating the dataset changed its digests");

    run_ok(dir, &["eval"]);
    run_ok(dir, &["eval", "--out", "eval2"]);
    for name in ["record.toml", "digests.txt"] {
        let a = fs::read(dir.join("runs/eval").join(name)).unwrap();
        let b = fs::read(dir.join("runs/eval2").join(name)).unwrap();
        assert_eq!(a, b, "rerun changed {name}");
    }
}

#[test]
fn thread_count_does_not_change_results() {
    let tmp = setup();
    let dir = tmp.path();
    run_ok(dir, &["synth"]);
    run_ok(dir, &["eval", "--threads", "1", "--out", "t1"]);
    run_ok(dir, &["eval", "--threads", "4", "--out", "t4"]);
    let a = fs::read(dir.join("runs/t1/record.toml")).unwrap();
    let b = fs::read(dir.join("runs/t4/record.toml")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn embeddings_written_then_read_give_the_same_record() {
    let tmp = setup();
    let dir = tmp.path();
    run_ok(dir, &["synth"]);
    run_ok(dir, &["embed"]);
    run_ok(dir, &["eval", "--out", "inline"]);
    run_ok(
        dir,
        &["eval", "--embeddings", "runs/embed/embeddings.txt", "--out", "file"],
    );
    let a = fs::read(dir.join("runs/inline/record.toml")).unwrap();
    let b = fs::read(dir.join("runs/file/record.toml")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn unknown_config_keys_are_rejected_with_the_key_named() {
    let tmp = setup();
    let dir = tmp.path();
    fs::write(dir.join("bad.toml"), "[filter]\ndispersoin = 5.0\n").unwrap();
    let (code, stderr) = run_err(dir, &["--config", "bad.toml", "eval"]);
    assert_eq!(code, 2, "{stderr}");
    assert!(stderr.contains("error[config]"), "{stderr}");
    assert!(stderr.contains("dispersoin"), "{stderr}");
}

#[test]
fn bad_sweep_range_is_a_config_error_naming_the_field() {
    let tmp = setup();
    let dir = tmp.path();
    run_ok(dir, &["synth"]);
    let (code, stderr) = run_err(dir, &["sweep", "--ws", "banana"]);
    assert_eq!(code, 2, "{stderr}");
    assert!(stderr.contains("sweep.dispersions"), "{stderr}");
}

#[test]
fn stage_failures_exit_one_with_a_stage_tag() {
    let tmp = setup();
    let dir = tmp.path();
    let (code, stderr) = run_err(dir, &["eval", "--data-root", "missing"]);
    assert_eq!(code, 1, "{stderr}");
    assert!(stderr.starts_with("error[ingest]"), "{stderr}");
}

#[test]
fn sweep_renders_the_grid_and_records_outcomes() {
    let tmp = setup();
    let dir = tmp.path();
    run_ok(dir, &["synth"]);
    let stdout = run_ok(
        dir,
        &["sweep", "--ws", "20..30", "--ts", "5..15", "--points", "2"],
    );
    assert!(stdout.contains("disp\\dur"), "{stdout}");
    assert!(stdout.contains("20.0"), "{stdout}");
    assert!(stdout.contains("best:"), "{stdout}");
    let saved = fs::read_to_string(dir.join("runs/sweep/sweep.toml")).unwrap();
    let parsed: toml::Value = toml::from_str(&saved).unwrap();
    assert_eq!(parsed["outcome"].as_array().unwrap().len(), 4);
}

#[test]
fn report_collects_records_under_the_run_root() {
    let tmp = setup();
    let dir = tmp.path();
    run_ok(dir, &["synth"]);
    run_ok(dir, &["eval"]);
    let stdout = run_ok(dir, &["report"]);
    assert!(stdout.contains("gfs:k="), "{stdout}");
    assert!(stdout.contains("splits"), "{stdout}");
}

#[test]
fn run_root_env_var_applies_and_the_flag_wins() {
    let tmp = setup();
    let dir = tmp.path();
    let out = bin(dir)
        .env("GAZE_ZSL_RUN_ROOT", "envruns")
        .args(["synth"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.join("envruns/synth/digests.txt").is_file());

    let out = bin(dir)
        .env("GAZE_ZSL_RUN_ROOT", "envruns")
        .args(["synth", "--run-root", "flagruns"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.join("flagruns/synth/digests.txt").is_file());
}

#[test]
fn embed_from_fixation_file_matches_embedding_from_raw_logs() {
    let tmp = setup();
    let dir = tmp.path();
    run_ok(dir, &["synth"]);
    run_ok(dir, &["preprocess"]);
    run_ok(dir, &["embed", "--out", "raw"]);
    run_ok(
        dir,
        &[
            "embed",
            "--fixations",
            "runs/preprocess/fixations.csv",
            "--out",
            "fromfile",
        ],
    );
    let a = fs::read(dir.join("runs/raw/embeddings.txt")).unwrap();
    let b = fs::read(dir.join("runs/fromfile/embeddings.txt")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn ablation_writes_one_record_per_mode() {
    let tmp = setup();
    let dir = tmp.path();
    run_ok(dir, &["synth"]);
    let stdout = run_ok(dir, &["ablate", "--mode", "same_images"]);
    assert!(stdout.contains("same_images"), "{stdout}");
    assert!(dir.join("runs/ablate/record_same_images.toml").is_file());
}

#[test]
fn snapshot_records_flag_overrides() {
    let tmp = setup();
    let dir = tmp.path();
    run_ok(dir, &["synth", "--seed", "9", "--out", "seeded"]);
    let snapshot = fs::read_to_string(dir.join("runs/seeded/config.toml")).unwrap();
    let parsed: toml::Value = toml::from_str(&snapshot).unwrap();
    assert_eq!(parsed["synth"]["seed"].as_integer(), Some(9));
}
