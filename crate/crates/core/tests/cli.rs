use std::path::Path;
use std::process::{Command, Output};

use lpstream::runner::io::{EmbeddingFile, LabelSidecar};
use lpstream::RunReport;

fn lpstream(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lpstream")).args(args).output().expect("binary runs")
}

fn generate(dir: &Path, shots: usize) {
    let out = lpstream(&[
        "--generate",
        dir.to_str().unwrap(),
        "--classes",
        "4",
        "--per-class",
        "15",
        "--shots",
        &shots.to_string(),
        "--dim",
        "16",
        "--noise",
        "0.5",
        "--seed",
        "3",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

#[test]
fn generated_files_run_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), 2);
    let report_path = path(dir.path(), "report.json");
    let timings = path(dir.path(), "timings.csv");
    let out = lpstream(&[
        "--prototypes",
        &path(dir.path(), "prototypes.eclp"),
        "--test",
        &path(dir.path(), "test.eclp"),
        "--fewshot",
        &path(dir.path(), "fewshot.eclp"),
        "--sidecar",
        &path(dir.path(), "sidecar.json"),
        "--transductive",
        "--oracle-check",
        "--report",
        &report_path,
        "--timings",
        &timings,
    ]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout.contains("online"));
    assert!(stdout.contains("oracle check"));

    let report: RunReport = serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report.predictions.len(), 60);
    assert_eq!(report.config.fewshot, 8);
    assert!(report.transductive_predictions.is_some());
    assert_eq!(std::fs::read_to_string(&timings).unwrap().lines().count(), 61);

    let sidecar = LabelSidecar::read(dir.path().join("sidecar.json")).unwrap();
    assert_eq!(sidecar.class_names.len(), 4);
    let tests = EmbeddingFile::read(dir.path().join("test.eclp")).unwrap();
    assert_eq!((tests.count(), tests.dim()), (60, 16));
}

#[test]
fn corrupt_embedding_file_exits_with_ingest_code() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), 0);
    let test_file = dir.path().join("test.eclp");
    let bytes = std::fs::read(&test_file).unwrap();
    std::fs::write(&test_file, &bytes[..bytes.len() - 3]).unwrap();
    let out = lpstream(&[
        "--prototypes",
        &path(dir.path(), "prototypes.eclp"),
        "--test",
        test_file.to_str().unwrap(),
        "--sidecar",
        &path(dir.path(), "sidecar.json"),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn invalid_hyperparameters_exit_with_config_code() {
    assert_eq!(lpstream(&["--gamma", "0", "--bench"]).status.code(), Some(3));
    assert_eq!(lpstream(&["--beta", "1.5", "--bench"]).status.code(), Some(3));
    assert_eq!(lpstream(&[]).status.code(), Some(3));
}

#[test]
fn identical_invocations_write_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), 1);
    let run = |name: &str| {
        let report = path(dir.path(), name);
        let out = lpstream(&[
            "--prototypes",
            &path(dir.path(), "prototypes.eclp"),
            "--test",
            &path(dir.path(), "test.eclp"),
            "--fewshot",
            &path(dir.path(), "fewshot.eclp"),
            "--sidecar",
            &path(dir.path(), "sidecar.json"),
            "--report",
            &report,
        ]);
        assert!(out.status.success());
        std::fs::read(report).unwrap()
    };
    assert_eq!(run("a.json"), run("b.json"));
}
