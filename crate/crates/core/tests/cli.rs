//! Command-line behaviour: exit codes, file outputs, configuration handling.

use std::process::Command;

use cat_aqec::cli::commands::compare_metrics;
use cat_aqec::cli::config::ExperimentConfig;
use cat_aqec::cli::output::{RunSummary, CYCLE_HEADER};
use cat_aqec::cli::{exit_code, run, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK};
use cat_aqec::Error;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cat-aqec"))
}

#[test]
fn unknown_config_key_exits_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.cfg");
    std::fs::write(&path, "nbar = 4\nchi_mhz = 40\n").unwrap();
    let out = bin()
        .args(["encode", "--config"])
        .arg(&path)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(EXIT_CONFIG));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2") && err.contains("chi_mhz"), "{err}");
}

#[test]
fn bad_flags_and_help() {
    assert_eq!(bin().args(["encode", "--fock-dim", "ten"]).status().unwrap().code(), Some(EXIT_CONFIG));
    assert_eq!(bin().args(["launch"]).status().unwrap().code(), Some(EXIT_CONFIG));
    let help = bin().arg("--help").output().unwrap();
    assert_eq!(help.status.code(), Some(EXIT_OK));
    let text = String::from_utf8_lossy(&help.stdout);
    for verb in ["encode", "correct", "aqec", "mbqec", "sweep-tw", "phase-portrait"] {
        assert!(text.contains(verb), "{verb}");
    }
}

#[test]
fn truncation_violation_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let code = run(["cat-aqec", "encode", "--fock-dim", "30", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, EXIT_CONFIG);
}

#[test]
fn encode_writes_summary_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.cfg");
    std::fs::write(&cfg, "nbar = 2\nfock_dim = 40\n").unwrap();
    let out = dir.path().join("out");
    let code = run([
        "cat-aqec",
        "encode",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "17",
        "--gate-model",
        "active",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);
    let summary: RunSummary =
        serde_json::from_str(&std::fs::read_to_string(out.join("encode_summary.json")).unwrap()).unwrap();
    assert_eq!(summary.scenario, "encode");
    assert_eq!(summary.config["seed"], "17");
    assert_eq!(summary.config["gate_model"], "active");
    assert_eq!(summary.config["nbar"], "2.0");
    assert_eq!(summary.config.len(), ExperimentConfig::default().to_pairs().len());
    assert!(summary.metric("epsilon_encode").is_some());
    assert!(summary.publishable && summary.convergence.is_none());
}

#[test]
fn convergence_check_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.cfg");
    std::fs::write(&cfg, "nbar = 2\nfock_dim = 40\ngate_model = noiseless\n").unwrap();
    let code = run([
        "cat-aqec",
        "encode",
        "--config",
        cfg.to_str().unwrap(),
        "--check-convergence",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    let summary: RunSummary =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("encode_summary.json")).unwrap()).unwrap();
    let check = summary.convergence.expect("check requested");
    assert_eq!(check.reference_fock_dim, 50);
    assert_eq!(code, if check.passed { EXIT_OK } else { 3 });
    assert_eq!(summary.publishable, check.passed);
}

#[test]
fn failed_comparison_marks_metrics() {
    let c = ExperimentConfig::default();
    let mut a = RunSummary::new("x", &c);
    let mut b = RunSummary::new("x", &ExperimentConfig { fock_dim: 80, ..c });
    a.metrics.insert("eps".into(), 0.01);
    b.metrics.insert("eps".into(), 0.01 + 2e-6);
    a.metrics.insert("t".into(), 4000.0);
    b.metrics.insert("t".into(), 4000.001);
    let check = compare_metrics(&a, &b, None);
    assert!(!check.passed);
    assert_eq!(check.fock_dim, 70);
    assert_eq!(check.reference_fock_dim, 80);
    assert!(check.deviations["t"] < 1e-6);
    assert!(compare_metrics(&a, &b, Some(&["t"])).passed);
}

#[test]
fn exit_code_classes() {
    assert_eq!(exit_code(&Error::Config { line: 1, message: String::new() }), EXIT_CONFIG);
    assert_eq!(exit_code(&Error::StepSizeUnderflow { t: 0.0, h: 0.0 }), EXIT_NUMERICAL);
    assert_eq!(exit_code(&Error::FitDiverged { residual: 1.0 }), EXIT_NUMERICAL);
}

#[test]
fn aqec_csv_schema_and_repeatability() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.cfg");
    std::fs::write(&cfg, "nbar = 2\nfock_dim = 40\nn_cycles = 8\n").unwrap();
    let mut outputs = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("run{k}"));
        let code = run([
            "cat-aqec",
            "aqec",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, EXIT_OK);
        outputs.push(std::fs::read_to_string(out.join("aqec.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let mut lines = outputs[0].lines();
    assert_eq!(lines.next(), Some(CYCLE_HEADER));
    assert_eq!(lines.count(), 9);
}
