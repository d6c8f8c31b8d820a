use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

struct Run {
    dir: TempDir,
}

impl Run {
    fn new() -> Self {
        Run { dir: tempfile::tempdir().unwrap() }
    }

    fn config(&self, body: &str) -> PathBuf {
        let p = self.dir.path().join("config.json");
        std::fs::write(&p, body).unwrap();
        p
    }

    fn out(&self) -> PathBuf {
        self.dir.path().join("out")
    }

    fn exec(&self, command: &str, body: &str) -> Output {
        let cfg = self.config(body);
        Command::new(env!("CARGO_BIN_EXE_cwl"))
            .args([command, "--config"])
            .arg(cfg)
            .arg("--out")
            .arg(self.out())
            .env_remove("CWL_THREADS")
            .output()
            .unwrap()
    }

    fn json(&self, name: &str) -> Value {
        read_json(&self.out().join(name))
    }
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

const SIMULATE_CONSERVATIVE: &str = r#"{
    "model": {"kind": "dirichlet", "beta": 0.5, "xi": 0.37, "N": 10},
    "delay": {"alpha1": 0.0, "alpha2": 0.0, "tau": 0.125, "mu": 0.0},
    "dt": 0.0078125, "T": 10,
    "initial": [{"field": "w1", "mode": 1, "position": 1.0}, {"field": "w2", "mode": 2, "velocity": 0.5}]
}"#;

#[test]
fn criterion_detects_one_third() {
    let r = Run::new();
    let o = r.exec("criterion", r#"{"xi": 0.3333333333}"#);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = r.json("criterion.json");
    assert_eq!(v["p"], 1);
    assert_eq!(v["q"], 3);
    assert_eq!(v["paper_rule"], true);
    assert_eq!(v["rational"], true);
    assert!(v["modal_infimum"].as_f64().unwrap() > 0.49);
    assert_eq!(v["config"]["xi"], 0.3333333333);
}

#[test]
fn conservative_simulation_has_constant_energy() {
    let r = Run::new();
    let o = r.exec("simulate", SIMULATE_CONSERVATIVE);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(r.out().join("trace.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,Ed,Etilde"));
    let ed: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(ed.len(), 1281);
    let e0 = ed[0];
    assert!(ed.iter().all(|e| (e - e0).abs() <= 1e-8 * e0));
    let sidecar = read_json(&r.out().join("trace.csv.config.json"));
    assert_eq!(sidecar["model"]["N"], 10);
    assert_eq!(sidecar["resolved_delay"]["mu"], 0.0);
}

#[test]
fn sample_every_thins_the_trace() {
    let r = Run::new();
    let body = SIMULATE_CONSERVATIVE.replace("\"dt\"", "\"sample_every\": 10, \"dt\"");
    assert_eq!(code(&r.exec("simulate", &body)), 0);
    let csv = std::fs::read_to_string(r.out().join("trace.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 129);
}

#[test]
fn conjugacy_residual_is_tiny() {
    let r = Run::new();
    let o = r.exec("conjugacy", r#"{"seed": 42, "quadruples": 1, "random": {"n1": 6, "n2": 5, "m": 2}}"#);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = r.json("conjugacy.json");
    assert!(v["max_conjugation_residual"].as_f64().unwrap() <= 1e-10);
    assert!(v["max_transfer_discrepancy"].as_f64().unwrap() <= 1e-8);
    assert_eq!(v["cases"].as_array().unwrap().len(), 1);
}

#[test]
fn decay_reports_fit_and_infimum() {
    let r = Run::new();
    let o = r.exec(
        "decay",
        r#"{"model": {"kind": "mixed", "beta": 0.8, "xi": 0.3333333333333333, "N": 12},
            "delay": {"alpha1": 1.0, "alpha2": 0.5, "tau": 1.0}, "dt": 0.0078125, "T": 20,
            "initial": [{"field": "w1", "mode": 3, "position": 1.0}]}"#,
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = r.json("decay.json");
    assert!(v["fit"]["omega"].as_f64().unwrap() > 0.01);
    assert_eq!(v["fit"]["window"], serde_json::json!([10.0, 20.0]));
    assert!((v["modal_infimum"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    assert_eq!(v["config"]["resolved_delay"]["mu"], 1.0);
}

#[test]
fn transfer_writes_csv_and_summary() {
    let r = Run::new();
    let o = r.exec(
        "transfer",
        r#"{"model": {"kind": "dirichlet", "beta": 0.3, "xi": 0.4, "N": 10},
            "grid": {"re": [0.5, 1.5], "n_re": 2, "im": [-5.0, 5.0], "n_im": 3}, "points": [[1.0, 30.0]]}"#,
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(r.out().join("transfer.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("re_lambda,im_lambda,abs_H,abs_H1,abs_H2,method"));
    assert_eq!(lines.count(), 14);
    let v = r.json("transfer_summary.json");
    assert_eq!(v["points"], 7);
    assert!(v["max_relative_gap"].as_f64().unwrap() < 1e-6);
    assert!(v["sup"].is_null());
    assert!(r.out().join("transfer.csv.config.json").exists());
}

#[test]
fn observability_batches_are_bracketed() {
    let r = Run::new();
    let o = r.exec(
        "observability",
        r#"{"model": {"kind": "mixed", "beta": 0.3, "xi": 0.3333333333333333, "N": 10},
            "max_mode": 4, "draws": 8, "batches": 3, "seed": 9}"#,
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = r.json("observability.json");
    let batches = v["batches"].as_array().unwrap();
    assert_eq!(batches.len(), 3);
    for b in batches {
        let lo = b["min_ratio"].as_f64().unwrap();
        let hi = b["max_ratio"].as_f64().unwrap();
        assert!(lo.is_finite() && lo > 0.0 && lo <= hi);
        assert_eq!(b["results"].as_array().unwrap().len(), 8);
    }
    assert!(v["T"].as_f64().unwrap() > v["ingham_time"].as_f64().unwrap());
}

#[test]
fn validate_accepts_models_and_rejects_bad_quadruples() {
    let r = Run::new();
    let o = r.exec("validate", r#"{"model": {"kind": "mixed", "beta": 0.5, "xi": 0.37, "N": 8}}"#);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = r.json("validation.json");
    assert_eq!(v["all_passed"], true);
    assert_eq!(v["coupling_bound_holds"], true);

    let r = Run::new();
    let o = r.exec(
        "validate",
        r#"{"quadruple": {"n1": 2, "n2": 1, "m": 1,
            "A1": [[1.0, 0.5], [0.0, 1.0]], "A2": [[1.0]], "B": [[1.0], [0.0]], "C": [[0.1], [0.0]]}}"#,
    );
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn exit_codes() {
    let r = Run::new();
    assert_eq!(code(&r.exec("criterion", "{not json")), 1);
    assert_eq!(code(&r.exec("criterion", r#"{"xi": 0.5, "typo": 1}"#)), 1);
    assert_eq!(code(&r.exec("criterion", r#"{"xi": 1.5}"#)), 2);
    assert_eq!(code(&r.exec("validate", r#"{}"#)), 2);

    let bad_step = SIMULATE_CONSERVATIVE.replace("\"tau\": 0.125", "\"tau\": 0.1");
    let o = r.exec("simulate", &bad_step);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("tau"));

    let window = r#"{"model": {"kind": "mixed", "beta": 0.5, "xi": 0.5, "N": 6},
        "delay": {"alpha1": 1.0, "alpha2": 0.5, "tau": 0.5}, "dt": 0.0078125, "T": 1,
        "initial": [{"field": "w1", "mode": 1, "position": 1.0}], "window": [0.5, 0.5078125]}"#;
    assert_eq!(code(&r.exec("decay", window)), 3);

    let missing = Command::new(env!("CARGO_BIN_EXE_cwl"))
        .args(["criterion", "--config", "/nonexistent/config.json"])
        .output()
        .unwrap();
    assert_eq!(code(&missing), 1);

    let unknown = Command::new(env!("CARGO_BIN_EXE_cwl")).args(["frobnicate", "--config", "x"]).output().unwrap();
    assert_eq!(code(&unknown), 1);
    let help = Command::new(env!("CARGO_BIN_EXE_cwl")).arg("--help").output().unwrap();
    assert_eq!(code(&help), 0);
}

#[test]
fn invalid_thread_count_is_a_usage_error() {
    let r = Run::new();
    let cfg = r.config(r#"{"xi": 0.25}"#);
    let o = Command::new(env!("CARGO_BIN_EXE_cwl"))
        .args(["criterion", "--config"])
        .arg(cfg)
        .arg("--out")
        .arg(r.out())
        .env("CWL_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("CWL_THREADS"));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let r = Run::new();
    let body = r#"{"model": {"kind": "dirichlet", "beta": 0.2, "xi": 0.6, "N": 8}, "max_mode": 3, "draws": 5, "seed": 77}"#;
    assert_eq!(code(&r.exec("observability", body)), 0);
    let first = std::fs::read(r.out().join("observability.json")).unwrap();
    assert_eq!(code(&r.exec("observability", body)), 0);
    assert_eq!(first, std::fs::read(r.out().join("observability.json")).unwrap());

    let other = body.replace("77", "78");
    assert_eq!(code(&r.exec("observability", &other)), 0);
    assert_ne!(first, std::fs::read(r.out().join("observability.json")).unwrap());
}
