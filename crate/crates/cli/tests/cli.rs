use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const DARCY: &str = r#"{"domain": {"kind": "annulus", "r_inner": 1, "r_outer": 2, "resolution": [32, 16]},
    "gppc": [{"a": 1, "alpha": 0}], "A": 1}"#;

struct Run {
    dir: tempfile::TempDir,
}

impl Run {
    fn new() -> Self {
        Run { dir: tempfile::tempdir().unwrap() }
    }

    fn config(&self, body: &str) -> PathBuf {
        let p = self.dir.path().join("run.json");
        std::fs::write(&p, body).unwrap();
        p
    }

    fn out(&self) -> PathBuf {
        self.dir.path().join("out")
    }

    fn forch(&self, sub: &str, body: &str, extra: &[&str]) -> Output {
        let cfg = self.config(body);
        Command::new(env!("CARGO_BIN_EXE_forch"))
            .arg(sub)
            .arg("--config")
            .arg(cfg)
            .arg("--out")
            .arg(self.out())
            .args(extra)
            .output()
            .unwrap()
    }

    fn json(&self, file: &str) -> Value {
        read_json(&self.out().join(file))
    }
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn stderr_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stderr).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stderr)))
}

#[test]
fn oracle_reference_row() {
    let run = Run::new();
    let o = run.forch("oracle", DARCY, &[]);
    assert!(o.status.success());
    let csv = std::fs::read_to_string(run.out().join("oracle.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("r,u,v_abs,eta"));
    let last: Vec<f64> = csv.lines().last().unwrap().split(',').map(|t| t.parse().unwrap()).collect();
    assert_eq!(last[0], 2.0);
    assert!((last[1] - 0.63629).abs() < 1e-5);
    assert_eq!(csv.lines().count(), 34);
}

#[test]
fn pss_writes_fields_and_report() {
    let run = Run::new();
    let o = run.forch("pss", DARCY, &["--quiet"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());
    for f in ["u.csv", "v.csv", "solver_log.jsonl", "metadata.json"] {
        assert!(run.out().join(f).exists(), "{f}");
    }
    let pi = run.json("pi_report.json");
    let q = pi["q"].as_f64().unwrap();
    assert!((q - 3.0 * std::f64::consts::PI).abs() < 1e-9);
    let pe = pi["pi_energy"].as_f64().unwrap();
    assert!((pe - 19.90).abs() < 0.05, "{pe}");
    assert_eq!(pi["terms"].as_array().unwrap().len(), 1);
    let log = std::fs::read_to_string(run.out().join("solver_log.jsonl")).unwrap();
    for l in log.lines() {
        let rec: Value = serde_json::from_str(l).unwrap();
        assert!(rec["residual"].is_number());
    }
}

#[test]
fn pss_with_zero_a_records_pi_error() {
    let run = Run::new();
    let o = run.forch("pss", &DARCY.replace("\"A\": 1", "\"A\": 0"), &[]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(stderr_json(&o)["error"], "zero_energy");
    let u = std::fs::read_to_string(run.out().join("u.csv")).unwrap();
    assert!(u.lines().skip(1).all(|l| l.ends_with(",0")));
    assert!(run.json("pi_report.json")["error"].is_string());
    assert_eq!(run.json("error.json")["exit_code"], 3);
}

#[test]
fn transform_rejects_large_chi_naming_chi_max() {
    let run = Run::new();
    let body = DARCY.replace("\"A\": 1", "\"A\": 1, \"chi\": 0.7");
    let o = run.forch("transform", &body, &[]);
    assert_eq!(o.status.code(), Some(4));
    let e = stderr_json(&o);
    assert_eq!(e["error"], "chi_out_of_range");
    let chi_max = e["details"]["chi_max"].as_f64().unwrap();
    assert!((chi_max - 2.0 / 3.0).abs() < 2e-3, "{chi_max}");
}

#[test]
fn transform_default_chi_reports() {
    let run = Run::new();
    let o = run.forch("transform", DARCY, &["--quiet"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = run.json("transform_report.json");
    let chi = r["chi"].as_f64().unwrap();
    assert!((chi - 0.5 * r["chi_max"].as_f64().unwrap()).abs() < 1e-15);
    for key in ["compatibility_residual", "curl_diagnostic", "xi_max", "round_trip_eta_error"] {
        assert!(r[key].is_number(), "{key}");
    }
    assert!(run.out().join("u_tilde.csv").exists());
}

#[test]
fn config_errors_are_collected() {
    let run = Run::new();
    let body = r#"{"domain": {"kind": "disk"}, "gppc": [{"a": 1, "alpha": 0.5}], "A": 1, "Q": 1, "phi": 3}"#;
    let o = run.forch("pss", body, &[]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr_json(&o);
    let paths: Vec<&str> =
        e["details"]["issues"].as_array().unwrap().iter().map(|i| i["path"].as_str().unwrap()).collect();
    for p in ["$.domain.kind", "$.gppc", "$", "$.phi"] {
        assert!(paths.contains(&p), "{p} not in {paths:?}");
    }
}

#[test]
fn missing_config_is_a_config_error() {
    let run = Run::new();
    let o = Command::new(env!("CARGO_BIN_EXE_forch"))
        .args(["pss", "--config"])
        .arg(run.dir.path().join("nope.json"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn resolution_override_and_q_regime() {
    let run = Run::new();
    let body = DARCY.replace("\"A\": 1", "\"Q\": 9.42477796076938");
    let o = run.forch("pss", &body, &["--quiet", "--resolution", "8x4"]);
    assert!(o.status.success());
    let u = std::fs::read_to_string(run.out().join("u.csv")).unwrap();
    assert_eq!(u.lines().count(), 1 + 9 * 4);
    let a = run.json("pi_report.json")["a"].as_f64().unwrap();
    assert!((a - 1.0).abs() < 1e-12);
}

#[test]
fn cmc_beyond_threshold_fails() {
    let run = Run::new();
    let o = run.forch("cmc", &DARCY.replace("\"A\": 1", "\"A\": 0.7333333"), &[]);
    assert_eq!(o.status.code(), Some(3));
    let e = stderr_json(&o);
    assert_eq!(e["error"], "cmc_nonexistence");
    assert!(matches!(e["details"]["classification"].as_str(), Some("diverged" | "stalled")));
    assert!(run.out().join("solver_log.jsonl").exists());
    assert!(!run.out().join("u_tilde.csv").exists());

    let run = Run::new();
    let o = run.forch("cmc", &DARCY.replace("\"A\": 1", "\"A\": 0.6"), &["--quiet"]);
    assert!(o.status.success());
    assert!((run.json("cmc_report.json")["mean_curvature"].as_f64().unwrap() - 0.3).abs() < 1e-15);
}

#[test]
fn pipeline_report() {
    let run = Run::new();
    let o = run.forch("pi-pipeline", DARCY, &["--quiet"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = run.json("pipeline_report.json");
    assert!(r["relative_difference"].as_f64().unwrap() < 1e-2);
    assert!(r["cmc"]["pi_energy"].as_f64().unwrap() > 0.0);
    assert!(r["direct"]["pi_drawdown"].as_f64().unwrap() > 0.0);
}

#[test]
fn well_table_profile() {
    let run = Run::new();
    let body = DARCY.replace("\"A\": 1", r#""A": 1, "phi": {"table": [[0, 0.1], [3.14159, -0.1]]}"#);
    let o = run.forch("pss", &body, &["--quiet"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let u = std::fs::read_to_string(run.out().join("u.csv")).unwrap();
    let first: f64 = u.lines().nth(1).unwrap().rsplit(',').next().unwrap().parse().unwrap();
    // The stored profile excludes the boundary mean of the table, about 1e-8 here.
    assert!((first - 0.1).abs() < 1e-6);
}

#[test]
fn verify_passes_on_reference_problem() {
    let run = Run::new();
    let o = run.forch("verify", DARCY, &["--resolution", "64x32"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let r = run.json("verify_report.json");
    assert_eq!(r["passed"], true);
    assert!(String::from_utf8_lossy(&o.stdout).contains("PASS radial_oracle_nodal_error"));
}

#[test]
fn verify_fails_with_exit_one() {
    let run = Run::new();
    // Too coarse for the energy and drawdown forms to agree.
    let body = DARCY.replace("[32, 16]", "[3, 4]");
    let o = run.forch("verify", &body, &["--quiet"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(run.json("verify_report.json")["passed"], false);
}
