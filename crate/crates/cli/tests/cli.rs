use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn confgauss(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_confgauss")).args(args).env("NO_COLOR", "1").output().expect("binary runs")
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("confgauss-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stderr)))
}

const QUICK: &[&str] = &["verify", "--surface", "torus:2,1", "--level", "0", "--order", "4", "--points", "5"];

#[test]
fn passing_run_exits_zero_with_full_meta() {
    let o = confgauss(QUICK);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    let meta = &v["meta"];
    assert_eq!(meta["config-hash"].as_str().unwrap().len(), 64);
    assert_eq!(meta["config"]["surface"]["shape"]["kind"], "torus_of_revolution");
    assert_eq!(meta["config"]["surface"]["shape"]["major"], 2.0);
    assert!(v["residuals"]["pointwise.second_form"]["pass"].as_bool().unwrap());
    assert_eq!(v["results"]["skipped"]["el"], "needs order 6");
    assert!(String::from_utf8_lossy(&o.stderr).contains("PASS pointwise.codazzi"));
}

#[test]
fn tolerance_failure_exits_two() {
    let mut args = QUICK.to_vec();
    args.extend(["--tol", "pointwise=1e-30"]);
    let o = confgauss(&args);
    assert_eq!(o.status.code(), Some(2));
    let v = json(&o);
    assert_eq!(v["residuals"]["pointwise.second_form"]["tolerance"], 1e-30);
    assert!(!v["residuals"]["pointwise.second_form"]["pass"].as_bool().unwrap());
}

#[test]
fn residual_override_beats_suite_override() {
    let mut args = QUICK.to_vec();
    args.extend(["--tol", "pointwise=1e-30", "--tol", "pointwise.codazzi=0.5"]);
    let v = json(&confgauss(&args));
    assert_eq!(v["residuals"]["pointwise.codazzi"]["tolerance"], 0.5);
    assert_eq!(v["residuals"]["pointwise.simons"]["tolerance"], 1e-30);
}

#[test]
fn usage_errors_exit_one() {
    let cfg = tmp("unknown.json");
    std::fs::write(&cfg, r#"{"command": "verify", "colour": "red"}"#).unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["verify", "--config", cfg.to_str().unwrap()],
        vec!["verify", "--tol", "nonsense=1"],
        vec!["verify", "--surface", "klein-bottle"],
        vec!["verify", "--order", "9"],
        vec!["--level", "1"],
        vec!["frobnicate"],
        vec!["invariance", "--level", "0"],
        vec!["verify", "--config", "/nonexistent/confgauss.json"],
    ];
    for args in cases {
        let o = confgauss(&args);
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(o.stdout.is_empty(), "{args:?}");
    }
}

#[test]
fn duality_on_round_sphere_is_a_hypothesis_error() {
    let o = confgauss(&["duality", "--surface", "sphere", "--level", "0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("hypothesis"));
}

#[test]
fn duality_reports_both_residuals() {
    let o = confgauss(&["duality", "--surface", "torus:2,1", "--level", "0"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    for k in ["duality_P", "duality_S"] {
        assert!(v["residuals"][k]["value"].as_f64().unwrap() < 1e-5, "{k}");
    }
    assert_eq!(v["results"]["energy"]["euler_characteristic"], 0);
}

#[test]
fn reports_are_byte_identical_across_runs() {
    // The output path is part of the configuration, so both runs share it.
    let p = tmp("det.json");
    let mut args = QUICK.to_vec();
    args.extend(["--seed", "17", "--out", p.to_str().unwrap()]);
    let mut reports = Vec::new();
    for _ in 0..2 {
        assert_eq!(confgauss(&args).status.code(), Some(0));
        reports.push(std::fs::read(&p).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
}

#[test]
fn config_file_and_flags_resolve_to_the_same_hash() {
    let cfg = tmp("same.json");
    std::fs::write(
        &cfg,
        r#"{"command": "verify", "level": 0, "order": 4, "points": 5,
            "surface": {"shape": {"kind": "torus_of_revolution", "major": 2.0, "minor": 1.0}}}"#,
    )
    .unwrap();
    let a = json(&confgauss(&["--config", cfg.to_str().unwrap()]));
    let b = json(&confgauss(QUICK));
    assert_eq!(a["meta"]["config-hash"], b["meta"]["config-hash"]);
    let c = json(&confgauss(&[QUICK, &["--seed", "1"]].concat()));
    assert_ne!(a["meta"]["config-hash"], c["meta"]["config-hash"]);
}

#[test]
fn csv_report_has_one_row_per_quantity() {
    let o = confgauss(&[QUICK, &["--format", "csv"]].concat());
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let mut r = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(r.headers().unwrap(), vec!["quantity", "value"]);
    let rows: Vec<(String, String)> = r.deserialize().map(|x| x.unwrap()).collect();
    assert!(rows.iter().any(|(k, v)| k == "meta.config-hash" && v.len() == 64));
    assert!(rows.iter().any(|(k, v)| k == "residuals.pointwise.codazzi.pass" && v == "true"));
}

#[test]
fn neck_scan_fits_quadratic_law() {
    let o = confgauss(&["neck-scan", "--level", "0"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    assert!(v["residuals"]["neck.fit"]["pass"].as_bool().unwrap());
}

#[test]
fn invariance_under_dilation() {
    let o = confgauss(&["invariance", "--level", "0", "--moebius", r#"[{"kind": "dilation", "lambda": 1.7}]"#]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    assert!(v["residuals"]["invariance.e_gr"]["value"].as_f64().unwrap() < 1e-12);
    assert!(v["residuals"]["equivariance.lorentz"]["pass"].as_bool().unwrap());
}

#[test]
fn help_and_version_exit_zero() {
    for flag in ["--help", "--version"] {
        let o = confgauss(&[flag]);
        assert_eq!(o.status.code(), Some(0));
        assert!(!o.stdout.is_empty());
    }
}
