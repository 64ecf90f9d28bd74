//! End-to-end runs of the `rigidity` binary against the bundled configs.
//! Each test checks the exit-code contract and the written artifacts.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_rigidity")
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .output()
        .expect("binary should launch")
}

fn read_json(path: &Path) -> serde_json::Value {
    let data = std::fs::read(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    serde_json::from_slice(&data).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn classify_flat_density_reports_no_rigidity() {
    let out = tempfile::tempdir().unwrap();
    let result = run(&[
        "classify",
        "--config",
        config("poisson.json").to_str().unwrap(),
        "--out",
        out.path().to_str().unwrap(),
    ]);
    assert_eq!(result.status.code(), Some(0), "{result:?}");

    let verdicts = read_json(&out.path().join("verdicts.json"));
    let rows = verdicts["verdicts"].as_array().unwrap();
    assert!(!rows.is_empty());
    for row in rows {
        assert_eq!(row["verdict"], "NotKRigid", "row {row}");
    }
    assert!(out.path().join("ladders.csv").exists());
}

#[test]
fn classify_scaling_density_splits_by_derivative_order() {
    let out = tempfile::tempdir().unwrap();
    let result = run(&[
        "classify",
        "--config",
        config("gaf_scaling.json").to_str().unwrap(),
        "--out",
        out.path().to_str().unwrap(),
    ]);
    assert_eq!(result.status.code(), Some(0), "{result:?}");

    let verdicts = read_json(&out.path().join("verdicts.json"));
    for row in verdicts["verdicts"].as_array().unwrap() {
        let order: u64 = row["k"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_u64().unwrap())
            .sum();
        let expected = if order <= 1 { "KRigid" } else { "NotKRigid" };
        assert_eq!(row["verdict"], expected, "row {row}");
    }
}

#[test]
fn classify_exits_undetermined_when_no_route_certifies() {
    // A density vanishing away from the origin defeats both the pole
    // certificate and every converse flag, so the verdict stays open.
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("valley.json");
    std::fs::write(
        &cfg,
        r#"{"density": {"builtin": "off_origin_valley"}, "k_cap": 0}"#,
    )
    .unwrap();
    let result = run(&[
        "classify",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(result.status.code(), Some(2), "{result:?}");

    let verdicts = read_json(&dir.path().join("out").join("verdicts.json"));
    assert_eq!(verdicts["verdicts"][0]["verdict"], "SufficientOnly");
}

#[test]
fn predict_unit_root_certifies_vanishing_residual() {
    let out = tempfile::tempdir().unwrap();
    let result = run(&[
        "predict",
        "--config",
        config("predict_unit_root.json").to_str().unwrap(),
        "--out",
        out.path().to_str().unwrap(),
    ]);
    assert_eq!(result.status.code(), Some(0), "{result:?}");

    let report = read_json(&out.path().join("predictor.json"));
    assert_eq!(report["extrapolation"]["verdict"], "Rigid");

    let curve = std::fs::read_to_string(out.path().join("curve.csv")).unwrap();
    let mut lines = curve.lines();
    assert_eq!(lines.next(), Some("n_outer,residual_variance,target_variance"));
    assert!(lines.count() >= 4);
}

#[test]
fn dpp_job_reports_transform_and_order() {
    let out = tempfile::tempdir().unwrap();
    let result = run(&[
        "dpp",
        "--config",
        config("dpp_ginibre.json").to_str().unwrap(),
        "--out",
        out.path().to_str().unwrap(),
    ]);
    assert_eq!(result.status.code(), Some(0), "{result:?}");

    let report = read_json(&out.path().join("dpp.json"));
    assert!(report["transform"]["closed_form_gap"].as_f64().unwrap() < 1e-6);
    assert_eq!(report["order"]["order"], 0);
    assert_eq!(report["order"]["frontier_certified"], true);
}

#[test]
fn simulate_round_trip_calibrates_and_dumps() {
    let out = tempfile::tempdir().unwrap();
    let result = run(&[
        "simulate",
        "--config",
        config("simulate_unit_root.json").to_str().unwrap(),
        "--out",
        out.path().to_str().unwrap(),
    ]);
    assert_eq!(result.status.code(), Some(0), "{result:?}");

    let report = read_json(&out.path().join("simulation.json"));
    assert_eq!(report["covariance_within_band"], true);
    assert_eq!(report["prediction_within_band"], true);

    let manifest = read_json(&out.path().join("realizations.json"));
    assert_eq!(manifest["shape"][0], 200);
    assert_eq!(manifest["shape"][1], 64);
    assert_eq!(manifest["dtype"], "f64le");
    let payload = std::fs::read(out.path().join("realizations.f64")).unwrap();
    assert_eq!(payload.len(), 200 * 64 * 8);
}

#[test]
fn simulate_seed_flag_changes_the_dump() {
    let out_a = tempfile::tempdir().unwrap();
    let out_b = tempfile::tempdir().unwrap();
    for (dir, seed) in [(&out_a, "7"), (&out_b, "8")] {
        let result = run(&[
            "simulate",
            "--config",
            config("simulate_unit_root.json").to_str().unwrap(),
            "--out",
            dir.path().to_str().unwrap(),
            "--seed",
            seed,
        ]);
        assert_eq!(result.status.code(), Some(0), "{result:?}");
    }
    let a = read_json(&out_a.path().join("realizations.json"));
    let b = read_json(&out_b.path().join("realizations.json"));
    // Same config, same seed as bundled: byte-identical; a new seed is not.
    assert_ne!(a["data_sha256"], b["data_sha256"]);
    assert_eq!(a["seed"], 7);
    assert_eq!(b["seed"], 8);
}

#[test]
fn reproduce_with_empty_filter_is_a_no_op() {
    let out = tempfile::tempdir().unwrap();
    let result = run(&[
        "reproduce",
        "--out",
        out.path().to_str().unwrap(),
        "--filter",
        "",
    ]);
    assert_eq!(result.status.code(), Some(0), "{result:?}");
    let report = read_json(&out.path().join("report.json"));
    assert_eq!(report.as_array().unwrap().len(), 0);
}

#[test]
fn reproduce_filter_selects_by_substring() {
    let out = tempfile::tempdir().unwrap();
    let result = run(&[
        "reproduce-paper",
        "--out",
        out.path().to_str().unwrap(),
        "--filter",
        "discrete",
    ]);
    assert_eq!(result.status.code(), Some(0), "{result:?}");
    let report = read_json(&out.path().join("report.json"));
    let rows = report.as_array().unwrap();
    assert!(!rows.is_empty());
    for row in rows {
        assert!(row["name"].as_str().unwrap().contains("discrete"));
        assert_eq!(row["passed"], true, "row {row}");
    }
    assert!(out.path().join("report.md").exists());
}

#[test]
fn malformed_config_yields_structured_error_and_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(
        &cfg,
        r#"{"density": {"builtin": "white_noise", "params": {"d": 2}}, "bogus": 1}"#,
    )
    .unwrap();
    let result = run(&[
        "classify",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(result.status.code(), Some(1), "{result:?}");

    let stderr: serde_json::Value = serde_json::from_slice(&result.stderr)
        .unwrap_or_else(|e| panic!("stderr is not JSON ({e}): {:?}", result.stderr));
    assert_eq!(stderr["error"]["kind"], "invalid_input");
    assert!(stderr["error"]["message"].as_str().unwrap().contains("bogus"));
}

#[test]
fn missing_config_file_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let result = run(&[
        "predict",
        "--config",
        dir.path().join("nope.json").to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(result.status.code(), Some(1), "{result:?}");
    let stderr: serde_json::Value = serde_json::from_slice(&result.stderr).unwrap();
    assert_eq!(stderr["error"]["kind"], "invalid_input");
}
