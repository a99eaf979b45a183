use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};
use tempfile::TempDir;

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lab")).args(args).output().unwrap()
}

fn config(dir: &TempDir, name: &str, json: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, json).unwrap();
    path
}

fn run(cmd: &str, cfg: &Path, extra: &[&str]) -> (i32, Value) {
    let mut args = vec![cmd, "--config", cfg.to_str().unwrap()];
    args.extend_from_slice(extra);
    let out = lab(&args);
    let code = out.status.code().unwrap();
    let json = serde_json::from_slice(&out.stdout).unwrap_or(Value::Null);
    (code, json)
}

const SMALL: &str = r#""samples":{"volume":20000,"embed_dual":5000,"embed_polar":500,"jacobian":500,"inequality_pairs":500}"#;

#[test]
fn usage_and_config_errors_exit_one() {
    let dir = TempDir::new().unwrap();
    let cases = [
        ("malformed.json", "{\"tuple\": ["),
        ("zero_eps.json", r#"{"tuple":[{"family":"power","p":2.0}],"epsilon":0.0}"#),
        ("empty.json", r#"{"tuple":[]}"#),
        ("unknown_field.json", r#"{"tuple":[{"family":"power","p":2.0}],"colour":"red"}"#),
        ("bad_p.json", r#"{"tuple":[{"family":"power","p":1.0}]}"#),
    ];
    for (name, json) in cases {
        let cfg = config(&dir, name, json);
        let out = lab(&["capacity", "--config", cfg.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(1), "{name}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!out.stderr.is_empty());
    }
    let cfg = config(&dir, "ok.json", r#"{"tuple":[{"family":"power","p":2.0}]}"#);
    assert_eq!(lab(&["bogus", "--config", cfg.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(lab(&["capacity"]).status.code(), Some(1));
    assert_eq!(lab(&["capacity", "--config", "/nonexistent/cfg.json"]).status.code(), Some(1));
    assert_eq!(lab(&["--help"]).status.code(), Some(0));
}

#[test]
fn three_dimensional_plot_is_unsupported() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, "n3.json", r#"{"tuple":[{"family":"power","p":2.0},{"family":"power","p":2.0},{"family":"power","p":2.0}]}"#);
    let svg = dir.path().join("k.svg");
    let out = lab(&["plot", "--config", cfg.to_str().unwrap(), "--out", svg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!svg.exists());
}

#[test]
fn failed_computation_exits_two() {
    let dir = TempDir::new().unwrap();
    // a huge finite-difference step leaves no point clear of the seams
    let cfg = config(
        &dir,
        "step.json",
        &format!(r#"{{"tuple":[{{"family":"power","p":2.5}},{{"family":"power","p":2.5}}],"grids":{{"jacobian_step":0.09}},{SMALL}}}"#),
    );
    let out = lab(&["embed", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn capacity_values() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, "p3.json", r#"{"tuple":[{"family":"power","p":3.0},{"family":"power","p":3.0}]}"#);
    let (code, v) = run("capacity", &cfg, &[]);
    assert_eq!(code, 0);
    let c = v["result"]["c_dual"].as_f64().unwrap();
    assert!((c - 7.559_526_299_369_238).abs() < 1e-9, "{c}");
    assert_eq!(v["command"], "capacity");
    assert_eq!(v["pass"], true);

    let bytes = std::fs::read(&cfg).unwrap();
    assert_eq!(v["config_sha256"].as_str().unwrap(), hex::encode(Sha256::digest(&bytes)));
}

#[test]
fn embed_reports_build_and_infeasibility() {
    let dir = TempDir::new().unwrap();
    let ok = config(
        &dir,
        "p25.json",
        &format!(r#"{{"tuple":[{{"family":"power","p":2.5}},{{"family":"power","p":2.5}}],{SMALL}}}"#),
    );
    let (code, v) = run("embed", &ok, &[]);
    assert_eq!(code, 0);
    assert_eq!(v["result"]["built"], true);
    assert!(v["result"]["jacobian_max_dev"].as_f64().unwrap() <= 1e-4);

    // infeasible constraints are a finding, not a failure
    let se = config(
        &dir,
        "se.json",
        &format!(r#"{{"tuple":[{{"family":"scaled_exp"}},{{"family":"scaled_exp"}}],"epsilon":0.01,{SMALL}}}"#),
    );
    let (code, v) = run("embed", &se, &[]);
    assert_eq!(code, 0);
    assert_eq!(v["result"]["built"], false);
    assert!(v["result"]["feasibility"][0]["min_slack"].as_f64().unwrap() < 0.0);
}

#[test]
fn power_two_plots_are_circles() {
    let dir = TempDir::new().unwrap();
    for (body, radius) in [("kphi", 2f64.sqrt()), ("kpolar", 0.5f64.sqrt())] {
        let cfg = config(
            &dir,
            &format!("{body}.json"),
            &format!(r#"{{"tuple":[{{"family":"power","p":2.0}},{{"family":"power","p":2.0}}],"plot":{{"body":"{body}","resolution":64}}}}"#),
        );
        let svg = dir.path().join(format!("{body}.svg"));
        let (code, v) = run("plot", &cfg, &["--out", svg.to_str().unwrap()]);
        assert_eq!(code, 0);
        assert_eq!(v["result"]["body"], body);
        assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<svg"));
        let csv = std::fs::read_to_string(svg.with_extension("csv")).unwrap();
        let mut rows = csv.lines();
        assert_eq!(rows.next(), Some("theta,x1,x2"));
        for row in rows {
            let cols: Vec<f64> = row.split(',').map(|s| s.parse().unwrap()).collect();
            assert!((cols[1].hypot(cols[2]) - radius).abs() < 1e-9, "{body}: {row}");
        }
    }
}

#[test]
fn seed_flag_and_out_file() {
    let dir = TempDir::new().unwrap();
    let cfg = config(
        &dir,
        "vol.json",
        r#"{"tuple":[{"family":"power","p":2.0},{"family":"power","p":2.0}],"seed":3,"samples":{"volume":20000}}"#,
    );
    let (_, a) = run("volume", &cfg, &[]);
    let (_, b) = run("volume", &cfg, &["--seed", "4"]);
    assert_eq!(a["seed"], 3);
    assert_eq!(b["seed"], 4);
    assert_ne!(a["result"], b["result"]);

    let out = dir.path().join("vol_out.json");
    let printed = lab(&["volume", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(printed.status.code(), Some(0));
    assert!(printed.stdout.is_empty());
    let written: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(written, a);
}

#[test]
fn mixed_report_records_the_infeasible_factor() {
    let dir = TempDir::new().unwrap();
    let cfg = config(
        &dir,
        "mixed.json",
        &format!(r#"{{"tuple":[{{"family":"power","p":2.0}},{{"family":"exp"}}],{SMALL}}}"#),
    );
    let (code, v) = run("report", &cfg, &[]);
    assert_eq!(code, 0);
    let r = &v["result"];
    for key in ["capacity", "inequalities", "embed"] {
        assert!(r.get(key).is_some(), "missing {key}");
    }
    assert_eq!(r["embed"]["built"], false);
    let slack = r["embed"]["feasibility"][1]["min_slack"].as_f64().unwrap();
    assert!((slack - -0.112_898_972_035_961_89).abs() < 1e-9, "{slack}");
}

#[test]
fn in_process_runner_matches_binary() {
    let dir = TempDir::new().unwrap();
    let cfg = config(&dir, "se.json", r#"{"tuple":[{"family":"scaled_exp"},{"family":"scaled_exp"}]}"#);
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = orlicz_lab::run(["lab", "capacity", "--config", cfg.to_str().unwrap()], &mut out, &mut err);
    assert_eq!(code, 0);
    assert_eq!(out, lab(&["capacity", "--config", cfg.to_str().unwrap()]).stdout);
}
