use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn slipplap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_slipplap"))
        .args(args)
        .output()
        .unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Remove wall-clock fields at any depth.
fn strip_timing(v: &mut Value) {
    match v {
        Value::Object(m) => {
            m.retain(|k, _| k != "wall_time_s" && k != "runtime_s");
            m.values_mut().for_each(strip_timing);
        }
        Value::Array(a) => a.iter_mut().for_each(strip_timing),
        _ => {}
    }
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn exponents_example() {
    let out = slipplap(&["exponents", "--p", "1.8", "--n", "3"]);
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["q_hat"].as_f64().unwrap() - 1.84615).abs() < 1e-5);
    assert!((v["r_of_2"].as_f64().unwrap() - 6.0 / 2.8).abs() < 1e-12);
}

#[test]
fn mms_linear_case_is_second_order() {
    let dir = tempfile::tempdir().unwrap();
    let out = slipplap(&["mms", "--p", "2", "--mu", "0", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = read_json(&dir.path().join("mms_report.json"));
    assert!(v["min_order"].as_f64().unwrap() >= 1.9);
    assert!(String::from_utf8_lossy(&out.stdout).contains("observed order"));
}

#[test]
fn zero_forcing_gives_zero_field_without_corrections() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "grid = 12\n[forcing]\nkind = \"zero\"\n");
    let out_dir = dir.path().join("o");
    let out = slipplap(&["solve", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = read_json(&out_dir.join("solve_report.json"));
    assert_eq!(v["report"]["corrections"], 0);
    let csv = fs::read_to_string(out_dir.join("u.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("x,y,u1,u2"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 14 * 14);
    for row in rows {
        let c: Vec<f64> = row.split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!((c[2], c[3]), (0.0, 0.0));
    }
}

#[test]
fn dump_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = slipplap(&[
        "--dump-config",
        "--grid",
        "20",
        "--p",
        "1.7",
        "--bc",
        "bardos",
        "--seed",
        "9",
    ]);
    assert!(out.status.success());
    let first = String::from_utf8(out.stdout).unwrap();
    let cfg = write_config(dir.path(), &first);
    let out = slipplap(&["--dump-config", "--config", &cfg]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap(), first);
}

#[test]
fn runs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "grid = 12\np = 1.8\nmu = 0.1\n[forcing]\nkind = \"random\"\n",
    );
    let mut reports = Vec::new();
    let mut fields = Vec::new();
    for k in 0..2 {
        let out_dir = dir.path().join(format!("run{k}"));
        let out = slipplap(&[
            "solve",
            "--config",
            &cfg,
            "--seed",
            "5",
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let mut v = read_json(&out_dir.join("solve_report.json"));
        strip_timing(&mut v);
        reports.push(v);
        fields.push(fs::read(out_dir.join("u.csv")).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
    assert_eq!(fields[0], fields[1]);
}

#[test]
fn linsolve_recovers_manufactured_solution() {
    let dir = tempfile::tempdir().unwrap();
    let out = slipplap(&["linsolve", "--grid", "32", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = read_json(&dir.path().join("linsolve_report.json"));
    assert!(v["error_vs_exact"].as_f64().unwrap() < 1e-2);
    assert!(dir.path().join("u_du.csv").exists());
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "gird = 12\n");
    assert_eq!(slipplap(&["solve", "--config", &cfg]).status.code(), Some(1));
    assert_eq!(slipplap(&["solve", "--p", "3"]).status.code(), Some(1));
    assert_eq!(slipplap(&["solve", "--bc", "periodic"]).status.code(), Some(1));
    assert_eq!(slipplap(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(slipplap(&[]).status.code(), Some(1));
    assert_eq!(slipplap(&["--help"]).status.code(), Some(0));
}

#[test]
fn gate_violation_with_divergence_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "grid = 16\np = 1.2\nmu = 1e-4\n[solver]\ntheta = 1.0\nmax_iter = 30\n[forcing]\nscale = 5.0\n",
    );
    let out_dir = dir.path().join("o");
    let out = slipplap(&["solve", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    let v = read_json(&out_dir.join("solve_report.json"));
    assert_eq!(v["converged"], false);
    assert_eq!(v["gate"]["satisfied"], false);
}

#[test]
fn singular_solve_uses_the_minimiser() {
    let dir = tempfile::tempdir().unwrap();
    let out = slipplap(&[
        "solve",
        "--grid",
        "12",
        "--mu",
        "0",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = read_json(&dir.path().join("solve_report.json"));
    assert_eq!(v["method"], "energy minimisation");
    assert_eq!(v["minimizer"]["converged"], true);
}
