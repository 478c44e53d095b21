use std::path::Path;
use std::process::{Command, Output};

fn sbbbm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sbbbm")).args(args).env_remove("SBBBM_OUT_DIR").output().unwrap()
}

fn write_fig2(dir: &Path) -> String {
    let p = dir.join("fig2.cfg");
    std::fs::write(&p, "zeta1 = 0\nzeta2 = 1\neta1 = 1\neta2 = 1\ng = 1\nh = 1\nrho = 0\nsigma = 1\n").unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn params_reports_figure_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = sbbbm(&["params", "--config", &write_fig2(dir.path())]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["derived"]["alpha"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-15);
    assert!((v["derived"]["beta"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-15);
    let out = sbbbm(&["params", "--drag", "0.75,2.25,-1.3333333333333333,-2.6666666666666665", "--format", "csv"]);
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().contains("regime,LaggardUnfelt"));
}

#[test]
fn density_grid_integrates_to_one() {
    let out = sbbbm(&[
        "density", "--case", "tdf", "--t", "1", "--y0", "0", "--alpha", "0.5", "--lambda", "1", "--grid", "-4:4:0.01",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("xi,value"));
    let pts: Vec<(f64, f64)> = lines
        .map(|l| {
            let (a, b) = l.split_once(',').unwrap();
            (a.parse().unwrap(), b.parse().unwrap())
        })
        .collect();
    let trap: f64 = pts.windows(2).map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1)).sum();
    assert!((trap - 1.0).abs() < 1e-4, "{trap}");
}

#[test]
fn planar_density_grid_needs_config_and_writes_three_columns() {
    let out = sbbbm(&["density", "--case", "rho0", "--grid", "-1:1:0.5"]);
    assert_eq!(out.status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let out = sbbbm(&["density", "--case", "rho0", "--config", &write_fig2(dir.path()), "--grid", "-1:1:0.5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("xi,xi2,value\n"));
    assert_eq!(text.lines().count(), 26);
}

#[test]
fn figure_four_keeps_order_and_figure_one_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = sbbbm(&["figures", "--out", d]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("figure4.csv")).unwrap();
    assert!(csv.starts_with("t,x1,x2\n"));
    assert_eq!(csv.lines().count(), 10_002);
    for l in csv.lines().skip(1) {
        let v: Vec<f64> = l.split(',').map(|s| s.parse().unwrap()).collect();
        assert!(v[1] >= v[2], "{l}");
    }
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("figure4.json")).unwrap()).unwrap();
    assert_eq!(meta["alpha"], 1.0);
    assert_eq!(meta["beta"], 1.0);
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("figure1.json")).unwrap()).unwrap();
    assert_eq!(meta["alpha"], 0.5);
    assert_eq!(meta["beta"], 1.0);
}

#[test]
fn figures_are_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let out = sbbbm(&["figures", "--figure", "2", "--seed", "5", "--out", d.path().to_str().unwrap()]);
        assert!(out.status.success());
    }
    let read = |d: &tempfile::TempDir| std::fs::read(d.path().join("figure2.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
}

#[test]
fn unknown_figure_and_bad_flags_exit_two() {
    assert_eq!(sbbbm(&["figures", "--figure", "7"]).status.code(), Some(2));
    assert_eq!(sbbbm(&["params", "--bogus"]).status.code(), Some(2));
    assert_eq!(sbbbm(&["simulate", "--alpha", "0.5"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.cfg");
    std::fs::write(&bad, "zeta1 = 0\n").unwrap();
    assert_eq!(sbbbm(&["params", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn simulate_honours_the_output_directory_variable() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_sbbbm"))
        .args(["simulate", "--alpha", "0.3", "--lambda", "1", "--dt", "0.01", "--n-paths", "3"])
        .env("SBBBM_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for i in 0..3 {
        let body = std::fs::read_to_string(dir.path().join(format!("path{i}.csv"))).unwrap();
        assert!(body.starts_with("t,y,lhat\n"));
        assert_eq!(body.lines().count(), 102);
    }
}

#[test]
fn simulate_planar_json() {
    let dir = tempfile::tempdir().unwrap();
    let out = sbbbm(&["simulate", "--config", &write_fig2(dir.path()), "--dt", "0.1", "--format", "json"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["x1"].as_array().unwrap().len(), 11);
    assert_eq!(v["lcol"][0], 0.0);
}

#[test]
fn verify_exit_codes_follow_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let pass = dir.path().join("pass.toml");
    std::fs::write(&pass, "name = \"p\"\n[[tests]]\nname = \"oracle\"\ncheck = \"parameter_oracle\"\ntolerance = 1e-12\n").unwrap();
    let report = dir.path().join("report.json");
    let out = sbbbm(&["verify", "--spec", pass.to_str().unwrap(), "--out", report.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["passed"], true);

    let fail = dir.path().join("fail.toml");
    std::fs::write(&fail, "name = \"f\"\n[[tests]]\nname = \"ks\"\ncheck = \"ks_marginal\"\ntolerance = 1e-9\nargs = { n_paths = 100 }\n").unwrap();
    assert_eq!(sbbbm(&["verify", "--spec", fail.to_str().unwrap()]).status.code(), Some(1));

    let broken = dir.path().join("broken.toml");
    std::fs::write(&broken, "name = \"b\"\n[[tests]]\nname = \"x\"\ncheck = \"nope\"\ntolerance = 1.0\n").unwrap();
    assert_eq!(sbbbm(&["verify", "--spec", broken.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn verify_acceptance_suite() {
    let out = sbbbm(&["verify", "--suite", "acceptance"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}
