//! End-to-end runs of the `dynepi` binary.

use std::path::Path;
use std::process::Command;

fn dynepi(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_dynepi")).args(args).env("DYNEPI_THREADS", "2").output().unwrap()
}

const SMALL: &[&str] = &["--n", "60", "-T", "1", "--runs", "3", "--roots-per-run", "3", "--grid-points", "5"];

fn run_in(dir: &Path, cmd: &str, extra: &[&str]) -> std::process::Output {
    let out = dir.to_str().unwrap();
    let mut args = vec![cmd, "--out", out];
    args.extend_from_slice(SMALL);
    args.extend_from_slice(extra);
    dynepi(&args)
}

#[test]
fn epidemic_writes_curve_svg_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), "epidemic", &["--times"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("curve.csv")).unwrap();
    assert_eq!(csv.lines().count(), 6);
    assert!(dir.path().join("curve.svg").exists());
    assert!(dir.path().join("infection_times.csv").exists());
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["run_seeds"].as_array().unwrap().len(), 3);
    assert_eq!(manifest["config"]["graph"]["n"], 60);
    assert_eq!(manifest["threads"], 2);
    assert!(manifest["versions"]["dynepi_core"].is_string());
}

#[test]
fn same_seed_same_files() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert!(run_in(a.path(), "limit", &["--seed", "5"]).status.success());
    assert!(run_in(b.path(), "limit", &["--seed", "5"]).status.success());
    let read = |d: &Path| std::fs::read(d.join("limit_curve.csv")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
}

#[test]
fn compare_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), "compare", &["--tolerance", "1"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["a.csv", "b.csv", "gaps.csv", "report.json", "compare.svg", "manifest.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let a = dir.path().join("a.csv");
    let a = a.to_str().unwrap();
    let out = dynepi(&["compare", "--curves", a, a, "--tolerance", "0"]);
    assert_eq!(out.status.code(), Some(0));
    let b = dir.path().join("b.csv");
    let out = dynepi(&["compare", "--curves", a, b.to_str().unwrap(), "--tolerance", "0"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn generate_and_diagnose() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), "generate", &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let g = dynepi_core::io::decode_graph(&std::fs::read_to_string(dir.path().join("graph.txt")).unwrap()).unwrap();
    assert_eq!(g.n(), 60);
    assert!(dir.path().join("meta.json").exists());
    let diag = tempfile::tempdir().unwrap();
    let out = run_in(diag.path(), "diagnose", &["--sizes", "100,400", "--samples", "200", "--radius", "1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(diag.path().join("diagnostic.csv")).unwrap();
    assert!(csv.starts_with("n,r,tv_distance,se\n"));
    assert_eq!(csv.lines().count(), 3);
    let hist = std::fs::read_to_string(diag.path().join("histogram_n400.csv")).unwrap();
    let first = hist.lines().nth(1).unwrap();
    let file = first.rsplit(',').next().unwrap();
    assert!(diag.path().join(file).exists());
}

#[test]
fn accept_reports_and_exit_codes() {
    let out = dynepi(&["accept", "--only", "9"]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.lines().count(), 1);
    assert!(stdout.starts_with("criterion  9 PASS"));
    assert_eq!(dynepi(&["accept", "--only", "11"]).status.code(), Some(2));
}

#[test]
fn config_errors_exit_2() {
    assert_eq!(dynepi(&["epidemic", "--preset", "fig9"]).status.code(), Some(2));
    assert_eq!(dynepi(&["epidemic", "--runs", "0"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"name": "x", "epidemic": {"rho": 2}}"#).unwrap();
    let out = dynepi(&["epidemic", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.json"));
}

#[test]
fn config_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.json");
    std::fs::write(
        &cfg,
        r#"{
            "name": "from-file",
            "graph": {"model": "cm", "degrees": [2, 2, 2, 2, 4, 4], "alpha": 0.5, "T": 1},
            "epidemic": {"rho": 0.5, "d_i": {"dist": "exp", "rate": 2}, "d_r": {"dist": "exp", "rate": 3}},
            "runs": 2,
            "grid_points": 4
        }"#,
    )
    .unwrap();
    let out_dir = dir.path().join("run");
    let out = dynepi(&["epidemic", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(std::fs::read_to_string(out_dir.join("curve.csv")).unwrap().lines().count(), 5);
}
