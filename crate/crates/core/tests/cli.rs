use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn arfima(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_arfima"))
        .args(args)
        .env_remove("ARFIMA_SEED")
        .env_remove("ARFIMA_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect()
}

#[test]
fn help_matches_golden() {
    let o = arfima(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    let golden = fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/help.txt")).unwrap();
    assert_eq!(stdout(&o), golden);
}

#[test]
fn simulate_writes_requested_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("y.csv");
    let o = arfima(&["simulate", "--d", "0.4", "--alpha", "0.5", "--n", "100", "--seed", "7", "-o", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&fs::read_to_string(&out).unwrap());
    assert_eq!(rows.len(), 100);
    assert!(rows.iter().all(|r| r[0].parse::<f64>().unwrap().is_finite()));
}

#[test]
fn seed_makes_simulation_reproducible() {
    let a = arfima(&["simulate", "--d", "1", "--n", "20", "--seed", "5"]);
    let b = arfima(&["simulate", "--d", "1", "--n", "20", "--seed", "5"]);
    let c = arfima(&["simulate", "--d", "1", "--n", "20", "--seed", "6"]);
    assert_eq!(stdout(&a), stdout(&b));
    assert_ne!(stdout(&a), stdout(&c));
}

#[test]
fn theory_random_walk_one_step() {
    let o = arfima(&["mspe-theory", "--d", "1", "--h-max", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 1);
    let total: f64 = rows[0][5].parse().unwrap();
    assert!((total - 1.0).abs() < 1e-10, "{total}");
}

#[test]
fn too_short_series_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("short.csv");
    fs::write(&input, "y\n1.0\n2.0\n3.0\n").unwrap();
    let o = arfima(&["estimate", "--input", input.to_str().unwrap(), "--p1", "3"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn infeasible_model_is_a_usage_error() {
    let o = arfima(&["simulate", "--alpha", "0.5", "--beta", "0.5", "--d", "0", "--n", "10"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("common zeros"));
    assert_eq!(arfima(&["simulate", "--no-such-flag"]).status.code(), Some(1));
}

#[test]
fn estimate_and_predict_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("y.csv");
    let o = arfima(&["simulate", "--d", "0.3", "--alpha", "0.5", "--n", "800", "--seed", "11", "-o", data.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));

    let o = arfima(&["estimate", "--input", data.to_str().unwrap(), "--p1", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&stdout(&o));
    let get = |k: &str| rows.iter().find(|r| r[0] == k).map(|r| r[1].clone()).unwrap();
    assert!((get("d").parse::<f64>().unwrap() - 0.3).abs() < 0.2);
    assert!((get("sigma2").parse::<f64>().unwrap() - 1.0).abs() < 0.2);
    assert_eq!(get("converged"), "true");

    let o = arfima(&["predict", "--input", data.to_str().unwrap(), "--p1", "1", "--fit", "--h", "4"]);
    assert_eq!(o.status.code(), Some(0));
    let a = csv_rows(&stdout(&o));
    assert_eq!(a.len(), 4);
    let o = arfima(&["predict", "--input", data.to_str().unwrap(), "--p1", "1", "--fit", "--h", "4", "--method", "closed-form"]);
    let b = csv_rows(&stdout(&o));
    for (x, y) in a.iter().zip(&b) {
        let (x, y): (f64, f64) = (x[1].parse().unwrap(), y[1].parse().unwrap());
        assert!((x - y).abs() <= 1e-8 * x.abs().max(1.0));
    }
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "[model]\nd = 1.0\n[run]\nn = 12\nseed = 3\n").unwrap();
    let from_file = arfima(&["--config", cfg.to_str().unwrap(), "simulate"]);
    assert_eq!(from_file.status.code(), Some(0));
    assert_eq!(csv_rows(&stdout(&from_file)).len(), 12);
    let flags = arfima(&["--config", cfg.to_str().unwrap(), "simulate", "--n", "5"]);
    assert_eq!(csv_rows(&stdout(&flags)).len(), 5);
}

#[test]
fn monte_carlo_writes_results_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("res.csv");
    let o = arfima(&[
        "mc", "custom", "--d", "0.3", "--n", "200", "--reps", "8", "--seed", "1", "--threads", "2", "-o",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(csv_rows(&fs::read_to_string(&out).unwrap()).len(), 1);
    let manifest = fs::read_to_string(dir.path().join("res.manifest.toml")).unwrap();
    assert!(manifest.contains("seed = 1"), "{manifest}");
}
