use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;
use weakarma::experiments::presets::{arma11_null, arma_size, NoiseModel, Scale};
use weakarma::experiments::{parse_csv, Dgp};
use weakarma::simulate::NoiseKind;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_weakarma"));
    c.env_remove("WEAKARMA_TABLE");
    c
}

fn ok(out: Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Self {
        let ws = Workspace { dir: tempfile::tempdir().unwrap() };
        let (spec, theta) = arma11_null();
        let dgp = Dgp { spec: spec.clone(), theta, noise: NoiseKind::ProductPt, burnin: 500 };
        std::fs::write(ws.path("dgp.json"), serde_json::to_string(&dgp).unwrap()).unwrap();
        std::fs::write(ws.path("spec.json"), serde_json::to_string(&spec).unwrap()).unwrap();
        ws
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn arg(&self, name: &str) -> String {
        self.path(name).to_string_lossy().into_owned()
    }

    fn table(&self) -> PathBuf {
        let p = self.path("uk.bin");
        if !p.exists() {
            ok(bin().args(["--seed", "5", "tabulate", "--K", "1..3", "--R", "2000", "--steps", "200", "--out"]).arg(&p).output().unwrap());
        }
        p
    }
}

fn simulate(ws: &Workspace, n: usize, seed: u64) -> PathBuf {
    let out = ws.path("x.csv");
    ok(bin()
        .args(["--seed", &seed.to_string(), "simulate", "--model", &ws.arg("dgp.json"), "--n", &n.to_string(), "--out"])
        .arg(&out)
        .output()
        .unwrap());
    out
}

#[test]
fn simulate_is_reproducible_and_seeded() {
    let ws = Workspace::new();
    let a = std::fs::read_to_string(simulate(&ws, 50, 3)).unwrap();
    let b = std::fs::read_to_string(simulate(&ws, 50, 3)).unwrap();
    let c = std::fs::read_to_string(simulate(&ws, 50, 4)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert_eq!(a.lines().count(), 51);
}

fn fit(ws: &Workspace) -> serde_json::Value {
    let data = simulate(ws, 2000, 9);
    ok(bin()
        .args(["fit", "--model", &ws.arg("spec.json"), "--data"])
        .arg(&data)
        .args(["--init", "0.9,0.5", "--out", &ws.arg("fit.json")])
        .output()
        .unwrap());
    serde_json::from_str(&std::fs::read_to_string(ws.path("fit.json")).unwrap()).unwrap()
}

#[test]
fn fit_then_test_produces_reports() {
    let ws = Workspace::new();
    let f = fit(&ws);
    let theta = f["estimate"]["theta_hat"].as_array().unwrap();
    assert!((theta[0].as_f64().unwrap() - 0.95).abs() < 0.05, "{f}");
    assert_eq!(f["stability"]["stable"], true);

    let table = ws.table();
    let json = ok(bin()
        .args(["--format", "json", "test", "--model", &ws.arg("spec.json"), "--fit", &ws.arg("fit.json")])
        .args(["--data", &ws.arg("x.csv"), "--m", "1,2,3", "--table"])
        .arg(&table)
        .output()
        .unwrap());
    let report: serde_json::Value = serde_json::from_str(&json).unwrap();
    let rows = report["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    for row in rows {
        let p = row["p_sn"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&p));
        assert!(row["q_sn"].as_f64().unwrap() >= 0.0);
    }

    let md = ok(bin()
        .env("WEAKARMA_TABLE", &table)
        .args(["--format", "md", "test", "--model", &ws.arg("spec.json"), "--fit", &ws.arg("fit.json")])
        .args(["--data", &ws.arg("x.csv"), "--m", "1,3"])
        .output()
        .unwrap());
    assert!(md.starts_with("| Lag | m = 1 | m = 3 |"), "{md}");
    assert!(md.contains("Q^SN"));
}

#[test]
fn monte_carlo_size_from_plan_file() {
    let ws = Workspace::new();
    let mut plan = arma_size(NoiseModel::III, Scale::Desk);
    plan.n_list = vec![300];
    plan.m_list = vec![1, 3];
    plan.replications = 20;
    std::fs::write(ws.path("plan.json"), serde_json::to_string(&plan).unwrap()).unwrap();
    let table = ws.table();
    let csv = ok(bin()
        .args(["--threads", "2", "mc-size", "--plan", &ws.arg("plan.json"), "--table"])
        .arg(&table)
        .output()
        .unwrap());
    let freq = parse_csv(&csv).unwrap();
    assert_eq!(freq.cells.len(), 2 * 4);
    for cell in &freq.cells {
        match cell.rate {
            Some(r) => {
                assert_eq!(cell.replications + cell.failed_fits, 20);
                assert!((0.0..=100.0).contains(&r));
            }
            // No degrees of freedom remain for the chi-square tests at m = 1.
            None => assert!(cell.m == 1 && !cell.test.is_self_normalized()),
        }
    }
    let again = ok(bin()
        .args(["--threads", "1", "mc-size", "--plan", &ws.arg("plan.json"), "--table"])
        .arg(&table)
        .output()
        .unwrap());
    assert_eq!(csv, again);
}

#[test]
fn analyze_prices_file() {
    let ws = Workspace::new();
    let mut text = String::from("Date,Close\n");
    let mut price = 100.0f64;
    for t in 0..400 {
        price *= (0.01 * ((t as f64 * 1.7).sin() + 0.3 * (t as f64 * 0.37).cos())).exp();
        text.push_str(&format!("d{t},{price}\n"));
    }
    std::fs::write(ws.path("prices.csv"), text).unwrap();
    let table = ws.table();
    let json = ok(bin()
        .args(["analyze", "--data", &ws.arg("prices.csv"), "--m", "1,2,3", "--table"])
        .arg(&table)
        .output()
        .unwrap());
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["n_returns"], 399);
    assert_eq!(v["report"]["rows"].as_array().unwrap().len(), 3);
}

fn fails_with(args: &[&str], needle: &str) {
    let out = bin().args(args).output().unwrap();
    assert_eq!(out.status.code(), Some(if needle.is_empty() { 2 } else { 1 }), "{args:?}");
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains(needle), "{err}");
}

#[test]
fn errors_exit_nonzero() {
    let ws = Workspace::new();
    fails_with(&["fit", "--model", &ws.arg("spec.json"), "--data", &ws.arg("missing.csv")], "error:");
    fails_with(&["tabulate", "--K", "0..2"], "K list");
    fails_with(&["tabulate", "--K", "1"], "--out");
    fails_with(&["mc-size"], "--plan or --preset");
    fails_with(&["mc-size", "--preset", "nope", "--table", &ws.arg("x")], "error:");
    fails_with(&["frobnicate"], "");
    std::fs::write(ws.path("bad.csv"), "x\n1\nfoo\n").unwrap();
    fails_with(&["fit", "--model", &ws.arg("spec.json"), "--data", &ws.arg("bad.csv")], "line 3");
}

#[test]
fn environment_table_is_used() {
    let ws = Workspace::new();
    let table = ws.table();
    simulate(&ws, 300, 1);
    let spec_path = ws.arg("spec.json");
    ok(bin().args(["fit", "--model", &spec_path, "--data", &ws.arg("x.csv"), "--out", &ws.arg("fit.json")]).output().unwrap());
    let args = ["test", "--model", &spec_path, "--fit", &ws.arg("fit.json"), "--data", &ws.arg("x.csv"), "--m", "1,2"];
    let with_env = bin().env("WEAKARMA_TABLE", &table).args(args).output().unwrap();
    assert!(with_env.status.success());
    assert!(!String::from_utf8_lossy(&with_env.stderr).contains("tabulating"));
    let with_flag = ok(bin().args(args).arg("--table").arg(&table).output().unwrap());
    assert_eq!(String::from_utf8(with_env.stdout).unwrap(), with_flag);
    let missing = bin().env("WEAKARMA_TABLE", Path::new("/nonexistent/uk.bin")).args(args).output().unwrap();
    assert_eq!(missing.status.code(), Some(1));
}
