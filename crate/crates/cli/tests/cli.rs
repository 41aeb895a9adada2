//! End-to-end runs of the `hbvm` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hbvm_core::models::simple::Quartic;
use hbvm_core::models::{Crtbp, CrtbpParams, HamiltonianModel};
use serde_json::Value;

const MU: &str = "3.04036e-6";

fn examples() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples")
}

/// Runs `hbvm run <kind> <args>` inside `dir`.
fn hbvm(dir: &Path, kind: &str, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hbvm")).current_dir(dir).arg("run").arg(kind).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Working directory holding a copy of the example configs.
fn workdir() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    for entry in std::fs::read_dir(examples()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            std::fs::copy(&path, dir.path().join(path.file_name().unwrap())).unwrap();
        }
    }
    dir
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

struct Csv {
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl Csv {
    fn read(path: &Path) -> Csv {
        let mut r = csv::Reader::from_path(path).unwrap();
        let header = r.headers().unwrap().iter().map(String::from).collect();
        let rows = r.records().map(|rec| rec.unwrap().iter().map(|x| x.parse().unwrap()).collect()).collect();
        Csv { header, rows }
    }

    fn column(&self, name: &str) -> Vec<f64> {
        let j = self.header.iter().position(|h| h == name).unwrap();
        self.rows.iter().map(|r| r[j]).collect()
    }

    fn state(&self, i: usize) -> Vec<f64> {
        let r = &self.rows[i];
        r[1..r.len() - 2].to_vec()
    }
}

fn assert_converged(out: &Output) {
    assert_eq!(code(out), 0, "{}", stderr(out));
}

#[test]
fn lyapunov_energy_from_flags_alone() {
    let dir = tempfile::tempdir().unwrap();
    let out = hbvm(
        dir.path(),
        "lyapunov-energy",
        &["--mu", MU, "--H", "-1.5001", "--k", "6", "--s", "2", "--n", "100", "--guess-period-days", "200"],
    );
    assert_converged(&out);
    let r = stdout_json(&out);
    assert_eq!(r["converged"], true);
    let days = r["result"]["orbit"]["period_days"].as_f64().unwrap();
    assert!((days / 251.34 - 1.0).abs() < 5e-3, "{days}");
    let period = r["result"]["orbit"]["period"].as_f64().unwrap();
    assert!((period * 58.13 - days).abs() < 0.1 * days, "{period} vs {days}");
    assert!(r["newton"]["residual_history"].as_array().unwrap().iter().all(|x| x.as_f64().unwrap().is_finite()));
    assert!(r["timing"]["wall_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn lyapunov_runs_from_the_example_config() {
    let dir = workdir();
    assert_converged(&hbvm(dir.path(), "lyapunov-period", &["lyapunov.toml"]));
    let r = read_json(&dir.path().join("lyapunov.json"));
    assert_eq!(r["config"]["period_days"], 200.0);
    assert!(r["config"].get("energy").is_none(), "other kind's table leaked into the echo");
    let h = r["result"]["orbit"]["energy"].as_f64().unwrap();
    assert!((h + 1.5002604).abs() < 5e-5, "{h}");

    // The trajectory closes, and its H column reproduces from the printed states.
    let csv = Csv::read(&dir.path().join("lyapunov.csv"));
    assert_eq!(csv.header.join(","), "t,q1,q2,p1,p2,H,H_drift");
    assert_eq!(csv.rows.len(), 101);
    assert_eq!(csv.state(0), csv.state(100));
    let model = Crtbp::new(CrtbpParams::planar(MU.parse().unwrap())).unwrap();
    let hs = csv.column("H");
    for (i, h) in hs.iter().enumerate() {
        let again = model.energy(&csv.state(i)).unwrap();
        assert!((again - h).abs() <= 1e-14 * h.abs(), "row {i}: {again} vs {h}");
    }
    let script = std::fs::read_to_string(dir.path().join("lyapunov.gp")).unwrap();
    assert!(script.contains("'lyapunov.csv'"));

    assert_converged(&hbvm(dir.path(), "lyapunov-energy", &["lyapunov.toml"]));
    let r = read_json(&dir.path().join("lyapunov.json"));
    let days = r["result"]["orbit"]["period_days"].as_f64().unwrap();
    assert!((days / 251.34 - 1.0).abs() < 5e-3, "{days}");
}

#[test]
fn halo_orbits_by_period_and_energy() {
    let dir = workdir();
    assert_converged(&hbvm(dir.path(), "halo-period", &["halo.toml"]));
    let r = read_json(&dir.path().join("halo.json"));
    let h = r["result"]["orbit"]["energy"].as_f64().unwrap();
    assert!((h + 1.500394).abs() < 5e-5, "{h}");
    let csv = Csv::read(&dir.path().join("halo.csv"));
    assert_eq!(csv.header.join(","), "t,q1,q2,q3,p1,p2,p3,H,H_drift");

    assert_converged(&hbvm(dir.path(), "halo-energy", &["halo.toml"]));
    let r = read_json(&dir.path().join("halo.json"));
    let days = r["result"]["orbit"]["period_days"].as_f64().unwrap();
    assert!((days / 179.19 - 1.0).abs() < 5e-3, "{days}");
    assert!(r["drift"]["max_rel"].as_f64().unwrap() <= 1e-11);
}

#[test]
fn hill_transfer_trajectory() {
    let dir = workdir();
    assert_converged(&hbvm(dir.path(), "hill-transfer", &["hill_transfer.toml"]));
    let csv = Csv::read(&dir.path().join("hill_transfer.csv"));
    assert_eq!(csv.rows.len(), 101);
    let drift = csv.column("H_drift").iter().fold(0.0_f64, |a, d| a.max(d.abs()));
    assert!(drift <= 1e-10, "{drift:e}");
    let r = read_json(&dir.path().join("hill_transfer.json"));
    assert!(r["result"]["transfer"]["relative_hamiltonian_drift"].as_f64().unwrap() <= 1e-10);
    assert!(r["result"]["transfer"]["winding_about_l2"].as_f64().unwrap().abs() >= 1.0);
    let t = csv.column("t");
    assert!((t[100] - 8.1).abs() < 1e-12);

    // Warm-started through shorter times, the answer is the same.
    let out = hbvm(dir.path(), "hill-transfer", &["hill_transfer.toml", "--tf-steps", "[4.1, 6.1]", "--trajectory", "staged.csv"]);
    assert_converged(&out);
    let staged = Csv::read(&dir.path().join("staged.csv"));
    for i in 0..=100 {
        let d = staged.state(i).iter().zip(csv.state(i)).fold(0.0_f64, |a, (x, y)| a.max((x - y).abs()));
        assert!(d < 1e-8, "node {i}: {d:e}");
    }
}

#[test]
fn halo_transfer_between_the_two_orbits() {
    let dir = workdir();
    assert_converged(&hbvm(dir.path(), "halo-transfer", &["halo_transfer.toml"]));
    let r = read_json(&dir.path().join("halo_transfer.json"));
    let tr = &r["result"]["transfer"];
    assert!(tr["end_to_start_error"].as_f64().unwrap().abs() < 1e-9);
    let days = tr["transfer_days"].as_f64().unwrap();
    assert!((days - 0.5 * (180.0 + 179.19)).abs() < 0.5, "{days}");
    let csv = Csv::read(&dir.path().join("halo_transfer.csv"));
    assert_eq!(csv.header.len(), 1 + 12 + 2);
}

#[test]
fn continuation_sweep() {
    let dir = workdir();
    assert_converged(&hbvm(dir.path(), "continuation", &["continuation.toml"]));
    let r = read_json(&dir.path().join("continuation.json"));
    let steps = r["result"]["steps"].as_array().unwrap();
    assert_eq!(steps.len(), 2);
    assert!(steps.iter().all(|s| s["converged"] == true));
    let h = steps[1]["orbit"]["energy"].as_f64().unwrap();
    assert!((h + 1.5001).abs() < 1e-4, "{h}");

    // Energy driver, with a value that breaks the order of the list.
    let out = hbvm(
        dir.path(),
        "continuation",
        &["continuation.toml", "--driver", "lyapunov-energy", "--values", "[-1.50026, -1.5001, -1.5003]"],
    );
    assert_eq!(code(&out), 2);
    let r = read_json(&dir.path().join("continuation.json"));
    let steps = r["result"]["steps"].as_array().unwrap();
    assert_eq!(steps.iter().map(|s| s["converged"] == true).collect::<Vec<_>>(), [true, true, false]);
    assert_eq!(r["converged"], false);
}

#[test]
fn ivp_with_dense_output() {
    let dir = workdir();
    assert_converged(&hbvm(dir.path(), "ivp", &["pendulum.toml"]));
    let csv = Csv::read(&dir.path().join("pendulum.csv"));
    assert_eq!(csv.rows.len(), 4 * 200 + 1);
    let t = csv.column("t");
    assert!((t[800] - 20.0).abs() < 1e-12 && (t[1] - 0.025).abs() < 1e-15);
    // Mesh rows conserve the energy; rows in between come from a degree-s interpolant.
    let drift = csv.column("H_drift");
    assert!(drift.iter().step_by(4).all(|d| d.abs() < 1e-12));
    assert!(drift.iter().all(|d| d.abs() < 1e-4));
    assert!(drift.iter().any(|d| d.abs() > 1e-8));
}

#[test]
fn polynomial_hamiltonian_column_is_constant() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["--model", "quartic", "--y0", "[1.0, 0.5]", "--h", "0.2", "--n", "50", "--k", "4", "--s", "2"];
    let out = hbvm(dir.path(), "ivp", &[&args[..], &["--trajectory", "q.csv"]].concat());
    assert_converged(&out);
    let csv = Csv::read(&dir.path().join("q.csv"));
    assert_eq!(csv.rows.len(), 51);
    let h = csv.column("H");
    for (i, hi) in h.iter().enumerate() {
        assert!((hi - h[0]).abs() <= 4.0 * f64::EPSILON * h[0], "row {i}: {hi} vs {}", h[0]);
        assert_eq!(Quartic.energy(&csv.state(i)).unwrap(), *hi);
    }
}

#[test]
fn outputs_are_deterministic() {
    let dir = workdir();
    let strip = |mut v: Value| {
        v.as_object_mut().unwrap().remove("timing");
        serde_json::to_string(&v).unwrap()
    };
    let mut seen = Vec::new();
    for _ in 0..2 {
        assert_converged(&hbvm(dir.path(), "halo-energy", &["halo.toml"]));
        let csv = std::fs::read(dir.path().join("halo.csv")).unwrap();
        seen.push((csv, strip(read_json(&dir.path().join("halo.json")))));
    }
    assert!(seen[0] == seen[1]);
}

#[test]
fn newton_failure_still_writes_the_report() {
    let dir = workdir();
    let out = hbvm(dir.path(), "lyapunov-energy", &["lyapunov.toml", "--max-iters", "2"]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
    let r = read_json(&dir.path().join("lyapunov.json"));
    assert_eq!(r["converged"], false);
    assert_eq!(r["best_iterate"], true);
    assert!(r["error"].as_str().unwrap().contains("did not converge"));
    assert_eq!(r["newton"]["iterations"], 2);
    assert!(r["drift"]["max_abs"].as_f64().unwrap().is_finite());
    assert_eq!(Csv::read(&dir.path().join("lyapunov.csv")).rows.len(), 101);
}

#[test]
fn configuration_errors_exit_with_one() {
    let dir = workdir();
    let cases: [(&str, Vec<&str>, &str); 8] = [
        ("lyapunov-energy", vec!["--mu", MU, "--guess-period-days", "200"], "`energy`"),
        ("halo-period", vec!["--mu", MU], "`period_days`"),
        ("hill-transfer", vec!["--tf", "1.0"], "`end`"),
        ("lyapunov-period", vec!["--mu", MU, "--period-days", "200", "--tf", "3"], "`tf`"),
        ("lyapunov-period", vec!["--mu", MU, "--period-days", "200", "--k", "1", "--s", "2"], "k ≥ s"),
        ("lyapunov-period", vec!["--mu", MU, "--period-days", "-5"], "period"),
        ("ivp", vec!["--model", "crtbp-planar", "--y0", "[1,0,0,1]", "--h", "0.1"], "`mu`"),
        ("halo-period", vec!["missing.toml"], "missing.toml"),
    ];
    for (kind, args, needle) in cases {
        let out = hbvm(dir.path(), kind, &args);
        assert_eq!(code(&out), 1, "{kind} {args:?}");
        assert!(stderr(&out).contains(needle), "{kind} {args:?}: {}", stderr(&out));
        assert!(out.stdout.is_empty());
    }
    let out = hbvm(dir.path(), "halo-period", &["halo.toml", "--report", "no/such/dir/r.json"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("r.json"), "{}", stderr(&out));
    let out = hbvm(dir.path(), "ivp", &["hill_transfer.toml"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn config_flag_and_overrides_compose() {
    let dir = workdir();
    let out = hbvm(dir.path(), "lyapunov-period", &["--n", "80", "--config", "lyapunov.toml", "--T", "210", "--report", "r.json"]);
    assert_converged(&out);
    let r = read_json(&dir.path().join("r.json"));
    assert_eq!(r["method"]["n"], 80);
    let days = r["result"]["orbit"]["period_days"].as_f64().unwrap();
    assert!((days - 210.0).abs() < 1e-9);
    assert_eq!(Csv::read(&dir.path().join("lyapunov.csv")).rows.len(), 81);
}
