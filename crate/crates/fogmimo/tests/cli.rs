//! End-to-end runs of the command-line tool.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fogmimo"))
}

fn recipe(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../recipes").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const SMALL: &str = "lambda_a = 31.8\neta = 3.75\nload = 0.25\nr_in = 0.08\nepsilon = 0.2\ntrials = 3\n";

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn table_recipe_analytic_csv() {
    let o = run(&["cell-analytic", "--config", recipe("table1_cellular.toml").to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "n_p,p_a,cell_expected_served,cell_user_se_analytic,cell_area_se_analytic,cell_area_se_per_pilot_analytic"
    );
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[3][0], 40.0);
    assert!((rows[3][1] - 0.25).abs() < 1e-3);
}

#[test]
fn manifest_reproduces_the_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL);
    let out = dir.path().join("a.csv");
    let o = run(&["fog-sim", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "9"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let manifest = dir.path().join("a.csv.manifest.toml");
    let text = std::fs::read_to_string(&manifest).unwrap();
    assert!(text.contains("command = \"fog-sim\"") && text.contains("seed = 9"));
    let again = dir.path().join("b.csv");
    let o = run(&["fog-sim", "--config", manifest.to_str().unwrap(), "--out", again.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn seeds_change_simulations_and_repeat_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL);
    let c = cfg.to_str().unwrap();
    let a = stdout(&run(&["cell-sim", "--config", c, "--seed", "1"]));
    let b = stdout(&run(&["cell-sim", "--config", c, "--seed", "1"]));
    let d = stdout(&run(&["cell-sim", "--config", c, "--seed", "2"]));
    assert_eq!(a, b);
    assert_ne!(a, d);
}

#[test]
fn config_errors_exit_with_two_and_a_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.toml", "eta = 3.75\nq = 40\nlambda_a = -31.8\n");
    let o = run(&["fog-analytic", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"), "{}", String::from_utf8_lossy(&o.stderr));
    let cfg = write(dir.path(), "small.toml", SMALL);
    let o = run(&["fog-analytic", "--config", cfg.to_str().unwrap(), "--set", "no_such_key=1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["cell-analytic", "--config", cfg.to_str().unwrap(), "--overhead", "60"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sweep_flag_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL);
    let c = cfg.to_str().unwrap();
    let o = run(&["fog-analytic", "--config", c, "--sweep", "r_in=0.05,0.07", "--set", "theta=closed_form"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.starts_with("r_in,lambda_tilde_closed,"));
    assert_eq!(text.lines().count(), 3);
    assert!(text.lines().nth(1).unwrap().starts_with("0.05,"));
}

#[test]
fn overhead_scales_spectral_efficiency_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.toml", SMALL);
    let c = cfg.to_str().unwrap();
    let parse = |o: Output| -> Vec<f64> {
        stdout(&o).lines().nth(1).unwrap().split(',').map(|v| v.parse().unwrap()).collect()
    };
    let plain = parse(run(&["cell-analytic", "--config", c]));
    let scaled = parse(run(&["cell-analytic", "--config", c, "--overhead", "300"]));
    assert_eq!(plain[0], scaled[0]);
    for i in 2..plain.len() {
        assert!((scaled[i] - 0.8 * plain[i]).abs() < 1e-12 * plain[i]);
    }
}

#[test]
fn validate_runs_selected_criteria() {
    let o = run(&["validate", "--only", "3", "--only", "11"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().filter(|l| l.starts_with("[PASS]")).count(), 2);
    assert_eq!(run(&["validate", "--only", "99"]).status.code(), Some(2));
}
