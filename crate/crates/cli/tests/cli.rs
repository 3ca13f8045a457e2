//! End-to-end tests of the `aoisim` binary.

use std::path::Path;
use std::process::{Command, Output};

fn aoisim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aoisim"))
        .args(args)
        .output()
        .expect("failed to launch aoisim")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn field<'a>(csv: &'a str, row: usize, column: &str) -> &'a str {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == column).unwrap();
    lines.nth(row).unwrap().split(',').nth(idx).unwrap()
}

const SYMMETRIC: &str = r#"
horizon = 2000
runs = 8
seed = 3

[network]
lambda = 0.5
p = 0.8
omega = 1.0
n = 2

[[policy]]
name = "pomw"

[[policy]]
name = "rs"
mu = [0.5, 0.5]
"#;

#[test]
fn deterministic_single_node_gives_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "one.toml",
        "horizon = 100\nruns = 2\nseed = 1\n[network]\nlambda = 1.0\np = 1.0\nomega = 1.0\n[[policy]]\nname = \"rs\"\nmu = [1.0]\n",
    );
    let o = aoisim(&["simulate", "--config", &cfg]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = stdout(&o);
    assert_eq!(field(&csv, 0, "ewsaoi_mean"), "2.000000");
    assert_eq!(field(&csv, 0, "ewsaoi_ci95"), "0.000000");
}

#[test]
fn missing_field_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", &SYMMETRIC.replace("p = 0.8\n", ""));
    let o = aoisim(&["simulate", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("network.p"), "{}", stderr(&o));
}

#[test]
fn type_errors_report_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "bad.toml",
        &SYMMETRIC.replace("runs = 8", "runs = -8"),
    );
    let o = aoisim(&["validate", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
}

#[test]
fn unreadable_config_and_unknown_figure_exit_with_two() {
    assert_eq!(
        aoisim(&["simulate", "--config", "/nonexistent.toml"])
            .status
            .code(),
        Some(2)
    );
    let dir = tempfile::tempdir().unwrap();
    let o = aoisim(&["figure", "fig42", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulate_row_respects_the_lower_bound() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "sym.toml", SYMMETRIC);
    let o = aoisim(&["simulate", "--config", &cfg]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = stdout(&o);
    assert_eq!(csv.lines().count(), 3);
    let mean: f64 = field(&csv, 0, "ewsaoi_mean").parse().unwrap();
    let lb: f64 = field(&csv, 0, "lower_bound").parse().unwrap();
    assert_eq!(field(&csv, 0, "lower_bound"), "2.750000");
    assert!(lb <= mean);
    assert_eq!(field(&csv, 0, "lambda"), "0.5;0.5");
    assert_eq!(field(&csv, 1, "policy_param"), "mu=0.5;0.5");
}

#[test]
fn bounds_report_matches_closed_forms() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "sym.toml", SYMMETRIC);
    let out = dir.path().join("out");
    let o = aoisim(&["bounds", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("bounds.csv")).unwrap();
    assert_eq!(field(&csv, 0, "r_rs_star"), "4.500000");
    assert_eq!(field(&csv, 0, "rs_ewsaoi"), "4.500000");
    assert_eq!(field(&csv, 0, "lower_bound"), "2.750000");
    assert_eq!(field(&csv, 0, "pomw_middle_bound"), "6.000000");
    assert_eq!(field(&csv, 0, "r_rsm"), "7.000000");
    assert_eq!(field(&csv, 0, "guarantee_bound"), "4.000000");
}

#[test]
fn bounds_at_unit_rates_coincide() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "one.toml",
        &SYMMETRIC.replace("lambda = 0.5", "lambda = 1.0"),
    );
    let o = aoisim(&["bounds", "--config", &cfg]);
    let csv = stdout(&o);
    let r = field(&csv, 0, "r_rs_star");
    assert_eq!(r, "3.500000");
    assert_eq!(field(&csv, 0, "pomw_middle_bound"), r);
    assert_eq!(field(&csv, 0, "r_rsm"), r);
}

#[test]
fn bounds_reject_random_networks() {
    let dir = tempfile::tempdir().unwrap();
    let text = SYMMETRIC.replace("p = 0.8", "p_range = [0.1, 0.9]");
    let cfg = write(dir.path(), "rand.toml", &text);
    assert_eq!(aoisim(&["bounds", "--config", &cfg]).status.code(), Some(2));
}

#[test]
fn simulate_refuses_sweeps_and_sweep_expands_them() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{SYMMETRIC}\n[[sweep]]\nparameter = \"p\"\nvalues = [0.5, 1.0]\n");
    let cfg = write(dir.path(), "sweep.toml", &text);
    assert_eq!(
        aoisim(&["simulate", "--config", &cfg]).status.code(),
        Some(2)
    );
    let o = aoisim(&["sweep", "--config", &cfg, "--runs", "2", "--horizon", "300"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = stdout(&o);
    assert_eq!(csv.lines().count(), 5);
    assert_eq!(field(&csv, 2, "p"), "1;1");
    assert_eq!(field(&csv, 2, "runs"), "2");
    assert_eq!(field(&csv, 2, "T"), "300");
}

#[test]
fn seed_override_and_thread_count_do_not_change_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "sym.toml", SYMMETRIC);
    let a = stdout(&aoisim(&["simulate", "--config", &cfg, "--parallel", "1"]));
    let b = stdout(&aoisim(&["simulate", "--config", &cfg, "--parallel", "3"]));
    assert_eq!(a, b);
    let c = stdout(&aoisim(&["simulate", "--config", &cfg, "--seed", "4"]));
    assert_ne!(a, c);
    assert_eq!(field(&c, 0, "seed"), "4");
}

#[test]
fn markov_documents_simulate() {
    let dir = tempfile::tempdir().unwrap();
    let text = "horizon = 500\nruns = 2\nseed = 1\n[network]\np = 0.8\nomega = [1.0, 2.0]\n[arrivals]\nmodel = \"markov\"\nlambda = 0.2\nlambda_bar = 0.6\n[[policy]]\nname = \"pomw\"\n";
    let cfg = write(dir.path(), "markov.toml", text);
    let o = aoisim(&["simulate", "--config", &cfg]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = stdout(&o);
    assert_eq!(field(&csv, 0, "arrival"), "markov");
    assert_eq!(field(&csv, 0, "lower_bound"), "");
    // policies see the chain's stationary rate 0.2 / (1 + 0.2 - 0.6)
    for l in field(&csv, 0, "lambda").split(';') {
        assert!((l.parse::<f64>().unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }
}

#[test]
fn figure_chart_is_derived_from_its_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = aoisim(&[
        "figure",
        "fig5",
        "--out",
        out,
        "--runs",
        "2",
        "--horizon",
        "50",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("fig5.csv")).unwrap();
    let svg = std::fs::read_to_string(dir.path().join("fig5.svg")).unwrap();
    assert_eq!(aoi_cli::chart::render_svg(&csv).unwrap(), svg);
    // 5 values of N with two policies and four analytic curves each
    assert_eq!(csv.lines().count(), 1 + 5 * 6);
}
