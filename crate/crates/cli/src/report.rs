//! CSV tables written by the commands.

use aoi_core::analysis::BoundReport;
use aoi_core::sim::RunMetrics;

use crate::config::{join, Experiment, NetworkPoint};
use crate::CliError;

pub const SIMULATE_COLUMNS: [&str; 20] = [
    "policy",
    "N",
    "T",
    "runs",
    "seed",
    "lambda",
    "p",
    "omega",
    "ewsaoi_mean",
    "ewsaoi_ci95",
    "r_rs_star",
    "pomw_middle_bound",
    "r_rsm",
    "lower_bound",
    "arrival",
    "arrival_lambda",
    "arrival_lambda_bar",
    "policy_param",
    "burn_in",
    "ewsaoi_std",
];

pub const BOUNDS_COLUMNS: [&str; 15] = [
    "N",
    "lambda",
    "p",
    "omega",
    "rs_mu",
    "rs_ewsaoi",
    "mu_star",
    "r_rs_star",
    "mu_prime",
    "mu_m",
    "pomw_middle_bound",
    "r_rsm",
    "q_star",
    "lower_bound",
    "guarantee_bound",
];

pub fn fixed(v: f64) -> String {
    format!("{v:.6}")
}

fn fixed_vec(v: &[f64]) -> String {
    v.iter().map(|x| fixed(*x)).collect::<Vec<_>>().join(";")
}

fn arrival_columns(point: &NetworkPoint) -> [String; 3] {
    match &point.markov {
        None => ["bernoulli".into(), String::new(), String::new()],
        Some(chains) => [
            "markov".into(),
            join(&chains.iter().map(|c| c.lambda()).collect::<Vec<_>>()),
            join(&chains.iter().map(|c| c.lambda_bar()).collect::<Vec<_>>()),
        ],
    }
}

pub fn simulate_row(exp: &Experiment, metrics: &RunMetrics) -> Result<Vec<String>, CliError> {
    let c = &exp.config;
    let bounds = exp.point.bounds(None)?;
    let b = |f: fn(&BoundReport) -> f64| bounds.as_ref().map(|r| fixed(f(r))).unwrap_or_default();
    let [arrival, al, alb] = arrival_columns(&exp.point);
    Ok(vec![
        exp.policy.name().to_string(),
        exp.point.n.to_string(),
        c.horizon.to_string(),
        c.runs.to_string(),
        c.base_seed.to_string(),
        exp.point.describe_lambda()?,
        exp.point.describe_p(),
        exp.point.describe_omega(),
        fixed(metrics.ewsaoi_mean),
        fixed(metrics.ci95_halfwidth),
        b(|r| r.r_rs_star),
        b(|r| r.pomw_middle_bound),
        b(|r| r.r_rsm),
        b(|r| r.lower_bound),
        arrival,
        al,
        alb,
        exp.policy.param(),
        c.burn_in.to_string(),
        fixed(metrics.ewsaoi_std),
    ])
}

pub fn bounds_row(
    point: &NetworkPoint,
    mu: Option<&[f64]>,
    report: &BoundReport,
) -> Result<Vec<String>, CliError> {
    Ok(vec![
        point.n.to_string(),
        point.describe_lambda()?,
        point.describe_p(),
        point.describe_omega(),
        mu.map(join).unwrap_or_default(),
        report.rs_ewsaoi.map(fixed).unwrap_or_default(),
        fixed_vec(&report.mu_star),
        fixed(report.r_rs_star),
        fixed_vec(&report.mu_prime),
        fixed_vec(&report.mu_m),
        fixed(report.pomw_middle_bound),
        fixed(report.r_rsm),
        fixed_vec(&report.q_star),
        fixed(report.lower_bound),
        fixed(report.guarantee_bound),
    ])
}

/// Serializes a header and rows into CSV text.
pub fn to_csv<S: AsRef<str>>(header: &[S], rows: &[Vec<String>]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Runtime(format!("csv: {e}"));
    w.write_record(header.iter().map(|h| h.as_ref()))
        .map_err(io)?;
    for row in rows {
        w.write_record(row).map_err(io)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Runtime(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| CliError::Runtime(format!("csv: {e}")))
}
