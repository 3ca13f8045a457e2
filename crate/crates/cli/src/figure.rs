//! Built-in figure presets: parameter sweeps with their analytic curves.

use aoi_core::sim::{run_monte_carlo, BetaPreset};

use crate::config::{
    build_config, join, BetaChoice, NetworkPoint, NodeValues, Overrides, PolicyChoice,
};
use crate::report::{fixed, to_csv};
use crate::CliError;

pub const FIGURE_NAMES: [&str; 6] = ["fig3", "fig4", "fig5", "fig6", "fig7", "fig8"];

pub const FIGURE_COLUMNS: [&str; 13] = [
    "figure", "series", "x_name", "x", "y", "ci95", "N", "T", "runs", "seed", "lambda", "p",
    "omega",
];

/// Default seed of the presets.
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Clone)]
pub struct FigurePoint {
    pub x: f64,
    /// Suffix distinguishing curves that share a policy, e.g. arrival-rate pairs.
    pub group: Option<String>,
    pub point: NetworkPoint,
}

#[derive(Debug, Clone)]
pub struct FigureSpec {
    pub name: &'static str,
    pub x_name: &'static str,
    pub runs: u64,
    pub horizon: u64,
    pub seed: u64,
    pub points: Vec<FigurePoint>,
    pub policies: Vec<PolicyChoice>,
    /// Whether the closed-form bound curves are included.
    pub analytic: bool,
}

fn symmetric(n: usize, lambda: f64, p: f64) -> NetworkPoint {
    NetworkPoint {
        n,
        lambda: Some(vec![lambda; n]),
        p: NodeValues::Fixed(vec![p; n]),
        omega: NodeValues::Fixed(vec![1.0; n]),
        markov: None,
    }
}

fn grid(start: f64, step: f64, count: usize) -> Vec<f64> {
    // rounded so that labels such as 0.3 print exactly
    (0..count)
        .map(|i| ((start + step * i as f64) * 1e9).round() / 1e9)
        .collect()
}

fn lambda_point(x: f64, point: NetworkPoint) -> FigurePoint {
    FigurePoint {
        x,
        group: None,
        point,
    }
}

/// Section A presets use 2000 runs over 100 slots; section B presets use 10000
/// runs, with a 10^4-slot horizon since none is stated.
pub fn preset(name: &str, overrides: Overrides) -> Result<FigureSpec, CliError> {
    let pomw = PolicyChoice::Pomw(BetaChoice::Preset(BetaPreset::UpperBound));
    let fomw = PolicyChoice::Fomw(BetaChoice::Preset(BetaPreset::UpperBound));
    let (x_name, points, policies, analytic, runs, horizon) = match name {
        "fig3" => (
            "lambda",
            grid(0.1, 0.1, 10)
                .into_iter()
                .map(|l| lambda_point(l, symmetric(2, l, 0.8)))
                .collect(),
            vec![pomw, fomw],
            true,
            2000,
            100,
        ),
        "fig4" => {
            let pairs = [(0.5, 0.5), (0.25, 0.75), (0.1, 0.9)];
            let mut points = Vec::new();
            for (l1, l2) in pairs {
                for p in grid(0.1, 0.1, 10) {
                    points.push(FigurePoint {
                        x: p,
                        group: Some(format!("lambda={l1}/{l2}")),
                        point: NetworkPoint {
                            n: 2,
                            lambda: Some(vec![l1, l2]),
                            p: NodeValues::Fixed(vec![p; 2]),
                            omega: NodeValues::Fixed(vec![1.0; 2]),
                            markov: None,
                        },
                    });
                }
            }
            ("p", points, vec![pomw, fomw], false, 2000, 100)
        }
        "fig5" | "fig6" => {
            let lambda = if name == "fig5" { 0.1 } else { 0.5 };
            let points = [10usize, 15, 20, 25, 30]
                .into_iter()
                .map(|n| lambda_point(n as f64, symmetric(n, lambda, 0.8)))
                .collect();
            ("N", points, vec![pomw, fomw], true, 2000, 100)
        }
        "fig7" => (
            "lambda",
            grid(0.05, 0.05, 10)
                .into_iter()
                .map(|l| lambda_point(l, symmetric(10, l, 0.5)))
                .collect(),
            vec![pomw, PolicyChoice::Mwa, PolicyChoice::Rr],
            false,
            10_000,
            10_000,
        ),
        "fig8" => (
            "lambda",
            grid(0.05, 0.05, 10)
                .into_iter()
                .map(|l| {
                    lambda_point(
                        l,
                        NetworkPoint {
                            n: 10,
                            lambda: Some(vec![l; 10]),
                            p: NodeValues::Range(0.1, 0.9),
                            omega: NodeValues::Range(0.1, 1.9),
                            markov: None,
                        },
                    )
                })
                .collect(),
            vec![pomw, PolicyChoice::Mwa, PolicyChoice::Rr],
            false,
            10_000,
            10_000,
        ),
        other => {
            return Err(CliError::Config(format!(
                "unknown figure \"{other}\" (expected one of {})",
                FIGURE_NAMES.join(", ")
            )))
        }
    };
    let name = FIGURE_NAMES.iter().find(|n| **n == name).unwrap();
    Ok(FigureSpec {
        name,
        x_name,
        runs: overrides.runs.unwrap_or(runs),
        horizon: overrides.horizon.unwrap_or(horizon),
        seed: overrides.seed.unwrap_or(DEFAULT_SEED),
        points,
        policies,
        analytic,
    })
}

fn series_name(base: &str, group: &Option<String>) -> String {
    match group {
        Some(g) => format!("{base} {g}"),
        None => base.to_string(),
    }
}

/// Runs every simulation of the preset and returns the tidy CSV text.
pub fn run_figure(spec: &FigureSpec) -> Result<String, CliError> {
    let mut rows = Vec::new();
    for fp in &spec.points {
        let point = &fp.point;
        let params = [
            point.n.to_string(),
            spec.horizon.to_string(),
            spec.runs.to_string(),
            spec.seed.to_string(),
            point.describe_lambda()?,
            point.describe_p(),
            point.describe_omega(),
        ];
        let mut push = |series: String, y: f64, ci: Option<f64>, simulated: bool| {
            let mut row = vec![
                spec.name.to_string(),
                series,
                spec.x_name.to_string(),
                fp.x.to_string(),
                fixed(y),
                ci.map(fixed).unwrap_or_default(),
            ];
            for (i, v) in params.iter().enumerate() {
                // T, runs and seed only describe simulated rows
                let sim_only = (1..=3).contains(&i);
                row.push(if sim_only && !simulated {
                    String::new()
                } else {
                    v.clone()
                });
            }
            rows.push(row);
        };
        for policy in &spec.policies {
            let config = build_config(point, policy, spec.horizon, spec.runs, spec.seed, 0)?;
            let metrics = run_monte_carlo(&config).map_err(|e| CliError::Runtime(e.to_string()))?;
            push(
                series_name(policy.name(), &fp.group),
                metrics.ewsaoi_mean,
                Some(metrics.ci95_halfwidth),
                true,
            );
        }
        if spec.analytic {
            if let Some(b) = point.bounds(None)? {
                for (label, y) in [
                    ("R_RS*", b.r_rs_star),
                    ("R_RSM", b.r_rsm),
                    ("middle_bound", b.pomw_middle_bound),
                    ("L_B", b.lower_bound),
                ] {
                    push(series_name(label, &fp.group), y, None, false);
                }
            }
        }
    }
    to_csv(&FIGURE_COLUMNS, &rows)
}

/// Human-readable one-line summary of a preset.
pub fn describe(spec: &FigureSpec) -> String {
    let xs: Vec<f64> = spec.points.iter().map(|p| p.x).collect();
    format!(
        "{}: x={} [{}], policies={}, runs={}, T={}, seed={}",
        spec.name,
        spec.x_name,
        join(&xs),
        spec.policies
            .iter()
            .map(|p| p.name())
            .collect::<Vec<_>>()
            .join("/"),
        spec.runs,
        spec.horizon,
        spec.seed
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_name_is_a_config_error() {
        assert!(matches!(
            preset("fig9", Overrides::default()),
            Err(CliError::Config(_))
        ));
    }

    #[test]
    fn presets_follow_their_sections() {
        let f3 = preset("fig3", Overrides::default()).unwrap();
        assert_eq!((f3.runs, f3.horizon), (2000, 100));
        assert_eq!(f3.points.len(), 10);
        assert_eq!(f3.points[2].x, 0.3);
        let f7 = preset(
            "fig7",
            Overrides {
                runs: Some(3),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!((f7.runs, f7.horizon), (3, 10_000));
        assert_eq!(f7.points[0].x, 0.05);
        let f4 = preset("fig4", Overrides::default()).unwrap();
        assert_eq!(f4.points.len(), 30);
        assert_eq!(f4.points[10].point.lambda, Some(vec![0.25, 0.75]));
    }

    #[test]
    fn fig3_rows_include_analytic_curves() {
        let mut spec = preset(
            "fig3",
            Overrides {
                runs: Some(2),
                horizon: Some(50),
                seed: None,
            },
        )
        .unwrap();
        spec.points.truncate(2);
        let csv = run_figure(&spec).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        // header + 2 points x (2 policies + 4 curves)
        assert_eq!(lines.len(), 1 + 2 * 6);
        assert!(lines[3].starts_with("fig3,R_RS*,lambda,0.1,12.500000,,2,,,,0.1;0.1,0.8;0.8,1;1"));
    }
}
