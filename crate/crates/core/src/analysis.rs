//! Closed-form EWSAoI formulas and bounds.
//!
//! * randomized scheduling (RS): `R = (1/N) Σ ω_i (1/λ_i + 1/(p_i μ_i))` and its
//!   optimum over the probability simplex;
//! * the POMW upper bounds obtained from the RS comparison policy with
//!   `μ'_i ∝ √(ω_i / (λ_i p_i))`;
//! * the universal lower bound `L_B = (1/2N) Σ ω_i (1/q*_i + 3)`, where `q*`
//!   solves `min Σ ω_i / q_i` s.t. `Σ q_i / p_i ≤ 1`, `0 < q_i ≤ λ_i`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::NodeParams;

/// Average EWSAoI of RS with per-node scheduling probabilities `mu`.
pub fn rs_ewsaoi(params: &[NodeParams], mu: &[f64]) -> Result<f64> {
    if params.len() != mu.len() {
        return Err(Error::InvalidConfig(format!(
            "RS probability vector has {} entries for {} nodes",
            mu.len(),
            params.len()
        )));
    }
    if let Some(&bad) = mu.iter().find(|&&m| !(m > 0.0 && m <= 1.0)) {
        return Err(Error::InvalidParameter {
            name: "mu",
            value: bad,
            reason: "must lie in (0, 1]",
        });
    }
    let n = params.len() as f64;
    Ok(params
        .iter()
        .zip(mu)
        .map(|(node, &m)| node.omega * (1.0 / node.lambda + 1.0 / (node.p * m)))
        .sum::<f64>()
        / n)
}

fn normalized(weights: impl Iterator<Item = f64>) -> Vec<f64> {
    let w: Vec<f64> = weights.collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

/// Optimal RS probabilities `μ*_i ∝ √(ω_i/p_i)` and the resulting EWSAoI.
pub fn optimal_rs(params: &[NodeParams]) -> (Vec<f64>, f64) {
    let n = params.len() as f64;
    let roots: f64 = params.iter().map(|x| (x.omega / x.p).sqrt()).sum();
    let inv_lambda: f64 = params.iter().map(|x| x.omega / x.lambda).sum();
    let mu = normalized(params.iter().map(|x| (x.omega / x.p).sqrt()));
    (mu, (inv_lambda + roots * roots) / n)
}

/// Comparison probabilities `μ'` and the matching Lyapunov weights
/// `β_i = ω_i / (λ_i μ'_i p_i)`.
pub fn pomw_weights(params: &[NodeParams]) -> (Vec<f64>, Vec<f64>) {
    let mu_prime = normalized(params.iter().map(|x| (x.omega / (x.lambda * x.p)).sqrt()));
    let beta = params
        .iter()
        .zip(&mu_prime)
        .map(|(x, &m)| x.omega / (x.lambda * m * x.p))
        .collect();
    (mu_prime, beta)
}

/// The two POMW upper bounds and the RS probabilities behind the looser one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PomwUpperBound {
    /// `(1/N) Σ ω_i (1/(λ_i μ'_i p_i) + 1)`.
    pub middle: f64,
    /// RS EWSAoI at `μ^M`.
    pub r_rsm: f64,
    /// `μ^M_i = λ_i μ'_i`.
    pub mu_m: Vec<f64>,
}

pub fn pomw_upper_bound(params: &[NodeParams]) -> PomwUpperBound {
    let n = params.len() as f64;
    let (mu_prime, _) = pomw_weights(params);
    let middle = params
        .iter()
        .zip(&mu_prime)
        .map(|(x, &m)| x.omega * (1.0 / (x.lambda * m * x.p) + 1.0))
        .sum::<f64>()
        / n;
    let denom: f64 = params
        .iter()
        .map(|x| (x.omega / (x.lambda * x.p)).sqrt())
        .sum();
    let mu_m: Vec<f64> = params
        .iter()
        .map(|x| (x.omega * x.lambda / x.p).sqrt() / denom)
        .collect();
    let r_rsm = rs_ewsaoi(params, &mu_m).expect("μ^M is a valid RS vector");
    PomwUpperBound {
        middle,
        r_rsm,
        mu_m,
    }
}

/// Solution of the universal lower-bound program.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowerBound {
    pub q_star: Vec<f64>,
    pub lower_bound: f64,
    /// Multiplier of the throughput constraint; zero when the caps alone are feasible.
    pub multiplier: f64,
}

const Q_MIN: f64 = 1e-12;
const RESIDUAL_TOL: f64 = 1e-10;

/// Objective `(1/2N) Σ ω_i (1/q_i + 3)` of the lower-bound program.
pub fn lower_bound_objective(params: &[NodeParams], q: &[f64]) -> f64 {
    let n = params.len() as f64;
    params
        .iter()
        .zip(q)
        .map(|(x, &qi)| x.omega * (1.0 / qi + 3.0))
        .sum::<f64>()
        / (2.0 * n)
}

/// Solves the lower-bound program through its KKT conditions.
///
/// Stationarity gives `q_i(ν) = min(λ_i, √(ω_i p_i / ν))`. If the caps alone
/// satisfy the throughput constraint they are optimal; otherwise `ν` is found
/// by bisection so that `Σ q_i/p_i = 1`, after which the uncapped rates are
/// recomputed in closed form for the active set the bisection identified.
pub fn universal_lower_bound(params: &[NodeParams]) -> LowerBound {
    let caps_load: f64 = params.iter().map(|x| x.lambda / x.p).sum();
    if caps_load <= 1.0 {
        let q_star: Vec<f64> = params.iter().map(|x| x.lambda).collect();
        return LowerBound {
            lower_bound: lower_bound_objective(params, &q_star),
            q_star,
            multiplier: 0.0,
        };
    }

    let rates = |nu: f64| -> Vec<f64> {
        params
            .iter()
            .map(|x| x.lambda.min((x.omega * x.p / nu).sqrt()))
            .collect()
    };
    let residual =
        |q: &[f64]| -> f64 { q.iter().zip(params).map(|(&qi, x)| qi / x.p).sum::<f64>() - 1.0 };

    let mut lo = f64::MIN_POSITIVE;
    let mut hi = params.iter().map(|x| x.omega * x.p).fold(0.0f64, f64::max) / (Q_MIN * Q_MIN);
    let mut nu = hi;
    for _ in 0..2000 {
        // geometric midpoint: ν spans hundreds of orders of magnitude
        nu = (lo.ln() * 0.5 + hi.ln() * 0.5).exp();
        let r = residual(&rates(nu));
        if r.abs() <= RESIDUAL_TOL {
            break;
        }
        if r > 0.0 {
            lo = nu;
        } else {
            hi = nu;
        }
        if hi / lo - 1.0 < 1e-15 {
            break;
        }
    }

    let mut q_star = rates(nu);
    let capped: Vec<bool> = params
        .iter()
        .map(|x| x.lambda <= (x.omega * x.p / nu).sqrt())
        .collect();
    let capped_load: f64 = params
        .iter()
        .zip(&capped)
        .filter(|(_, &c)| c)
        .map(|(x, _)| x.lambda / x.p)
        .sum();
    let free_weight: f64 = params
        .iter()
        .zip(&capped)
        .filter(|(_, &c)| !c)
        .map(|(x, _)| (x.omega / x.p).sqrt())
        .sum();
    if free_weight > 0.0 && capped_load < 1.0 {
        let scale = (1.0 - capped_load) / free_weight;
        let polished: Vec<f64> = params
            .iter()
            .zip(&capped)
            .map(|(x, &c)| {
                if c {
                    x.lambda
                } else {
                    x.p * (x.omega / x.p).sqrt() * scale
                }
            })
            .collect();
        if polished
            .iter()
            .zip(params)
            .all(|(&q, x)| q > 0.0 && q <= x.lambda)
        {
            q_star = polished;
            nu = 1.0 / (scale * scale);
        }
    }

    LowerBound {
        lower_bound: lower_bound_objective(params, &q_star),
        q_star,
        multiplier: nu,
    }
}

/// `2 / min λ_i`, the guaranteed ratio between POMW (with Corollary-2 weights) and `L_B`.
pub fn guarantee_ratio_bound(params: &[NodeParams]) -> f64 {
    2.0 / params
        .iter()
        .map(|x| x.lambda)
        .fold(f64::INFINITY, f64::min)
}

/// Lyapunov weights `β_i = ω_i / (λ_i q*_i)`.
pub fn lower_bound_beta(params: &[NodeParams]) -> Vec<f64> {
    let lb = universal_lower_bound(params);
    params
        .iter()
        .zip(&lb.q_star)
        .map(|(x, &q)| x.omega / (x.lambda * q))
        .collect()
}

/// Every closed-form quantity for one network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    /// RS EWSAoI at a caller-supplied probability vector.
    pub rs_ewsaoi: Option<f64>,
    pub mu_star: Vec<f64>,
    pub r_rs_star: f64,
    pub mu_prime: Vec<f64>,
    pub mu_m: Vec<f64>,
    pub pomw_middle_bound: f64,
    pub r_rsm: f64,
    pub q_star: Vec<f64>,
    pub lower_bound: f64,
    pub guarantee_bound: f64,
}

pub fn bound_report(params: &[NodeParams], mu: Option<&[f64]>) -> Result<BoundReport> {
    if params.is_empty() {
        return Err(Error::InvalidConfig("network has no nodes".into()));
    }
    let rs = mu.map(|m| rs_ewsaoi(params, m)).transpose()?;
    let (mu_star, r_rs_star) = optimal_rs(params);
    let (mu_prime, _) = pomw_weights(params);
    let upper = pomw_upper_bound(params);
    let lower = universal_lower_bound(params);
    Ok(BoundReport {
        rs_ewsaoi: rs,
        mu_star,
        r_rs_star,
        mu_prime,
        mu_m: upper.mu_m,
        pomw_middle_bound: upper.middle,
        r_rsm: upper.r_rsm,
        q_star: lower.q_star,
        lower_bound: lower.lower_bound,
        guarantee_bound: guarantee_ratio_bound(params),
    })
}
