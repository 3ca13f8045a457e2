//! Closed-loop checks of beliefs and bounds against simulated episodes.

use std::collections::BTreeMap;

use aoi_core::analysis::{bound_report, rs_ewsaoi, universal_lower_bound};
use aoi_core::belief::{
    belief_vector, markov_belief_vector, markov_belief_vector_product_form, BeliefVector,
};
use aoi_core::sim::{
    run_episode_observed, run_monte_carlo, ArrivalModel, BetaPreset, ExperimentConfig, PolicySpec,
    RsMu,
};
use aoi_core::{MarkovArrivalParams, NodeParams};

/// Empirical distribution of the true local age per belief summary `(k, m)` of node 0.
fn empirical_posteriors(
    config: &ExperimentConfig,
    runs: u64,
) -> BTreeMap<(u64, u64), BTreeMap<u64, u64>> {
    let mut counts: BTreeMap<(u64, u64), BTreeMap<u64, u64>> = BTreeMap::new();
    for run in 0..runs {
        run_episode_observed(config, run, |rec| {
            let z = rec.beliefs.expect("POMW exposes its beliefs")[0];
            *counts
                .entry((z.k, z.m))
                .or_default()
                .entry(rec.local_age[0])
                .or_default() += 1;
        })
        .unwrap();
    }
    counts
}

/// Largest deviation of the empirical frequencies from `expected`, in standard errors.
fn worst_z(hist: &BTreeMap<u64, u64>, expected: &BeliefVector) -> f64 {
    let total: u64 = hist.values().sum();
    let n = total as f64;
    let mut worst = 0.0f64;
    for &age in hist.keys() {
        assert!(
            expected.prob(age) > 0.0,
            "age {age} outside the belief support"
        );
    }
    for &(age, p) in expected.entries() {
        let freq = *hist.get(&age).unwrap_or(&0) as f64 / n;
        let se = (p * (1.0 - p) / n).sqrt().max(1e-12);
        worst = worst.max((freq - p).abs() / se);
    }
    worst
}

#[test]
fn bernoulli_beliefs_are_calibrated() {
    let nodes = vec![
        NodeParams::new(0.3, 0.7, 1.0).unwrap(),
        NodeParams::new(0.6, 0.5, 2.0).unwrap(),
        NodeParams::new(0.2, 0.9, 1.0).unwrap(),
    ];
    let config = ExperimentConfig::new(
        nodes,
        PolicySpec::Pomw {
            beta: BetaPreset::UpperBound,
        },
        20_000,
        1,
        17,
    );
    let counts = empirical_posteriors(&config, 5);
    let mut checked = 0;
    for (&(k, m), hist) in &counts {
        let samples: u64 = hist.values().sum();
        if samples < 2000 {
            continue;
        }
        let z = worst_z(hist, &belief_vector(k, m, 0.3));
        assert!(
            z < 5.0,
            "c({k},{m}) off by {z:.1} standard errors over {samples} samples"
        );
        checked += 1;
    }
    assert!(checked >= 5, "only {checked} well-populated summaries");
}

#[test]
fn markov_beliefs_are_calibrated_and_product_form_is_not() {
    let chain = MarkovArrivalParams::new(0.2, 0.6).unwrap();
    let rate = chain.stationary_rate().unwrap();
    let nodes = vec![NodeParams::new(rate, 0.8, 1.0).unwrap(); 2];
    let mut config = ExperimentConfig::new(
        nodes,
        PolicySpec::Pomw {
            beta: BetaPreset::UpperBound,
        },
        50_000,
        1,
        23,
    );
    config.arrivals = ArrivalModel::Markov(vec![chain; 2]);
    let counts = empirical_posteriors(&config, 4);
    let mut checked = 0;
    let mut product_form_rejected = false;
    for (&(k, m), hist) in &counts {
        let samples: u64 = hist.values().sum();
        if samples < 5000 || m < 2 {
            continue;
        }
        let z = worst_z(hist, &markov_belief_vector(k, m, &chain));
        assert!(
            z < 5.0,
            "e({k},{m}) off by {z:.1} standard errors over {samples} samples"
        );
        let product = markov_belief_vector_product_form(k, m, &chain);
        product_form_rejected |= worst_z(hist, &product) > 10.0;
        checked += 1;
    }
    assert!(checked >= 3, "only {checked} well-populated summaries");
    assert!(product_form_rejected);
}

#[test]
fn rs_simulation_matches_closed_form_with_idling() {
    let nodes = vec![
        NodeParams::new(0.4, 0.9, 1.0).unwrap(),
        NodeParams::new(0.7, 0.6, 0.5).unwrap(),
    ];
    let mu = vec![0.5, 0.3];
    let expected = rs_ewsaoi(&nodes, &mu).unwrap();
    let config = ExperimentConfig::new(
        nodes,
        PolicySpec::Rs {
            mu: RsMu::Explicit(mu),
        },
        50_000,
        40,
        5,
    );
    let m = run_monte_carlo(&config).unwrap();
    assert!(
        (m.ewsaoi_mean - expected).abs() < 4.0 * m.ci95_halfwidth.max(1e-3),
        "simulated {} vs closed form {expected}",
        m.ewsaoi_mean
    );
}

#[test]
fn every_policy_respects_the_lower_bound() {
    let nodes = vec![
        NodeParams::new(0.15, 0.8, 1.2).unwrap(),
        NodeParams::new(0.5, 0.4, 0.6).unwrap(),
        NodeParams::new(0.9, 0.7, 1.0).unwrap(),
    ];
    let lb = universal_lower_bound(&nodes).lower_bound;
    let report = bound_report(&nodes, None).unwrap();
    let policies = [
        PolicySpec::Pomw {
            beta: BetaPreset::UpperBound,
        },
        PolicySpec::Pomw {
            beta: BetaPreset::LowerBound,
        },
        PolicySpec::Fomw {
            beta: BetaPreset::UpperBound,
        },
        PolicySpec::Rs { mu: RsMu::Optimal },
        PolicySpec::Rr,
        PolicySpec::Mwa,
    ];
    for policy in policies {
        let name = policy.name();
        let config = ExperimentConfig::new(nodes.clone(), policy, 20_000, 20, 8);
        let m = run_monte_carlo(&config).unwrap();
        assert!(
            lb <= m.ewsaoi_mean,
            "{name}: {} below L_B {lb}",
            m.ewsaoi_mean
        );
        if name == "RS" {
            assert!((m.ewsaoi_mean - report.r_rs_star).abs() < 4.0 * m.ci95_halfwidth.max(1e-3));
        }
    }
}
