//! Seeded Monte-Carlo engine for the slotted uplink.
//!
//! One slot, in order:
//! 1. the policy decides from AP-side information (FOMW also reads the true local ages);
//! 2. arrivals are drawn for every node, by node index;
//! 3. the scheduled node transmits the packet it held at the start of the slot
//!    and the channel outcome is drawn;
//! 4. local ages and destination AoI advance;
//! 5. the AP folds the outcome into its own AoI copy and the policy state.
//!
//! The slot cost `Σ ω_i D_i` is taken at the start of each slot. Slot 0 only
//! draws arrivals, so every run starts its first decision from `D = 2`.
//!
//! Each run owns a ChaCha8 stream seeded from `(base_seed, run_index)`; runs can
//! be executed in any order or in parallel and aggregate to the same result.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{lower_bound_beta, optimal_rs, pomw_weights};
use crate::belief::LocBelief;
use crate::error::{Error, Result};
use crate::model::{
    attempt_transmission, step_arrival, ArrivalProcessState, GroundTruthState, MarkovArrivalParams,
    NodeParams,
};
use crate::policies::{Decision, Policy, RsProbabilities};

/// Arrival process shared by all nodes of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ArrivalModel {
    /// i.i.d. Bernoulli arrivals with each node's `lambda`.
    Bernoulli,
    /// One two-state chain per node.
    Markov(Vec<MarkovArrivalParams>),
}

/// Network whose weights and channel rates are redrawn for every run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomNetwork {
    pub lambda: Vec<f64>,
    pub omega_range: (f64, f64),
    pub p_range: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Network {
    Fixed(Vec<NodeParams>),
    Random(RandomNetwork),
}

impl Network {
    pub fn len(&self) -> usize {
        match self {
            Self::Fixed(nodes) => nodes.len(),
            Self::Random(r) => r.lambda.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn resolve(&self, rng: &mut ChaCha8Rng) -> Result<Vec<NodeParams>> {
        match self {
            Self::Fixed(nodes) => Ok(nodes.clone()),
            Self::Random(r) => r
                .lambda
                .iter()
                .map(|&lambda| {
                    let omega = uniform(rng, r.omega_range);
                    let p = uniform(rng, r.p_range);
                    NodeParams::new(lambda, p, omega)
                })
                .collect(),
        }
    }
}

fn uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    lo + (hi - lo) * rng.gen::<f64>()
}

/// How the max-weight policies obtain their Lyapunov weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BetaPreset {
    /// `β_i = ω_i / (λ_i μ'_i p_i)`.
    UpperBound,
    /// `β_i = ω_i / (λ_i q*_i)`.
    LowerBound,
    /// Keep the `beta` stored in the node parameters.
    AsGiven,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RsMu {
    Optimal,
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PolicySpec {
    Pomw { beta: BetaPreset },
    Fomw { beta: BetaPreset },
    Rs { mu: RsMu },
    Rr,
    Mwa,
}

impl PolicySpec {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Pomw { .. } => "POMW",
            Self::Fomw { .. } => "FOMW",
            Self::Rs { .. } => "RS",
            Self::Rr => "RR",
            Self::Mwa => "MWA",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub network: Network,
    pub arrivals: ArrivalModel,
    pub policy: PolicySpec,
    pub horizon: u64,
    pub runs: u64,
    pub base_seed: u64,
    /// Leading slots excluded from the time average.
    pub burn_in: u64,
}

impl ExperimentConfig {
    pub fn new(
        nodes: Vec<NodeParams>,
        policy: PolicySpec,
        horizon: u64,
        runs: u64,
        seed: u64,
    ) -> Self {
        Self {
            network: Network::Fixed(nodes),
            arrivals: ArrivalModel::Bernoulli,
            policy,
            horizon,
            runs,
            base_seed: seed,
            burn_in: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.network.len();
        if n == 0 {
            return Err(Error::InvalidConfig("network has no nodes".into()));
        }
        if self.horizon == 0 || self.runs == 0 {
            return Err(Error::InvalidConfig(
                "horizon and runs must be at least 1".into(),
            ));
        }
        if self.burn_in >= self.horizon {
            return Err(Error::InvalidConfig(format!(
                "burn_in {} must be smaller than the horizon {}",
                self.burn_in, self.horizon
            )));
        }
        if let Network::Random(r) = &self.network {
            for &(name, (lo, hi)) in &[("omega_range", r.omega_range), ("p_range", r.p_range)] {
                if !(lo <= hi && lo > 0.0) {
                    return Err(Error::InvalidConfig(format!(
                        "{name} must satisfy 0 < lo <= hi"
                    )));
                }
            }
            if r.p_range.1 > 1.0 {
                return Err(Error::InvalidConfig(
                    "p_range must lie inside (0, 1]".into(),
                ));
            }
        }
        if let ArrivalModel::Markov(chains) = &self.arrivals {
            if chains.len() != n {
                return Err(Error::InvalidConfig(format!(
                    "{} Markov chains for {n} nodes",
                    chains.len()
                )));
            }
        }
        if let PolicySpec::Rs {
            mu: RsMu::Explicit(mu),
        } = &self.policy
        {
            if mu.len() != n {
                return Err(Error::InvalidConfig(format!(
                    "RS probability vector has {} entries for {n} nodes",
                    mu.len()
                )));
            }
            RsProbabilities::new(mu.clone())?;
        }
        Ok(())
    }
}

/// Stable per-run seed: SplitMix64 finalizer over the pair.
pub fn run_seed(base_seed: u64, run_index: u64) -> u64 {
    let mut z = base_seed
        ^ run_index
            .wrapping_add(1)
            .wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn with_beta(params: &[NodeParams], preset: BetaPreset) -> Result<Vec<NodeParams>> {
    let beta = match preset {
        BetaPreset::AsGiven => return Ok(params.to_vec()),
        BetaPreset::UpperBound => pomw_weights(params).1,
        BetaPreset::LowerBound => lower_bound_beta(params),
    };
    params
        .iter()
        .zip(beta)
        .map(|(x, b)| x.set_beta(b))
        .collect()
}

fn build_policy(
    spec: &PolicySpec,
    params: &[NodeParams],
    arrivals: &ArrivalModel,
) -> Result<(Policy, Vec<NodeParams>)> {
    Ok(match spec {
        PolicySpec::Pomw { beta } => {
            let params = with_beta(params, *beta)?;
            let policy = match arrivals {
                ArrivalModel::Bernoulli => Policy::pomw(params.len()),
                ArrivalModel::Markov(chains) => Policy::pomw_markov(chains.clone()),
            };
            (policy, params)
        }
        PolicySpec::Fomw { beta } => (Policy::Fomw, with_beta(params, *beta)?),
        PolicySpec::Rs { mu } => {
            let mu = match mu {
                RsMu::Optimal => optimal_rs(params).0,
                RsMu::Explicit(mu) => mu.clone(),
            };
            (Policy::rs(RsProbabilities::new(mu)?), params.to_vec())
        }
        PolicySpec::Rr => (Policy::rr(), params.to_vec()),
        PolicySpec::Mwa => (Policy::Mwa, params.to_vec()),
    })
}

/// State of one slot as seen after the decision, before the dynamics advance.
#[derive(Debug)]
pub struct SlotRecord<'a> {
    pub slot: u64,
    pub decision: Decision,
    pub delivered: bool,
    pub local_age: &'a [u64],
    pub aoi: &'a [u64],
    /// `(k, m)` summaries behind a POMW decision.
    pub beliefs: Option<&'a [LocBelief]>,
    pub params: &'a [NodeParams],
}

/// Outcome of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub run_index: u64,
    /// `(1/(N T)) Σ_t Σ_i ω_i D_{t,i}`.
    pub ewsaoi: f64,
    pub per_node_mean_aoi: Vec<f64>,
    pub schedule_counts: Vec<u64>,
    pub idle_slots: u64,
    pub deliveries: u64,
    /// Node parameters after random draws and β presets.
    pub params: Vec<NodeParams>,
}

pub fn run_episode(config: &ExperimentConfig, run_index: u64) -> Result<EpisodeResult> {
    run_episode_observed(config, run_index, |_| {})
}

/// Runs one episode, handing every slot to `observer` before the dynamics advance.
pub fn run_episode_observed(
    config: &ExperimentConfig,
    run_index: u64,
    mut observer: impl FnMut(&SlotRecord<'_>),
) -> Result<EpisodeResult> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(run_seed(config.base_seed, run_index));
    let base = config.network.resolve(&mut rng)?;
    let (mut policy, params) = build_policy(&config.policy, &base, &config.arrivals)?;
    let n = params.len();

    let mut arrival_states: Vec<ArrivalProcessState> = match &config.arrivals {
        ArrivalModel::Bernoulli => params
            .iter()
            .map(|x| ArrivalProcessState::bernoulli(x.lambda))
            .collect(),
        ArrivalModel::Markov(chains) => chains
            .iter()
            .copied()
            .map(ArrivalProcessState::markov)
            .collect(),
    };
    let mut arrivals = vec![false; n];
    let draw_arrivals =
        |states: &mut [ArrivalProcessState], out: &mut [bool], rng: &mut ChaCha8Rng| {
            for (state, slot) in states.iter_mut().zip(out.iter_mut()) {
                let (a, next) = step_arrival(*state, rng.gen());
                *state = next;
                *slot = a;
            }
        };

    let mut truth = GroundTruthState::initial(n);
    draw_arrivals(&mut arrival_states, &mut arrivals, &mut rng);
    truth.advance(None, &arrivals);
    let mut ap_aoi = truth.aoi.clone();

    let mut weighted_sum = 0.0f64;
    let mut node_sums = vec![0u64; n];
    let mut schedule_counts = vec![0u64; n];
    let (mut idle_slots, mut deliveries) = (0u64, 0u64);
    let privileged = policy.is_privileged();
    let mut loc_buf = Vec::with_capacity(n);

    for slot in 1..=config.horizon {
        if slot > config.burn_in {
            for i in 0..n {
                weighted_sum += params[i].omega * ap_aoi[i] as f64;
                node_sums[i] += ap_aoi[i];
            }
        }

        let u = if policy.uses_draw() { rng.gen() } else { 0.0 };
        let local_view = privileged.then_some(truth.local_age.as_slice());
        let decision = policy.decide(&ap_aoi, local_view, &params, u);

        draw_arrivals(&mut arrival_states, &mut arrivals, &mut rng);
        let delivered = match decision.scheduled_node {
            Some(j) => {
                schedule_counts[j] += 1;
                attempt_transmission(params[j].p, rng.gen()).then_some(j)
            }
            None => {
                idle_slots += 1;
                None
            }
        };

        let has_beliefs = policy.loc_beliefs_into(&mut loc_buf);
        observer(&SlotRecord {
            slot,
            decision,
            delivered: delivered.is_some(),
            local_age: &truth.local_age,
            aoi: &truth.aoi,
            beliefs: has_beliefs.then_some(loc_buf.as_slice()),
            params: &params,
        });

        // the AP only learns the delivered packet's local age
        let observation = delivered.map(|j| truth.local_age[j]);
        truth.advance(delivered, &arrivals);
        for (i, d) in ap_aoi.iter_mut().enumerate() {
            *d = match observation {
                Some(age) if delivered == Some(i) => age + 1,
                _ => *d + 1,
            };
        }
        deliveries += delivered.is_some() as u64;
        policy
            .observe(decision, observation)
            .map_err(|e| Error::Desync {
                slot,
                node: decision.scheduled_node.unwrap_or(0),
                detail: e.to_string(),
            })?;

        if let Some(node) = truth.first_violation() {
            return Err(Error::Desync {
                slot,
                node,
                detail: format!("D={} < d={}", truth.aoi[node], truth.local_age[node]),
            });
        }
        for (i, (&ap, &true_aoi)) in ap_aoi.iter().zip(&truth.aoi).enumerate() {
            if ap != true_aoi {
                return Err(Error::Desync {
                    slot,
                    node: i,
                    detail: format!("AP AoI {ap} != true AoI {true_aoi}"),
                });
            }
            if let Some(belief) = policy.belief_aoi(i) {
                if belief != ap {
                    return Err(Error::Desync {
                        slot,
                        node: i,
                        detail: format!("belief AoI {belief} != AP AoI {ap}"),
                    });
                }
            }
        }
    }

    let counted = (config.horizon - config.burn_in) as f64;
    Ok(EpisodeResult {
        run_index,
        ewsaoi: weighted_sum / (n as f64 * counted),
        per_node_mean_aoi: node_sums.iter().map(|&s| s as f64 / counted).collect(),
        schedule_counts,
        idle_slots,
        deliveries,
        params,
    })
}

/// Aggregate over independent runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub ewsaoi_mean: f64,
    /// Sample standard deviation across runs (0 for a single run).
    pub ewsaoi_std: f64,
    /// `1.96 σ / √R`.
    pub ci95_halfwidth: f64,
    pub per_node_mean_aoi: Vec<f64>,
    pub per_run_values: Vec<f64>,
}

impl RunMetrics {
    pub fn from_episodes(episodes: &[EpisodeResult]) -> Self {
        let values: Vec<f64> = episodes.iter().map(|e| e.ewsaoi).collect();
        let r = values.len() as f64;
        let mean = values.iter().sum::<f64>() / r;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r - 1.0)).sqrt()
        } else {
            0.0
        };
        let n = episodes.first().map_or(0, |e| e.per_node_mean_aoi.len());
        let per_node_mean_aoi = (0..n)
            .map(|i| episodes.iter().map(|e| e.per_node_mean_aoi[i]).sum::<f64>() / r)
            .collect();
        Self {
            ewsaoi_mean: mean,
            ewsaoi_std: std,
            ci95_halfwidth: 1.96 * std / r.sqrt(),
            per_node_mean_aoi,
            per_run_values: values,
        }
    }
}

/// Runs `config.runs` episodes (in parallel) and reduces them in run order.
pub fn run_monte_carlo(config: &ExperimentConfig) -> Result<RunMetrics> {
    Ok(RunMetrics::from_episodes(&run_episodes(config)?))
}

pub fn run_episodes(config: &ExperimentConfig) -> Result<Vec<EpisodeResult>> {
    config.validate()?;
    (0..config.runs)
        .into_par_iter()
        .map(|r| run_episode(config, r))
        .collect()
}
