//! Belief-state machinery for the partially observed local ages.
//!
//! Starting from a known local age, the access point's posterior over a node's
//! local age depends only on the last observed local age `k` and the number of
//! slots `m` since that observation. Under Bernoulli(λ) arrivals the posterior
//! puts mass `λ(1-λ)^(a-1)` on ages `a = 1..=m` and the remaining `(1-λ)^m` on
//! age `k + m`, which is also the destination AoI.
//!
//! The dense, truncated Bayes filter in this module is not used by the policies;
//! it exists to check the two-parameter representation against a direct
//! application of the transition and observation kernels.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::MarkovArrivalParams;

/// Last-observation summary of a node's local-age belief.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LocBelief {
    /// Last observed local age.
    pub k: u64,
    /// Slots elapsed since that observation.
    pub m: u64,
}

impl LocBelief {
    pub fn new(k: u64, m: u64) -> Result<Self> {
        if k == 0 || m == 0 {
            return Err(Error::InvalidConfig(format!(
                "LOC belief needs k >= 1 and m >= 1, got k={k}, m={m}"
            )));
        }
        Ok(Self { k, m })
    }

    /// Belief in slot 1 given `d_0 = D_0 = 1`.
    pub const fn initial() -> Self {
        Self { k: 1, m: 1 }
    }

    /// Destination AoI implied by the belief.
    #[inline]
    pub fn aoi(&self) -> u64 {
        self.k + self.m
    }

    /// Whether `age` can be the local age currently held by the node.
    pub fn supports(&self, age: u64) -> bool {
        (1..=self.m).contains(&age) || age == self.k + self.m
    }
}

/// Sparse distribution over local ages, sorted by strictly increasing age.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BeliefVector {
    entries: Vec<(u64, f64)>,
}

impl BeliefVector {
    /// Builds a vector from `(age, probability)` pairs, merging equal ages.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (u64, f64)>) -> Self {
        let mut entries: Vec<(u64, f64)> = pairs.into_iter().collect();
        entries.sort_by_key(|&(age, _)| age);
        let mut merged: Vec<(u64, f64)> = Vec::with_capacity(entries.len());
        for (age, prob) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == age => last.1 += prob,
                _ => merged.push((age, prob)),
            }
        }
        Self { entries: merged }
    }

    pub fn point_mass(age: u64) -> Self {
        Self {
            entries: vec![(age, 1.0)],
        }
    }

    pub fn entries(&self) -> &[(u64, f64)] {
        &self.entries
    }

    pub fn prob(&self, age: u64) -> f64 {
        self.entries
            .binary_search_by_key(&age, |&(a, _)| a)
            .map(|idx| self.entries[idx].1)
            .unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|&(_, p)| p).sum()
    }

    pub fn mean(&self) -> f64 {
        self.entries.iter().map(|&(a, p)| a as f64 * p).sum()
    }

    pub fn max_age(&self) -> Option<u64> {
        self.entries.last().map(|&(a, _)| a)
    }

    /// Largest absolute entry difference, treating missing ages as zero.
    pub fn max_abs_diff(&self, other: &BeliefVector) -> f64 {
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.entries, &other.entries);
        let mut worst = 0.0f64;
        while i < a.len() || j < b.len() {
            let diff = match (a.get(i), b.get(j)) {
                (Some(&(x, px)), Some(&(y, py))) if x == y => {
                    i += 1;
                    j += 1;
                    px - py
                }
                (Some(&(x, px)), Some(&(y, _))) if x < y => {
                    i += 1;
                    px
                }
                (Some(_), Some(&(_, py))) => {
                    j += 1;
                    py
                }
                (Some(&(_, px)), None) => {
                    i += 1;
                    px
                }
                (None, Some(&(_, py))) => {
                    j += 1;
                    py
                }
                (None, None) => unreachable!(),
            };
            worst = worst.max(diff.abs());
        }
        worst
    }
}

/// Posterior over the local age under Bernoulli(λ) arrivals.
pub fn belief_vector(k: u64, m: u64, lambda: f64) -> BeliefVector {
    let gamma = 1.0 - lambda;
    let mut entries = Vec::with_capacity(m as usize + 1);
    let mut tail = 1.0;
    for age in 1..=m {
        entries.push((age, lambda * tail));
        tail *= gamma;
    }
    // k + m > m, so the tail entry never collides with the geometric part
    entries.push((k + m, gamma.powi(saturating_i32(m))));
    BeliefVector { entries }
}

/// `E[d] = 1/λ + (k - 1/λ)(1-λ)^m`.
#[inline]
pub fn expected_local_age(k: u64, m: u64, lambda: f64) -> f64 {
    let inv = 1.0 / lambda;
    inv + (k as f64 - inv) * (1.0 - lambda).powi(saturating_i32(m))
}

/// Expected AoI reduction of a successful delivery, `(k+m) - E[d]`.
#[inline]
pub fn pomw_index_term(k: u64, m: u64, lambda: f64) -> f64 {
    let decay = (1.0 - lambda).powi(saturating_i32(m));
    m as f64 + (1.0 - decay) * (k as f64 - 1.0 / lambda)
}

/// Advances the last-observation summary by one slot.
///
/// A delivered observation `d̂` resets the summary to `(d̂, 1)`; otherwise `m`
/// grows by one. Observations outside the belief support indicate a
/// simulator bug and are rejected.
pub fn update_loc_belief(
    z: LocBelief,
    scheduled: bool,
    observation: Option<u64>,
) -> Result<LocBelief> {
    match observation {
        Some(observed) if scheduled && z.supports(observed) => Ok(LocBelief { k: observed, m: 1 }),
        Some(observed) => Err(Error::InfeasibleObservation {
            observed,
            k: z.k,
            m: z.m,
        }),
        None => Ok(LocBelief { k: z.k, m: z.m + 1 }),
    }
}

fn saturating_i32(m: u64) -> i32 {
    i32::try_from(m).unwrap_or(i32::MAX)
}

/// One-slot local-age transition kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LocalAgeKernel {
    /// Reset with probability λ regardless of the current age.
    Bernoulli(f64),
    /// Reset probability Λ̄ when the current age is 1 (an arrival happened in
    /// the previous slot), Λ otherwise.
    Markov(MarkovArrivalParams),
}

impl LocalAgeKernel {
    #[inline]
    fn reset_probability(&self, age: u64) -> f64 {
        match *self {
            Self::Bernoulli(lambda) => lambda,
            Self::Markov(params) if age == 1 => params.lambda_bar(),
            Self::Markov(params) => params.lambda(),
        }
    }
}

/// Dense Bayes filter over local ages `1..=d_max`.
///
/// Conditions the current belief on this slot's observation, pushes it through
/// the transition kernel and renormalizes. Mass that would land above `d_max`
/// is an error rather than being folded back.
pub fn bayes_update_truncated(
    b: &BeliefVector,
    kernel: LocalAgeKernel,
    scheduled: bool,
    observation: Option<u64>,
    d_max: u64,
) -> Result<BeliefVector> {
    let size = d_max as usize + 1;
    let mut prior = vec![0.0f64; size];
    for &(age, prob) in b.entries() {
        if age > d_max {
            return Err(Error::TruncationOverflow { age, d_max });
        }
        prior[age as usize] = prob;
    }

    // The observation likelihood: a delivered age pins the state, while `X`
    // carries the same likelihood for every age and cancels in ρ.
    let likelihood = |age: u64| -> f64 {
        match observation {
            Some(observed) => (scheduled && age == observed) as u8 as f64,
            None => 1.0,
        }
    };

    let mut next = vec![0.0f64; size];
    for (age, &prob) in prior.iter().enumerate().skip(1) {
        let weight = prob * likelihood(age as u64);
        if weight == 0.0 {
            continue;
        }
        let reset = kernel.reset_probability(age as u64);
        next[1] += weight * reset;
        let grown = weight * (1.0 - reset);
        if grown > 0.0 {
            if age + 1 > d_max as usize {
                return Err(Error::TruncationOverflow {
                    age: age as u64 + 1,
                    d_max,
                });
            }
            next[age + 1] += grown;
        }
    }

    let total: f64 = next.iter().sum();
    if total <= 0.0 {
        let observed = observation.unwrap_or(0);
        return Err(Error::InfeasibleObservation {
            observed,
            k: 0,
            m: 0,
        });
    }
    let rho = 1.0 / total;
    Ok(BeliefVector {
        entries: next
            .into_iter()
            .enumerate()
            .filter(|&(_, p)| p > 0.0)
            .map(|(age, p)| (age as u64, p * rho))
            .collect(),
    })
}

/// One-step arrival-belief update without observation, `ωΛ̄ + (1-ω)Λ`.
#[inline]
pub fn markov_t(omega: f64, params: &MarkovArrivalParams) -> f64 {
    omega * params.lambda_bar() + (1.0 - omega) * params.lambda()
}

/// `m`-step arrival-belief update without observation.
///
/// Uses `ω* + (Λ̄-Λ)^m (ω - ω*)` with fixed point `ω* = Λ / (1 + Λ - Λ̄)`.
/// For the absorbing chain `Λ = 0, Λ̄ = 1` the update is the identity.
pub fn markov_t_m(omega: f64, m: u64, params: &MarkovArrivalParams) -> f64 {
    let (lambda, lambda_bar) = (params.lambda(), params.lambda_bar());
    let denom = 1.0 + lambda - lambda_bar;
    if denom <= f64::EPSILON {
        return omega;
    }
    let fixed = lambda / denom;
    let value = fixed + (lambda_bar - lambda).powi(saturating_i32(m)) * (omega - fixed);
    value.clamp(0.0, 1.0)
}

/// `m`-fold application of [`markov_t`].
pub fn markov_t_m_iterated(omega: f64, m: u64, params: &MarkovArrivalParams) -> f64 {
    (0..m).fold(omega, |w, _| markov_t(w, params))
}

/// Last-observation summary under Markov arrivals.
///
/// `omega0` is the probability of an arrival in the slot of the last
/// observation: Λ̄ if the observed age was 1 (so the slot before carried an
/// arrival), Λ otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkovBeliefState {
    pub k: u64,
    pub m: u64,
    pub omega0: f64,
}

impl MarkovBeliefState {
    pub fn new(k: u64, m: u64, params: &MarkovArrivalParams) -> Result<Self> {
        let z = LocBelief::new(k, m)?;
        Ok(Self {
            k: z.k,
            m: z.m,
            omega0: markov_anchor(k, params),
        })
    }

    pub fn initial(params: &MarkovArrivalParams) -> Self {
        Self {
            k: 1,
            m: 1,
            omega0: params.lambda_bar(),
        }
    }

    pub fn loc(&self) -> LocBelief {
        LocBelief {
            k: self.k,
            m: self.m,
        }
    }

    pub fn aoi(&self) -> u64 {
        self.k + self.m
    }

    pub fn update(
        &self,
        scheduled: bool,
        observation: Option<u64>,
        params: &MarkovArrivalParams,
    ) -> Result<Self> {
        let z = update_loc_belief(self.loc(), scheduled, observation)?;
        let omega0 = if z.m == 1 && observation.is_some() {
            markov_anchor(z.k, params)
        } else {
            self.omega0
        };
        Ok(Self {
            k: z.k,
            m: z.m,
            omega0,
        })
    }
}

fn markov_anchor(k: u64, params: &MarkovArrivalParams) -> f64 {
    if k == 1 {
        params.lambda_bar()
    } else {
        params.lambda()
    }
}

/// Exact posterior over the local age under Markov arrivals.
///
/// With `ω0` the arrival probability in the observation slot and `T^j` the
/// unobserved arrival-belief update, the mass is `T^(m-1)(ω0)` at age 1,
/// `T^(m-a)(ω0) Γ̄ Γ^(a-2)` at ages `a = 2..=m`, and `(1-ω0) Γ^(m-1)` at age
/// `k + m`. This equals `m` applications of the Markov local-age kernel to
/// the point mass at `k`.
pub fn markov_belief_vector(k: u64, m: u64, params: &MarkovArrivalParams) -> BeliefVector {
    let omega0 = markov_anchor(k, params);
    let trajectory = arrival_belief_trajectory(omega0, m, params);
    let (gamma, gamma_bar) = (params.gamma(), params.gamma_bar());
    let mut entries = Vec::with_capacity(m as usize + 1);
    entries.push((1, trajectory[m as usize - 1]));
    let mut run = gamma_bar;
    for age in 2..=m {
        entries.push((age, trajectory[(m - age) as usize] * run));
        run *= gamma;
    }
    entries.push((k + m, (1.0 - omega0) * gamma.powi(saturating_i32(m - 1))));
    BeliefVector { entries }
}

/// Product-form vector with entries `G^j(·)` and `T^j(·)` seeded at Λ̄/Γ̄ for
/// `k = 1` and Λ/Γ for `k > 1`.
///
/// This form multiplies each surviving entry by the *marginal* no-arrival
/// probability, which ignores that an age of 1 predicts the next arrival with
/// Λ̄ rather than Λ. It is normalized and coincides with
/// [`markov_belief_vector`] when `Λ = Λ̄`, but not in general.
pub fn markov_belief_vector_product_form(
    k: u64,
    m: u64,
    params: &MarkovArrivalParams,
) -> BeliefVector {
    let base = markov_anchor(k, params);
    let trajectory = arrival_belief_trajectory(base, m, params);
    let g = |j: u64| 1.0 - trajectory[j as usize];
    let mut entries = Vec::with_capacity(m as usize + 1);
    entries.push((1, trajectory[m as usize - 1]));
    let mut survival = 1.0;
    for age in 2..=m {
        survival *= g(m - age + 1);
        entries.push((age, survival * trajectory[(m - age) as usize]));
    }
    let tail: f64 = (0..m).map(g).product();
    entries.push((k + m, tail));
    BeliefVector { entries }
}

/// `[T^0(ω0), T^1(ω0), …, T^(m-1)(ω0)]`.
fn arrival_belief_trajectory(omega0: f64, m: u64, params: &MarkovArrivalParams) -> Vec<f64> {
    let mut out = Vec::with_capacity(m as usize);
    let mut w = omega0;
    for _ in 0..m {
        out.push(w);
        w = markov_t(w, params);
    }
    out
}

/// `E[d]` under [`markov_belief_vector`], evaluated without allocating.
pub fn markov_expected_local_age(k: u64, m: u64, params: &MarkovArrivalParams) -> f64 {
    let omega0 = markov_anchor(k, params);
    let (gamma, gamma_bar) = (params.gamma(), params.gamma_bar());
    let mut total = markov_t_m(omega0, m - 1, params);
    let mut run = gamma_bar;
    for age in 2..=m {
        total += age as f64 * markov_t_m(omega0, m - age, params) * run;
        run *= gamma;
    }
    total + (k + m) as f64 * (1.0 - omega0) * gamma.powi(saturating_i32(m - 1))
}

/// Index `(k+m) - E[d]` for the Markov arrival model.
pub fn markov_pomw_index_term(k: u64, m: u64, params: &MarkovArrivalParams) -> f64 {
    (k + m) as f64 - markov_expected_local_age(k, m, params)
}
