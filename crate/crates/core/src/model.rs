//! Ground-truth dynamics of the slotted uplink.
//!
//! Each node holds a single-packet buffer. Its *local age* `d` resets to 1 one
//! slot after a status update arrives and otherwise grows by one per slot. The
//! access point tracks the *destination AoI* `D`, which drops to `d + 1` after a
//! successful delivery and otherwise grows by one.
//!
//! Every stochastic step takes an explicit uniform draw in `[0, 1)` so that the
//! simulator controls the order in which randomness is consumed.

use serde::{Deserialize, Serialize};

use crate::error::{check_positive, check_probability, Result};

/// Static description of one node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeParams {
    /// Per-slot arrival probability of a fresh status update.
    pub lambda: f64,
    /// Per-attempt transmission success probability.
    pub p: f64,
    /// AoI weight in the objective.
    pub omega: f64,
    /// Lyapunov weight used by the max-weight policies.
    pub beta: f64,
}

impl NodeParams {
    /// Validated constructor with `beta = 1`.
    pub fn new(lambda: f64, p: f64, omega: f64) -> Result<Self> {
        Self::with_beta(lambda, p, omega, 1.0)
    }

    pub fn with_beta(lambda: f64, p: f64, omega: f64, beta: f64) -> Result<Self> {
        check_probability("lambda", lambda, false)?;
        check_probability("p", p, false)?;
        check_positive("omega", omega)?;
        check_positive("beta", beta)?;
        Ok(Self {
            lambda,
            p,
            omega,
            beta,
        })
    }

    /// Same node with a different Lyapunov weight.
    pub fn set_beta(self, beta: f64) -> Result<Self> {
        Self::with_beta(self.lambda, self.p, self.omega, beta)
    }
}

/// Two-state Markov arrival chain.
///
/// `lambda` is the arrival probability after a slot without arrival and
/// `lambda_bar` the arrival probability after a slot with one. The
/// complementary probabilities are derived on demand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarkovArrivalParams {
    lambda: f64,
    lambda_bar: f64,
}

impl MarkovArrivalParams {
    pub fn new(lambda: f64, lambda_bar: f64) -> Result<Self> {
        check_probability("Lambda", lambda, true)?;
        check_probability("LambdaBar", lambda_bar, true)?;
        Ok(Self { lambda, lambda_bar })
    }

    /// P(arrival | no arrival in the previous slot).
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// P(arrival | arrival in the previous slot).
    pub fn lambda_bar(&self) -> f64 {
        self.lambda_bar
    }

    pub fn gamma(&self) -> f64 {
        1.0 - self.lambda
    }

    pub fn gamma_bar(&self) -> f64 {
        1.0 - self.lambda_bar
    }

    /// Long-run fraction of slots with an arrival, `Λ / (1 + Λ - Λ̄)`.
    ///
    /// Returns `None` for the absorbing chain `Λ = 0, Λ̄ = 1`, whose long-run
    /// rate depends on the initial state.
    pub fn stationary_rate(&self) -> Option<f64> {
        let denom = 1.0 + self.lambda - self.lambda_bar;
        (denom > 0.0).then(|| self.lambda / denom)
    }
}

/// Arrival process of a single node, carrying the chain state for Markov arrivals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ArrivalProcessState {
    Bernoulli {
        lambda: f64,
    },
    Markov {
        params: MarkovArrivalParams,
        last_arrival: bool,
    },
}

impl ArrivalProcessState {
    pub fn bernoulli(lambda: f64) -> Self {
        Self::Bernoulli { lambda }
    }

    /// Markov chain whose previous slot carried an arrival, matching `d_0 = 1`.
    pub fn markov(params: MarkovArrivalParams) -> Self {
        Self::Markov {
            params,
            last_arrival: true,
        }
    }
}

/// Draws whether an update arrives this slot and advances the chain state.
pub fn step_arrival(state: ArrivalProcessState, u: f64) -> (bool, ArrivalProcessState) {
    match state {
        ArrivalProcessState::Bernoulli { lambda } => (u < lambda, state),
        ArrivalProcessState::Markov {
            params,
            last_arrival,
        } => {
            let threshold = if last_arrival {
                params.lambda_bar
            } else {
                params.lambda
            };
            let arrival = u < threshold;
            (
                arrival,
                ArrivalProcessState::Markov {
                    params,
                    last_arrival: arrival,
                },
            )
        }
    }
}

/// Local age in the next slot.
#[inline]
pub fn evolve_local_age(d: u64, arrival: bool) -> u64 {
    if arrival {
        1
    } else {
        d + 1
    }
}

/// Destination AoI in the next slot; `delivered` means scheduled and successful.
#[inline]
pub fn evolve_destination_aoi(aoi: u64, d: u64, delivered: bool) -> u64 {
    if delivered {
        d + 1
    } else {
        aoi + 1
    }
}

#[inline]
pub fn attempt_transmission(p: f64, u: f64) -> bool {
    u < p
}

/// Hidden per-node state: local ages `d` and destination AoI `D`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruthState {
    pub local_age: Vec<u64>,
    pub aoi: Vec<u64>,
}

impl GroundTruthState {
    /// `d_0 = D_0 = 1` for every node.
    pub fn initial(n: usize) -> Self {
        Self {
            local_age: vec![1; n],
            aoi: vec![1; n],
        }
    }

    pub fn len(&self) -> usize {
        self.aoi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.aoi.is_empty()
    }

    /// Applies one slot: `delivered` is the node whose transmission succeeded.
    pub fn advance(&mut self, delivered: Option<usize>, arrivals: &[bool]) {
        let nodes = self
            .aoi
            .iter_mut()
            .zip(self.local_age.iter_mut())
            .zip(arrivals);
        for (i, ((aoi, d), &arrival)) in nodes.enumerate() {
            *aoi = evolve_destination_aoi(*aoi, *d, delivered == Some(i));
            *d = evolve_local_age(*d, arrival);
        }
    }

    /// Index of the first node violating `D >= d >= 1`, if any.
    pub fn first_violation(&self) -> Option<usize> {
        self.aoi
            .iter()
            .zip(&self.local_age)
            .position(|(&aoi, &d)| d < 1 || aoi < d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn bernoulli_arrival_threshold() {
        let s = ArrivalProcessState::bernoulli(1.0);
        assert!(step_arrival(s, 0.999_999).0);
        let s = ArrivalProcessState::bernoulli(0.4);
        assert!(step_arrival(s, 0.39).0);
        assert!(!step_arrival(s, 0.40).0);
    }

    #[test]
    fn markov_arrival_uses_previous_state() {
        let params = MarkovArrivalParams::new(0.1, 0.7).unwrap();
        let s = ArrivalProcessState::markov(params);
        let (arrival, next) = step_arrival(s, 0.65);
        assert!(arrival);
        assert_eq!(
            next,
            ArrivalProcessState::Markov {
                params,
                last_arrival: true
            }
        );
        let (arrival, next) = step_arrival(next, 0.75);
        assert!(!arrival);
        // now conditioned on no arrival: threshold 0.1
        assert!(!step_arrival(next, 0.2).0);
        assert!(step_arrival(next, 0.05).0);
    }

    #[test]
    fn local_age_evolution() {
        assert_eq!(evolve_local_age(5, true), 1);
        assert_eq!(evolve_local_age(5, false), 6);
        assert_eq!(evolve_local_age(1, true), 1);
    }

    #[test]
    fn destination_aoi_evolution() {
        assert_eq!(evolve_destination_aoi(9, 3, true), 4);
        assert_eq!(evolve_destination_aoi(9, 3, false), 10);
        assert_eq!(evolve_destination_aoi(4, 4, true), 5);
        assert_eq!(evolve_destination_aoi(4, 4, false), 5);
    }

    #[test]
    fn transmission_threshold() {
        assert!(attempt_transmission(1.0, 0.999_999));
        assert!(attempt_transmission(0.8, 0.79));
        assert!(!attempt_transmission(0.8, 0.80));
    }

    #[test]
    fn parameter_validation() {
        assert!(NodeParams::new(0.0, 0.5, 1.0).is_err());
        assert!(NodeParams::new(0.5, 1.5, 1.0).is_err());
        assert!(NodeParams::new(0.5, 0.5, 0.0).is_err());
        assert!(NodeParams::with_beta(0.5, 0.5, 1.0, -1.0).is_err());
        assert!(NodeParams::new(f64::NAN, 0.5, 1.0).is_err());
        assert!(NodeParams::new(1.0, 1.0, 3.0).is_ok());
        assert!(MarkovArrivalParams::new(0.0, 1.0).is_ok());
        assert!(MarkovArrivalParams::new(-0.1, 0.5).is_err());
    }

    #[test]
    fn markov_stationary_rate() {
        let m = MarkovArrivalParams::new(0.3, 0.7).unwrap();
        assert!((m.stationary_rate().unwrap() - 0.5).abs() < 1e-15);
        assert!(MarkovArrivalParams::new(0.0, 1.0)
            .unwrap()
            .stationary_rate()
            .is_none());
    }

    #[test]
    fn markov_with_equal_rows_matches_bernoulli_rate() {
        use rand::{Rng, SeedableRng};
        let lambda = 0.3;
        let params = MarkovArrivalParams::new(lambda, lambda).unwrap();
        let mut state = ArrivalProcessState::markov(params);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let n = 1_000_000;
        let mut hits = 0u64;
        for _ in 0..n {
            let (a, next) = step_arrival(state, rng.gen());
            state = next;
            hits += a as u64;
        }
        let freq = hits as f64 / n as f64;
        let se = (lambda * (1.0 - lambda) / n as f64).sqrt();
        assert!((freq - lambda).abs() < 3.0 * se, "freq {freq}");
    }

    proptest! {
        #[test]
        fn aoi_dominates_local_age(
            arrivals in proptest::collection::vec(any::<bool>(), 1..200),
            deliveries in proptest::collection::vec(any::<bool>(), 1..200),
        ) {
            let mut s = GroundTruthState::initial(1);
            for (a, dl) in arrivals.iter().zip(deliveries.iter()) {
                let (d0, aoi0) = (s.local_age[0], s.aoi[0]);
                s.advance(dl.then_some(0), &[*a]);
                prop_assert!(s.first_violation().is_none());
                // steps are +1 or resets
                prop_assert!(s.local_age[0] == 1 || s.local_age[0] == d0 + 1);
                prop_assert!(s.aoi[0] == aoi0 + 1 || s.aoi[0] == d0 + 1);
            }
        }
    }
}
