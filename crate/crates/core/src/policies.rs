//! Scheduling policies.
//!
//! The stateless `decide_*` functions implement each decision rule on explicit
//! inputs. [`Policy`] wraps them with the per-run state a rule needs (beliefs,
//! rotation counter) and is what the simulator drives.
//!
//! All argmax rules break ties towards the lowest node index.

use serde::{Deserialize, Serialize};

use crate::belief::{
    markov_pomw_index_term, pomw_index_term, update_loc_belief, LocBelief, MarkovBeliefState,
};
use crate::error::{Error, Result};
use crate::model::{MarkovArrivalParams, NodeParams};

/// At most one node transmits per slot; `None` idles the channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Decision {
    pub scheduled_node: Option<usize>,
}

impl Decision {
    pub const IDLE: Decision = Decision {
        scheduled_node: None,
    };

    pub fn schedule(node: usize) -> Self {
        Self {
            scheduled_node: Some(node),
        }
    }
}

/// Index of the first maximum. Panics on an empty iterator.
fn argmax(values: impl Iterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_value = f64::NEG_INFINITY;
    for (i, v) in values.enumerate() {
        if v > best_value {
            best = i;
            best_value = v;
        }
    }
    best
}

/// Schedules the node maximizing `β p G` with `G = (k+m) - E[d]`.
pub fn decide_pomw(beliefs: &[LocBelief], params: &[NodeParams]) -> Decision {
    debug_assert_eq!(beliefs.len(), params.len());
    Decision::schedule(argmax(beliefs.iter().zip(params).map(|(z, node)| {
        node.beta * node.p * pomw_index_term(z.k, z.m, node.lambda)
    })))
}

/// POMW under Markov arrivals, with `G = (k+m) - E[d]` from the exact Markov posterior.
pub fn decide_pomw_markov(
    beliefs: &[MarkovBeliefState],
    chains: &[MarkovArrivalParams],
    params: &[NodeParams],
) -> Decision {
    Decision::schedule(argmax(beliefs.iter().zip(chains).zip(params).map(
        |((z, chain), node)| node.beta * node.p * markov_pomw_index_term(z.k, z.m, chain),
    )))
}

/// Fully observed max-weight: maximizes `β p (D - d)` using the true local ages.
pub fn decide_fomw(local_age: &[u64], aoi: &[u64], params: &[NodeParams]) -> Decision {
    Decision::schedule(argmax(
        local_age
            .iter()
            .zip(aoi)
            .zip(params)
            .map(|((&d, &big_d), node)| node.beta * node.p * (big_d - d) as f64),
    ))
}

/// Randomized scheduling: node `i` owns the interval `[Σ_{j<i} μ_j, Σ_{j≤i} μ_j)`.
pub fn decide_rs(mu: &[f64], u: f64) -> Decision {
    let mut upper = 0.0;
    for (i, &m) in mu.iter().enumerate() {
        upper += m;
        if u < upper {
            return Decision::schedule(i);
        }
    }
    Decision::IDLE
}

/// Round robin starting from the first node.
pub fn decide_rr(counter: u64, n: usize) -> Decision {
    Decision::schedule((counter % n as u64) as usize)
}

/// Max weighted AoI: maximizes `ω p D`.
pub fn decide_mwa(aoi: &[u64], params: &[NodeParams]) -> Decision {
    Decision::schedule(argmax(
        aoi.iter()
            .zip(params)
            .map(|(&big_d, node)| node.omega * node.p * big_d as f64),
    ))
}

/// Validated RS probability vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RsProbabilities(Vec<f64>);

impl RsProbabilities {
    pub fn new(mu: Vec<f64>) -> Result<Self> {
        if mu.is_empty() {
            return Err(Error::InvalidConfig(
                "RS needs at least one probability".into(),
            ));
        }
        for &m in &mu {
            if !(m > 0.0 && m <= 1.0) {
                return Err(Error::InvalidParameter {
                    name: "mu",
                    value: m,
                    reason: "must lie in (0, 1]",
                });
            }
        }
        let total: f64 = mu.iter().sum();
        if total > 1.0 + 1e-12 {
            return Err(Error::InvalidParameter {
                name: "sum(mu)",
                value: total,
                reason: "must not exceed 1",
            });
        }
        Ok(Self(mu))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Per-run scheduler state.
#[derive(Debug, Clone, PartialEq)]
pub enum Policy {
    Pomw {
        beliefs: Vec<LocBelief>,
    },
    PomwMarkov {
        beliefs: Vec<MarkovBeliefState>,
        chains: Vec<MarkovArrivalParams>,
    },
    Fomw,
    Rs {
        mu: RsProbabilities,
    },
    Rr {
        counter: u64,
    },
    Mwa,
}

impl Policy {
    pub fn pomw(n: usize) -> Self {
        Self::Pomw {
            beliefs: vec![LocBelief::initial(); n],
        }
    }

    pub fn pomw_markov(chains: Vec<MarkovArrivalParams>) -> Self {
        Self::PomwMarkov {
            beliefs: chains.iter().map(MarkovBeliefState::initial).collect(),
            chains,
        }
    }

    pub fn rs(mu: RsProbabilities) -> Self {
        Self::Rs { mu }
    }

    pub fn rr() -> Self {
        Self::Rr { counter: 0 }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Pomw { .. } | Self::PomwMarkov { .. } => "POMW",
            Self::Fomw => "FOMW",
            Self::Rs { .. } => "RS",
            Self::Rr { .. } => "RR",
            Self::Mwa => "MWA",
        }
    }

    /// Whether the policy reads the hidden local ages.
    pub fn is_privileged(&self) -> bool {
        matches!(self, Self::Fomw)
    }

    /// Whether [`Policy::decide`] consumes the supplied uniform draw.
    pub fn uses_draw(&self) -> bool {
        matches!(self, Self::Rs { .. })
    }

    /// Chooses this slot's action from AP-side information.
    ///
    /// `local_age` is only read by privileged policies and must be `Some` for them.
    pub fn decide(
        &self,
        aoi: &[u64],
        local_age: Option<&[u64]>,
        params: &[NodeParams],
        u: f64,
    ) -> Decision {
        match self {
            Self::Pomw { beliefs } => decide_pomw(beliefs, params),
            Self::PomwMarkov { beliefs, chains } => decide_pomw_markov(beliefs, chains, params),
            Self::Fomw => decide_fomw(
                local_age.expect("FOMW requires the true local ages"),
                aoi,
                params,
            ),
            Self::Rs { mu } => decide_rs(mu.as_slice(), u),
            Self::Rr { counter } => decide_rr(*counter, params.len()),
            Self::Mwa => decide_mwa(aoi, params),
        }
    }

    /// Folds in the slot outcome: `observation` is the delivered local age, if any.
    pub fn observe(&mut self, decision: Decision, observation: Option<u64>) -> Result<()> {
        match self {
            Self::Pomw { beliefs } => {
                for (i, z) in beliefs.iter_mut().enumerate() {
                    let scheduled = decision.scheduled_node == Some(i);
                    let obs = if scheduled { observation } else { None };
                    *z = update_loc_belief(*z, scheduled, obs)?;
                }
            }
            Self::PomwMarkov { beliefs, chains } => {
                for (i, (z, chain)) in beliefs.iter_mut().zip(chains.iter()).enumerate() {
                    let scheduled = decision.scheduled_node == Some(i);
                    let obs = if scheduled { observation } else { None };
                    *z = z.update(scheduled, obs, chain)?;
                }
            }
            Self::Rr { counter } => *counter += 1,
            Self::Fomw | Self::Rs { .. } | Self::Mwa => {}
        }
        Ok(())
    }

    /// AoI implied by the internal belief of node `i`, for belief-tracking policies.
    pub fn belief_aoi(&self, i: usize) -> Option<u64> {
        match self {
            Self::Pomw { beliefs } => Some(beliefs[i].aoi()),
            Self::PomwMarkov { beliefs, .. } => Some(beliefs[i].aoi()),
            _ => None,
        }
    }

    /// Copies the `(k, m)` summaries of belief-tracking policies into `out`.
    ///
    /// Returns `false`, leaving `out` empty, for the other policies.
    pub fn loc_beliefs_into(&self, out: &mut Vec<LocBelief>) -> bool {
        out.clear();
        match self {
            Self::Pomw { beliefs } => out.extend_from_slice(beliefs),
            Self::PomwMarkov { beliefs, .. } => out.extend(beliefs.iter().map(|b| b.loc())),
            _ => return false,
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit(lambda: f64) -> NodeParams {
        NodeParams::new(lambda, 1.0, 1.0).unwrap()
    }

    #[test]
    fn pomw_examples() {
        // G = 1.04 vs G = 0.5
        let beliefs = [LocBelief { k: 1, m: 2 }, LocBelief { k: 1, m: 1 }];
        let params = [unit(0.4), unit(0.5)];
        assert_eq!(decide_pomw(&beliefs, &params), Decision::schedule(0));

        let beliefs = [LocBelief { k: 2, m: 3 }; 3];
        assert_eq!(
            decide_pomw(&beliefs, &[unit(0.3); 3]),
            Decision::schedule(0)
        );

        let beliefs = [
            LocBelief { k: 1, m: 3 },
            LocBelief { k: 4, m: 2 },
            LocBelief { k: 2, m: 1 },
        ];
        assert_eq!(
            decide_pomw(&beliefs, &[unit(1.0); 3]),
            Decision::schedule(1)
        );
    }

    #[test]
    fn fomw_examples() {
        let params = [unit(0.5); 2];
        assert_eq!(
            decide_fomw(&[3, 1], &[9, 5], &params),
            Decision::schedule(0)
        );
        assert_eq!(
            decide_fomw(&[2, 1], &[5, 4], &params),
            Decision::schedule(0)
        );
        assert_eq!(
            decide_fomw(&[4, 2], &[4, 2], &params),
            Decision::schedule(0)
        );
    }

    #[test]
    fn rs_examples() {
        assert_eq!(decide_rs(&[0.6, 0.4], 0.7), Decision::schedule(1));
        assert_eq!(decide_rs(&[0.3, 0.3], 0.9), Decision::IDLE);
        assert_eq!(decide_rs(&[1.0], 0.999_999), Decision::schedule(0));
        assert_eq!(decide_rs(&[0.3, 0.3], 0.0), Decision::schedule(0));
    }

    #[test]
    fn rs_probabilities_validation() {
        assert!(RsProbabilities::new(vec![0.6, 0.5]).is_err());
        assert!(RsProbabilities::new(vec![0.0, 0.5]).is_err());
        assert!(RsProbabilities::new(vec![]).is_err());
        assert!(RsProbabilities::new(vec![0.5, 0.5 + 1e-13]).is_ok());
    }

    #[test]
    fn rr_examples() {
        assert_eq!(decide_rr(0, 3), Decision::schedule(0));
        assert_eq!(decide_rr(3, 3), Decision::schedule(0));
        assert_eq!(decide_rr(4, 3), Decision::schedule(1));
    }

    #[test]
    fn mwa_examples() {
        let params = [unit(0.5); 2];
        assert_eq!(decide_mwa(&[7, 9], &params), Decision::schedule(1));
        let params = [
            NodeParams::new(0.5, 0.5, 2.0).unwrap(),
            NodeParams::new(0.5, 1.0, 1.0).unwrap(),
        ];
        assert_eq!(decide_mwa(&[4, 4], &params), Decision::schedule(0));
        let params = [
            NodeParams::new(0.5, 0.9, 1.0).unwrap(),
            NodeParams::new(0.5, 0.3, 1.0).unwrap(),
        ];
        assert_eq!(decide_mwa(&[3, 10], &params), Decision::schedule(1));
    }

    #[test]
    fn rr_counter_advances_on_observe() {
        let mut policy = Policy::rr();
        let params = [unit(0.5); 3];
        let mut seen = Vec::new();
        for _ in 0..5 {
            let d = policy.decide(&[1, 1, 1], None, &params, 0.0);
            seen.push(d.scheduled_node.unwrap());
            policy.observe(d, None).unwrap();
        }
        assert_eq!(seen, [0, 1, 2, 0, 1]);
    }

    #[test]
    fn pomw_observe_tracks_beliefs() {
        let mut policy = Policy::pomw(2);
        policy.observe(Decision::schedule(1), Some(2)).unwrap();
        let mut z = Vec::new();
        assert!(policy.loc_beliefs_into(&mut z));
        assert_eq!(z, [LocBelief { k: 1, m: 2 }, LocBelief { k: 2, m: 1 }]);
        assert!(!Policy::Mwa.loc_beliefs_into(&mut z));
        assert!(z.is_empty());
        policy.observe(Decision::schedule(0), None).unwrap();
        assert_eq!(policy.belief_aoi(0), Some(4));
        assert!(policy.observe(Decision::schedule(0), Some(5)).is_err());
    }

    fn arb_node() -> impl Strategy<Value = NodeParams> {
        (0.01f64..=1.0, 0.01f64..=1.0, 0.1f64..5.0, 0.1f64..5.0)
            .prop_map(|(l, p, w, b)| NodeParams::with_beta(l, p, w, b).unwrap())
    }

    proptest! {
        #[test]
        fn argmax_scale_invariance(
            nodes in proptest::collection::vec((arb_node(), 1u64..30, 1u64..30, 0u64..30), 1..8),
            scale in prop_oneof![Just(2.0f64), Just(0.25), Just(8.0)],
        ) {
            let params: Vec<_> = nodes.iter().map(|n| n.0).collect();
            let beliefs: Vec<_> = nodes.iter().map(|n| LocBelief { k: n.1, m: n.2 }).collect();
            let local: Vec<u64> = nodes.iter().map(|n| n.1).collect();
            let aoi: Vec<u64> = nodes.iter().map(|n| n.1 + n.3).collect();
            let scaled: Vec<_> = params
                .iter()
                .map(|n| NodeParams::with_beta(n.lambda, n.p, n.omega * scale, n.beta * scale).unwrap())
                .collect();
            prop_assert_eq!(decide_pomw(&beliefs, &params), decide_pomw(&beliefs, &scaled));
            prop_assert_eq!(decide_fomw(&local, &aoi, &params), decide_fomw(&local, &aoi, &scaled));
            prop_assert_eq!(decide_mwa(&aoi, &params), decide_mwa(&aoi, &scaled));
        }

        #[test]
        fn generate_at_will_pomw_equals_fomw(
            nodes in proptest::collection::vec((0.01f64..=1.0, 0.1f64..5.0, 1u64..30), 1..8),
        ) {
            let params: Vec<_> = nodes
                .iter()
                .map(|&(p, b, _)| NodeParams::with_beta(1.0, p, 1.0, b).unwrap())
                .collect();
            // with λ = 1 the local age is always 1, so k = 1 and m = D - 1
            let aoi: Vec<u64> = nodes.iter().map(|n| n.2 + 1).collect();
            let beliefs: Vec<_> = aoi.iter().map(|&a| LocBelief { k: 1, m: a - 1 }).collect();
            prop_assert_eq!(decide_pomw(&beliefs, &params), decide_fomw(&vec![1; aoi.len()], &aoi, &params));
        }
    }
}
