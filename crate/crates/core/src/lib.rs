//! Age-of-Information scheduling in a slotted multiuser uplink where the access
//! point sees destination AoI but only occasionally observes the nodes' local ages.
//!
//! * [`model`]: ground-truth arrival, local-age and AoI dynamics.
//! * [`belief`]: last-observation belief summaries, closed-form posteriors and a
//!   dense Bayes filter used as a reference.
//! * [`policies`]: POMW, FOMW, RS, RR and MWA decision rules.
//! * [`analysis`]: RS closed forms, POMW upper bounds and the universal lower bound.
//! * [`sim`]: seeded Monte-Carlo episodes and aggregation.

pub mod analysis;
pub mod belief;
pub mod error;
pub mod model;
pub mod policies;
pub mod sim;

pub use error::{Error, Result};
pub use model::{MarkovArrivalParams, NodeParams};
pub use sim::{ExperimentConfig, RunMetrics};
