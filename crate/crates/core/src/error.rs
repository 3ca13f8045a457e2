use thiserror::Error;

/// Errors raised by parameter validation, the belief oracle and the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// The truncated Bayes filter was asked to place mass above its cap.
    #[error("belief mass at local age {age} exceeds truncation cap {d_max}")]
    TruncationOverflow { age: u64, d_max: u64 },

    /// An observed local age lies outside the support of the current belief.
    #[error("observation {observed} outside belief support (k={k}, m={m})")]
    InfeasibleObservation { observed: u64, k: u64, m: u64 },

    /// AP-side bookkeeping disagrees with the ground truth.
    #[error("consistency failure at slot {slot}, node {node}: {detail}")]
    Desync {
        slot: u64,
        node: usize,
        detail: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_probability(name: &'static str, value: f64, allow_zero: bool) -> Result<()> {
    let ok = if allow_zero {
        (0.0..=1.0).contains(&value)
    } else {
        value > 0.0 && value <= 1.0
    };
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: if allow_zero {
                "must lie in [0, 1]"
            } else {
                "must lie in (0, 1]"
            },
        })
    }
}

pub(crate) fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be positive and finite",
        })
    }
}
