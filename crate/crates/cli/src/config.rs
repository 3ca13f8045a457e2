//! TOML experiment documents and their resolution into simulator configurations.
//!
//! A document describes one network, an optional Markov arrival model, a list of
//! policies and optional sweep axes. Scalars broadcast to every node; arrays give
//! per-node values and must agree with `n`.

use std::collections::BTreeSet;

use aoi_core::analysis::{bound_report, BoundReport};
use aoi_core::sim::{
    ArrivalModel, BetaPreset, ExperimentConfig, Network, PolicySpec, RandomNetwork, RsMu,
};
use aoi_core::{MarkovArrivalParams, NodeParams};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    pub horizon: Option<u64>,
    pub runs: Option<u64>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub burn_in: u64,
    pub network: NetworkSection,
    pub arrivals: Option<ArrivalsSection>,
    #[serde(default)]
    pub policy: Vec<PolicySection>,
    #[serde(default)]
    pub sweep: Vec<SweepAxis>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum NumOrVec {
    Scalar(f64),
    PerNode(Vec<f64>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    pub n: Option<usize>,
    pub lambda: Option<NumOrVec>,
    pub p: Option<NumOrVec>,
    pub omega: Option<NumOrVec>,
    pub p_range: Option<[f64; 2]>,
    pub omega_range: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrivalsSection {
    pub model: String,
    /// Arrival probability after a slot without arrival.
    pub lambda: Option<NumOrVec>,
    /// Arrival probability after a slot with an arrival.
    pub lambda_bar: Option<NumOrVec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum PresetOrValues {
    Preset(String),
    Values(Vec<f64>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySection {
    pub name: String,
    pub beta: Option<PresetOrValues>,
    pub mu: Option<PresetOrValues>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub parameter: String,
    pub values: Vec<NumOrVec>,
}

pub fn parse_document(text: &str) -> Result<ConfigDocument, CliError> {
    toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
}

pub fn load_document(path: &std::path::Path) -> Result<ConfigDocument, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_document(&text).map_err(|e| match e {
        CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Command-line values that take precedence over the document.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub runs: Option<u64>,
    pub horizon: Option<u64>,
}

/// Per-node value or a uniform range redrawn each run.
#[derive(Debug, Clone, PartialEq)]
pub enum NodeValues {
    Fixed(Vec<f64>),
    Range(f64, f64),
}

impl NodeValues {
    fn describe(&self) -> String {
        match self {
            Self::Fixed(v) => join(v),
            Self::Range(lo, hi) => format!("U({lo}..{hi})"),
        }
    }
}

/// One fully specified network, after sweep values have been applied.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkPoint {
    pub n: usize,
    /// Bernoulli rates, or `None` when arrivals are Markov.
    pub lambda: Option<Vec<f64>>,
    pub p: NodeValues,
    pub omega: NodeValues,
    pub markov: Option<Vec<MarkovArrivalParams>>,
}

impl NetworkPoint {
    /// Per-node rates used by the policies: Bernoulli rates or chain stationary rates.
    pub fn effective_lambda(&self) -> Result<Vec<f64>, CliError> {
        match (&self.lambda, &self.markov) {
            (Some(l), _) => Ok(l.clone()),
            (None, Some(chains)) => chains
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    c.stationary_rate().filter(|r| *r > 0.0).ok_or_else(|| {
                        config_err(format!(
                            "arrivals: node {} chain (lambda={}, lambda_bar={}) has no positive stationary rate",
                            i + 1,
                            c.lambda(),
                            c.lambda_bar()
                        ))
                    })
                })
                .collect(),
            (None, None) => Err(config_err("network.lambda is required")),
        }
    }

    /// Node parameters when the network is fixed.
    pub fn fixed_nodes(&self) -> Result<Option<Vec<NodeParams>>, CliError> {
        let (NodeValues::Fixed(p), NodeValues::Fixed(omega)) = (&self.p, &self.omega) else {
            return Ok(None);
        };
        let lambda = self.effective_lambda()?;
        lambda
            .iter()
            .zip(p)
            .zip(omega)
            .map(|((&l, &p), &w)| {
                NodeParams::new(l, p, w).map_err(|e| config_err(format!("network: {e}")))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Some)
    }

    pub fn network(&self) -> Result<Network, CliError> {
        if let Some(nodes) = self.fixed_nodes()? {
            return Ok(Network::Fixed(nodes));
        }
        let range = |v: &NodeValues, name: &str| -> Result<(f64, f64), CliError> {
            match v {
                NodeValues::Range(lo, hi) => Ok((*lo, *hi)),
                NodeValues::Fixed(_) => Err(config_err(format!(
                    "network: mixing a fixed {name} with a random range is not supported"
                ))),
            }
        };
        Ok(Network::Random(RandomNetwork {
            lambda: self.effective_lambda()?,
            omega_range: range(&self.omega, "omega")?,
            p_range: range(&self.p, "p")?,
        }))
    }

    pub fn arrivals(&self) -> ArrivalModel {
        match &self.markov {
            Some(chains) => ArrivalModel::Markov(chains.clone()),
            None => ArrivalModel::Bernoulli,
        }
    }

    /// Closed-form bounds; available for fixed networks with Bernoulli arrivals.
    pub fn bounds(&self, mu: Option<&[f64]>) -> Result<Option<BoundReport>, CliError> {
        if self.markov.is_some() {
            return Ok(None);
        }
        match self.fixed_nodes()? {
            Some(nodes) => bound_report(&nodes, mu)
                .map(Some)
                .map_err(|e| config_err(format!("bounds: {e}"))),
            None => Ok(None),
        }
    }

    pub fn describe_lambda(&self) -> Result<String, CliError> {
        Ok(join(&self.effective_lambda()?))
    }

    pub fn describe_p(&self) -> String {
        self.p.describe()
    }

    pub fn describe_omega(&self) -> String {
        self.omega.describe()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BetaChoice {
    Preset(BetaPreset),
    Values(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum PolicyChoice {
    Pomw(BetaChoice),
    Fomw(BetaChoice),
    Rs(RsMu),
    Rr,
    Mwa,
}

impl PolicyChoice {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Pomw(_) => "POMW",
            Self::Fomw(_) => "FOMW",
            Self::Rs(_) => "RS",
            Self::Rr => "RR",
            Self::Mwa => "MWA",
        }
    }

    /// Compact description of the policy parameter for CSV output.
    pub fn param(&self) -> String {
        let beta = |b: &BetaChoice| match b {
            BetaChoice::Preset(BetaPreset::UpperBound) => "beta=theorem2".to_string(),
            BetaChoice::Preset(BetaPreset::LowerBound) => "beta=corollary2".to_string(),
            BetaChoice::Preset(BetaPreset::AsGiven) => "beta=given".to_string(),
            BetaChoice::Values(v) => format!("beta={}", join(v)),
        };
        match self {
            Self::Pomw(b) | Self::Fomw(b) => beta(b),
            Self::Rs(RsMu::Optimal) => "mu=optimal".into(),
            Self::Rs(RsMu::Explicit(mu)) => format!("mu={}", join(mu)),
            Self::Rr | Self::Mwa => String::new(),
        }
    }

    fn per_node_len(&self) -> Option<usize> {
        match self {
            Self::Pomw(BetaChoice::Values(v)) | Self::Fomw(BetaChoice::Values(v)) => Some(v.len()),
            Self::Rs(RsMu::Explicit(v)) => Some(v.len()),
            _ => None,
        }
    }
}

/// A simulation job: one sweep point under one policy.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub point: NetworkPoint,
    pub policy: PolicyChoice,
    pub config: ExperimentConfig,
}

/// A resolved document: sweep points in order and the policies to run at each.
#[derive(Debug, Clone)]
pub struct Plan {
    pub points: Vec<NetworkPoint>,
    pub policies: Vec<PolicyChoice>,
    pub horizon: Option<u64>,
    pub runs: Option<u64>,
    pub seed: Option<u64>,
    pub burn_in: u64,
}

impl Plan {
    pub fn from_document(doc: &ConfigDocument, overrides: Overrides) -> Result<Self, CliError> {
        let base = base_point(doc)?;
        let policies = doc
            .policy
            .iter()
            .enumerate()
            .map(|(i, p)| parse_policy(i, p))
            .collect::<Result<Vec<_>, _>>()?;
        let points = expand_sweeps(&base, &doc.sweep, &policies)?;
        for point in &points {
            for (i, policy) in policies.iter().enumerate() {
                if let Some(len) = policy.per_node_len() {
                    if len != point.n {
                        return Err(config_err(format!(
                            "policy[{i}]: {len} per-node values for {} nodes",
                            point.n
                        )));
                    }
                }
            }
            // surfaces parameter errors before any simulation starts
            point.network()?;
        }
        let plan = Self {
            points,
            policies,
            horizon: overrides.horizon.or(doc.horizon),
            runs: overrides.runs.or(doc.runs),
            seed: overrides.seed.or(doc.seed),
            burn_in: doc.burn_in,
        };
        Ok(plan)
    }

    pub fn has_sweeps(&self) -> bool {
        self.points.len() > 1
    }

    /// Every (point, policy) pair in sweep order, then policy order.
    pub fn experiments(&self) -> Result<Vec<Experiment>, CliError> {
        let horizon = self
            .horizon
            .ok_or_else(|| config_err("missing field `horizon`"))?;
        let runs = self
            .runs
            .ok_or_else(|| config_err("missing field `runs`"))?;
        let seed = self
            .seed
            .ok_or_else(|| config_err("missing field `seed`"))?;
        if self.policies.is_empty() {
            return Err(config_err("at least one [[policy]] table is required"));
        }
        let mut out = Vec::new();
        for point in &self.points {
            for policy in &self.policies {
                let config = build_config(point, policy, horizon, runs, seed, self.burn_in)?;
                out.push(Experiment {
                    point: point.clone(),
                    policy: policy.clone(),
                    config,
                });
            }
        }
        Ok(out)
    }
}

pub fn build_config(
    point: &NetworkPoint,
    policy: &PolicyChoice,
    horizon: u64,
    runs: u64,
    seed: u64,
    burn_in: u64,
) -> Result<ExperimentConfig, CliError> {
    let mut network = point.network()?;
    let spec = match policy {
        PolicyChoice::Pomw(b) | PolicyChoice::Fomw(b) => {
            let beta = match b {
                BetaChoice::Preset(preset) => *preset,
                BetaChoice::Values(values) => {
                    let Network::Fixed(nodes) = &mut network else {
                        return Err(config_err(
                            "policy.beta: explicit values need a fixed network",
                        ));
                    };
                    for (node, &beta) in nodes.iter_mut().zip(values) {
                        *node = node
                            .set_beta(beta)
                            .map_err(|e| config_err(format!("policy.beta: {e}")))?;
                    }
                    BetaPreset::AsGiven
                }
            };
            if matches!(policy, PolicyChoice::Pomw(_)) {
                PolicySpec::Pomw { beta }
            } else {
                PolicySpec::Fomw { beta }
            }
        }
        PolicyChoice::Rs(mu) => PolicySpec::Rs { mu: mu.clone() },
        PolicyChoice::Rr => PolicySpec::Rr,
        PolicyChoice::Mwa => PolicySpec::Mwa,
    };
    let config = ExperimentConfig {
        network,
        arrivals: point.arrivals(),
        policy: spec,
        horizon,
        runs,
        base_seed: seed,
        burn_in,
    };
    config.validate().map_err(|e| config_err(e.to_string()))?;
    Ok(config)
}

fn parse_policy(index: usize, section: &PolicySection) -> Result<PolicyChoice, CliError> {
    let field = |f: &str| format!("policy[{index}].{f}");
    let name = section.name.to_ascii_lowercase();
    let beta = || -> Result<BetaChoice, CliError> {
        Ok(match &section.beta {
            None => BetaChoice::Preset(BetaPreset::UpperBound),
            Some(PresetOrValues::Preset(s)) => match s.as_str() {
                "theorem2" => BetaChoice::Preset(BetaPreset::UpperBound),
                "corollary2" => BetaChoice::Preset(BetaPreset::LowerBound),
                other => {
                    return Err(config_err(format!(
                        "{}: unknown preset \"{other}\" (expected \"theorem2\", \"corollary2\" or an array)",
                        field("beta")
                    )))
                }
            },
            Some(PresetOrValues::Values(v)) => BetaChoice::Values(v.clone()),
        })
    };
    let reject = |f: &str, present: bool| -> Result<(), CliError> {
        if present {
            Err(config_err(format!(
                "{}: not used by policy \"{name}\"",
                field(f)
            )))
        } else {
            Ok(())
        }
    };
    let choice = match name.as_str() {
        "pomw" | "fomw" => {
            reject("mu", section.mu.is_some())?;
            if name == "pomw" {
                PolicyChoice::Pomw(beta()?)
            } else {
                PolicyChoice::Fomw(beta()?)
            }
        }
        "rs" => {
            reject("beta", section.beta.is_some())?;
            PolicyChoice::Rs(match &section.mu {
                None => RsMu::Optimal,
                Some(PresetOrValues::Preset(s)) if s == "optimal" => RsMu::Optimal,
                Some(PresetOrValues::Preset(s)) => {
                    return Err(config_err(format!(
                        "{}: unknown preset \"{s}\" (expected \"optimal\" or an array)",
                        field("mu")
                    )))
                }
                Some(PresetOrValues::Values(v)) => RsMu::Explicit(v.clone()),
            })
        }
        "rr" | "mwa" => {
            reject("beta", section.beta.is_some())?;
            reject("mu", section.mu.is_some())?;
            if name == "rr" {
                PolicyChoice::Rr
            } else {
                PolicyChoice::Mwa
            }
        }
        other => {
            return Err(config_err(format!(
                "{}: unknown policy \"{other}\" (expected pomw, fomw, rs, rr or mwa)",
                field("name")
            )))
        }
    };
    Ok(choice)
}

fn vec_len(v: &Option<NumOrVec>) -> Option<usize> {
    match v {
        Some(NumOrVec::PerNode(x)) => Some(x.len()),
        _ => None,
    }
}

fn broadcast(field: &str, v: &NumOrVec, n: usize) -> Result<Vec<f64>, CliError> {
    match v {
        NumOrVec::Scalar(x) => Ok(vec![*x; n]),
        NumOrVec::PerNode(x) if x.len() == n => Ok(x.clone()),
        NumOrVec::PerNode(x) => Err(config_err(format!(
            "{field}: {} values for {n} nodes",
            x.len()
        ))),
    }
}

fn node_values(
    field: &str,
    fixed: &Option<NumOrVec>,
    range: &Option<[f64; 2]>,
    n: usize,
) -> Result<NodeValues, CliError> {
    match (fixed, range) {
        (Some(_), Some(_)) => Err(config_err(format!(
            "network: give either `{field}` or `{field}_range`, not both"
        ))),
        (Some(v), None) => Ok(NodeValues::Fixed(broadcast(
            &format!("network.{field}"),
            v,
            n,
        )?)),
        (None, Some([lo, hi])) => Ok(NodeValues::Range(*lo, *hi)),
        (None, None) => Err(config_err(format!("missing field `network.{field}`"))),
    }
}

fn base_point(doc: &ConfigDocument) -> Result<NetworkPoint, CliError> {
    let net = &doc.network;
    let markov = match &doc.arrivals {
        None => None,
        Some(a) => match a.model.to_ascii_lowercase().as_str() {
            "bernoulli" => {
                if a.lambda.is_some() || a.lambda_bar.is_some() {
                    return Err(config_err(
                        "arrivals: lambda/lambda_bar apply only to model = \"markov\"",
                    ));
                }
                None
            }
            "markov" => Some(a),
            other => {
                return Err(config_err(format!(
                    "arrivals.model: unknown model \"{other}\" (expected bernoulli or markov)"
                )))
            }
        },
    };
    let mut lengths: BTreeSet<usize> = [
        vec_len(&net.lambda),
        vec_len(&net.p),
        vec_len(&net.omega),
        markov.and_then(|a| vec_len(&a.lambda)),
        markov.and_then(|a| vec_len(&a.lambda_bar)),
    ]
    .into_iter()
    .flatten()
    .collect();
    if let Some(n) = net.n {
        lengths.insert(n);
    }
    let n = match lengths.len() {
        0 => 1,
        1 => *lengths.iter().next().unwrap(),
        _ => {
            return Err(config_err(format!(
                "network: per-node arrays disagree on the number of nodes ({lengths:?})"
            )))
        }
    };
    if n == 0 {
        return Err(config_err("network.n must be at least 1"));
    }
    let (lambda, markov) = match markov {
        None => {
            let lambda = net
                .lambda
                .as_ref()
                .ok_or_else(|| config_err("missing field `network.lambda`"))?;
            (Some(broadcast("network.lambda", lambda, n)?), None)
        }
        Some(a) => {
            if net.lambda.is_some() {
                return Err(config_err(
                    "network.lambda: not allowed with Markov arrivals (the rate follows from the chain)",
                ));
            }
            let get = |name: &str, v: &Option<NumOrVec>| -> Result<Vec<f64>, CliError> {
                let v = v
                    .as_ref()
                    .ok_or_else(|| config_err(format!("missing field `arrivals.{name}`")))?;
                broadcast(&format!("arrivals.{name}"), v, n)
            };
            let l = get("lambda", &a.lambda)?;
            let lb = get("lambda_bar", &a.lambda_bar)?;
            let chains = l
                .iter()
                .zip(&lb)
                .map(|(&l, &lb)| {
                    MarkovArrivalParams::new(l, lb)
                        .map_err(|e| config_err(format!("arrivals: {e}")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            (None, Some(chains))
        }
    };
    Ok(NetworkPoint {
        n,
        lambda,
        p: node_values("p", &net.p, &net.p_range, n)?,
        omega: node_values("omega", &net.omega, &net.omega_range, n)?,
        markov,
    })
}

fn uniform_value(field: &str, v: &[f64]) -> Result<f64, CliError> {
    match v.first() {
        Some(&x) if v.iter().all(|&y| y == x) => Ok(x),
        _ => Err(config_err(format!(
            "sweep over n needs identical per-node values, but {field} varies"
        ))),
    }
}

fn apply_axis(point: &mut NetworkPoint, field: &str, value: &NumOrVec) -> Result<(), CliError> {
    let n = point.n;
    match field {
        "lambda" => {
            if point.markov.is_some() {
                return Err(config_err(format!(
                    "{field}: cannot sweep lambda with Markov arrivals"
                )));
            }
            point.lambda = Some(broadcast(field, value, n)?);
        }
        "p" => point.p = NodeValues::Fixed(broadcast(field, value, n)?),
        "omega" => point.omega = NodeValues::Fixed(broadcast(field, value, n)?),
        "n" => {
            let NumOrVec::Scalar(x) = value else {
                return Err(config_err(format!("{field}: values must be integers")));
            };
            if *x < 1.0 || x.fract() != 0.0 {
                return Err(config_err(format!(
                    "{field}: {x} is not a positive integer"
                )));
            }
            let new_n = *x as usize;
            if let Some(l) = &point.lambda {
                point.lambda = Some(vec![uniform_value("lambda", l)?; new_n]);
            }
            if let NodeValues::Fixed(p) = &point.p {
                point.p = NodeValues::Fixed(vec![uniform_value("p", p)?; new_n]);
            }
            if let NodeValues::Fixed(w) = &point.omega {
                point.omega = NodeValues::Fixed(vec![uniform_value("omega", w)?; new_n]);
            }
            if let Some(chains) = &point.markov {
                let first = chains[0];
                if chains.iter().any(|c| *c != first) {
                    return Err(config_err(
                        "sweep over n needs identical per-node values, but the arrival chains vary",
                    ));
                }
                point.markov = Some(vec![first; new_n]);
            }
            point.n = new_n;
        }
        other => {
            return Err(config_err(format!(
                "sweep.parameter: unknown parameter \"{other}\" (expected lambda, p, omega or n)"
            )))
        }
    }
    Ok(())
}

fn expand_sweeps(
    base: &NetworkPoint,
    axes: &[SweepAxis],
    policies: &[PolicyChoice],
) -> Result<Vec<NetworkPoint>, CliError> {
    let mut names = BTreeSet::new();
    for (i, axis) in axes.iter().enumerate() {
        if axis.values.is_empty() {
            return Err(config_err(format!("sweep[{i}].values: empty")));
        }
        if !names.insert(axis.parameter.as_str()) {
            return Err(config_err(format!(
                "sweep[{i}].parameter: \"{}\" swept twice",
                axis.parameter
            )));
        }
    }
    if names.contains("n") && policies.iter().any(|p| p.per_node_len().is_some()) {
        return Err(config_err(
            "sweep over n cannot be combined with per-node policy arrays",
        ));
    }
    // cartesian product, first axis outermost
    let mut combos: Vec<Vec<(usize, usize)>> = vec![Vec::new()];
    for (a, axis) in axes.iter().enumerate() {
        combos = combos
            .into_iter()
            .flat_map(|prefix| {
                (0..axis.values.len()).map(move |v| {
                    let mut c = prefix.clone();
                    c.push((a, v));
                    c
                })
            })
            .collect();
    }
    combos
        .into_iter()
        .map(|combo| {
            let mut point = base.clone();
            // resize first so per-node values of the other axes see the final n
            let (resize, rest): (Vec<_>, Vec<_>) =
                combo.iter().partition(|(a, _)| axes[*a].parameter == "n");
            for (a, v) in resize.into_iter().chain(rest) {
                let field = format!("sweep[{a}].values[{v}]");
                let axis = &axes[a];
                apply_axis(&mut point, &axis.parameter, &axis.values[v])
                    .map_err(|e| config_err(format!("{field}: {e}")))?;
            }
            Ok(point)
        })
        .collect()
}

/// Semicolon-joined shortest round-trip representation.
pub fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(";")
}
