//! Scenario files: schema, canonical JSON round trip and validation.
//!
//! Canonical field order is the declaration order below. Agent indices in
//! `topology.edges` and `noise.edges` are 1-based with leaders first.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::closed_loop::FollowerInit;
use crate::error::{Error, Result};
use crate::signals::{NoiseModel, TimeDomain, VectorPolynomial};
use crate::topology::{check_assumption_a1, DirectedTopology};

pub const SCENARIO_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ControllerKind {
    ContinuousPin,
    ContinuousHighOrder,
    ContinuousEstimator,
    DiscretePin,
    DiscretePinUniform,
    DiscreteNoisy,
    DiscreteHighOrder,
    DiscreteEstimator,
    RobotApplication,
}

impl ControllerKind {
    pub const ALL: [ControllerKind; 9] = [
        Self::ContinuousPin,
        Self::ContinuousHighOrder,
        Self::ContinuousEstimator,
        Self::DiscretePin,
        Self::DiscretePinUniform,
        Self::DiscreteNoisy,
        Self::DiscreteHighOrder,
        Self::DiscreteEstimator,
        Self::RobotApplication,
    ];

    pub fn domain(self) -> TimeDomain {
        match self {
            Self::ContinuousPin | Self::ContinuousHighOrder | Self::ContinuousEstimator => TimeDomain::Continuous,
            _ => TimeDomain::Discrete,
        }
    }

    pub fn single_integrator(self) -> bool {
        matches!(
            self,
            Self::ContinuousPin | Self::DiscretePin | Self::DiscretePinUniform | Self::DiscreteNoisy | Self::RobotApplication
        )
    }

    pub fn uses_estimator(self) -> bool {
        matches!(self, Self::ContinuousEstimator | Self::DiscreteEstimator)
    }

    pub fn noisy(self) -> bool {
        matches!(self, Self::DiscreteNoisy | Self::RobotApplication)
    }

    pub fn name(self) -> String {
        serde_json::to_value(self)
            .ok()
            .and_then(|v| v.as_str().map(String::from))
            .unwrap_or_default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologySpec {
    pub leaders: usize,
    pub followers: usize,
    /// `[from, to, weight]`, 1-based.
    pub edges: Vec<(usize, usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GainSpec {
    Synthesized,
    /// Row gain `(κ_{l_m−1}, …, κ_0)`.
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    /// Default per-component intensity `ρ`.
    pub uniform: Vec<f64>,
    /// Per-edge overrides `[from, to, [ρ_1, …]]`, 1-based.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub edges: Vec<(usize, usize, Vec<f64>)>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialState {
    /// `x, Dx, …` (at most `m` vectors; missing entries are zero).
    pub chain: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub estimator_error: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotSpec {
    pub wheel_offset: f64,
    pub initial_heading: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub schema_version: u32,
    pub topology: TopologySpec,
    pub leaders: Vec<VectorPolynomial>,
    pub follower_order: usize,
    pub trajectory_order: usize,
    pub controller: ControllerKind,
    /// One per follower, or empty for none.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub disturbances: Vec<VectorPolynomial>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSpec>,
    pub gains: GainSpec,
    /// Integration step (continuous controllers only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// Final time (continuous) or number of steps (discrete).
    pub horizon: f64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_every: Option<usize>,
    pub initial: Vec<InitialState>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uniform_mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub robot: Option<RobotSpec>,
    /// Monte-Carlo runs for noisy controllers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runs: Option<usize>,
}

impl Scenario {
    pub fn dim(&self) -> usize {
        self.leaders.first().map(|p| p.dim()).unwrap_or(0)
    }

    pub fn lifted_order(&self) -> usize {
        self.follower_order.max(self.trajectory_order + 1)
    }

    pub fn domain(&self) -> TimeDomain {
        self.controller.domain()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| Error::Scenario(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    /// Builds the topology, naming the first offending edge on failure.
    pub fn build_topology(&self) -> Result<DirectedTopology> {
        let t = &self.topology;
        let n = t.leaders + t.followers;
        if t.leaders == 0 || t.followers == 0 {
            return Err(Error::Scenario("topology needs at least one leader and one follower".into()));
        }
        let mut adj = DMatrix::zeros(n, n);
        for (e, &(from, to, w)) in t.edges.iter().enumerate() {
            let what = format!("topology.edges[{e}] = [{from}, {to}, {w}]");
            if from == 0 || from > n || to == 0 || to > n {
                return Err(Error::Scenario(format!("{what}: agent index outside 1..={n}")));
            }
            if to <= t.leaders {
                return Err(Error::Scenario(format!("{what}: leader {to} cannot receive edges")));
            }
            if from == to {
                return Err(Error::Scenario(format!("{what}: self-loop")));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::Scenario(format!("{what}: weight must be positive and finite")));
            }
            if adj[(to - 1, from - 1)] != 0.0 {
                return Err(Error::Scenario(format!("{what}: duplicate edge")));
            }
            adj[(to - 1, from - 1)] = w;
        }
        DirectedTopology::new(t.leaders, t.followers, adj)
    }

    pub fn build_noise(&self) -> Result<Option<NoiseModel>> {
        let Some(spec) = &self.noise else {
            return Ok(None);
        };
        let n = self.topology.leaders + self.topology.followers;
        let mut over = BTreeMap::new();
        for (e, (from, to, rho)) in spec.edges.iter().enumerate() {
            if *from == 0 || *from > n || *to == 0 || *to > n {
                return Err(Error::Scenario(format!(
                    "noise.edges[{e}] = [{from}, {to}, ..]: agent index outside 1..={n}"
                )));
            }
            over.insert((from - 1, to - 1), DVector::from_vec(rho.clone()));
        }
        Ok(Some(NoiseModel::new(DVector::from_vec(spec.uniform.clone()), over, self.seed)?))
    }

    pub fn follower_inits(&self) -> Vec<FollowerInit> {
        self.initial
            .iter()
            .map(|s| FollowerInit {
                chain: s.chain.iter().map(|v| DVector::from_vec(v.clone())).collect(),
                estimator_error: s.estimator_error.iter().map(|v| DVector::from_vec(v.clone())).collect(),
            })
            .collect()
    }

    /// Structural checks; A1 is enforced unless `allow_unreachable`, in which
    /// case a violation is returned as a warning.
    pub fn validate_with(&self, allow_unreachable: bool) -> Result<Vec<String>> {
        let mut warnings = Vec::new();
        if self.schema_version != SCENARIO_SCHEMA_VERSION {
            return Err(Error::Scenario(format!(
                "schema_version {} unsupported (expected {SCENARIO_SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let topo = self.build_topology()?;
        if self.leaders.len() != self.topology.leaders {
            return Err(Error::Scenario(format!(
                "{} leader trajectories for {} leaders",
                self.leaders.len(),
                self.topology.leaders
            )));
        }
        let p = self.dim();
        if self.leaders.iter().any(|l| l.dim() != p) {
            return Err(Error::Scenario("leader trajectories differ in dimension".into()));
        }
        for (i, l) in self.leaders.iter().enumerate() {
            if l.effective_degree().unwrap_or(0) > self.trajectory_order {
                return Err(Error::Scenario(format!(
                    "leaders[{i}] has degree above trajectory_order {}",
                    self.trajectory_order
                )));
            }
        }
        if self.follower_order == 0 {
            return Err(Error::Scenario("follower_order must be at least 1".into()));
        }
        if self.controller.single_integrator() && self.follower_order != 1 {
            return Err(Error::Scenario(format!(
                "controller {} needs follower_order 1",
                self.controller.name()
            )));
        }
        if let GainSpec::Explicit(k) = &self.gains {
            if k.len() != self.lifted_order() {
                return Err(Error::Scenario(format!(
                    "explicit gains have length {}, expected l_m = max(m, n+1) = {}",
                    k.len(),
                    self.lifted_order()
                )));
            }
        }
        if !self.disturbances.is_empty()
            && (self.disturbances.len() != self.topology.followers || self.disturbances.iter().any(|d| d.dim() != p))
        {
            return Err(Error::Scenario(format!(
                "disturbances: need {} polynomials of dimension {p}",
                self.topology.followers
            )));
        }
        if self.initial.len() != self.topology.followers {
            return Err(Error::Scenario(format!(
                "initial: {} entries for {} followers",
                self.initial.len(),
                self.topology.followers
            )));
        }
        for (i, s) in self.initial.iter().enumerate() {
            if s.chain.len() > self.follower_order || s.chain.iter().any(|v| v.len() != p) {
                return Err(Error::Scenario(format!(
                    "initial[{i}].chain: at most {} vectors of dimension {p}",
                    self.follower_order
                )));
            }
            if !s.estimator_error.is_empty() && !self.controller.uses_estimator() {
                return Err(Error::Scenario(format!(
                    "initial[{i}].estimator_error given for controller {}",
                    self.controller.name()
                )));
            }
        }
        match self.controller.domain() {
            TimeDomain::Continuous => {
                let dt = self.dt.unwrap_or(crate::sim_continuous::DEFAULT_DT);
                if !(dt > 0.0) {
                    return Err(Error::Scenario(format!("dt = {dt} must be positive")));
                }
            }
            TimeDomain::Discrete => {
                if self.dt.is_some() {
                    return Err(Error::Scenario("dt applies to continuous controllers only".into()));
                }
                if self.horizon.fract() != 0.0 {
                    return Err(Error::Scenario("discrete horizon must be a whole number of steps".into()));
                }
            }
        }
        if !(self.horizon > 0.0) {
            return Err(Error::Scenario(format!("horizon {} must be positive", self.horizon)));
        }
        if self.controller.noisy() != self.noise.is_some() {
            return Err(Error::Scenario(format!(
                "controller {} {} a noise model",
                self.controller.name(),
                if self.controller.noisy() { "needs" } else { "does not take" }
            )));
        }
        self.build_noise()?;
        if self.uniform_mu.is_some() && self.controller != ControllerKind::DiscretePinUniform {
            return Err(Error::Scenario("uniform_mu applies to discrete-pin-uniform only".into()));
        }
        if let Some(mu) = self.uniform_mu {
            if !(mu > 0.0 && mu < 1.0) {
                return Err(Error::Scenario(format!("uniform_mu = {mu} outside (0, 1)")));
            }
        }
        match (&self.robot, self.controller) {
            (Some(r), ControllerKind::RobotApplication) => {
                if p != 2 || r.initial_heading.len() != self.topology.followers || !(r.wheel_offset > 0.0) {
                    return Err(Error::Scenario(
                        "robot: planar agents, one heading per robot and positive wheel_offset required".into(),
                    ));
                }
            }
            (None, ControllerKind::RobotApplication) => {
                return Err(Error::Scenario("robot-application needs a robot section".into()))
            }
            (Some(_), _) => return Err(Error::Scenario("robot section given for a non-robot controller".into())),
            _ => {}
        }
        let reach = check_assumption_a1(&topo);
        if !reach.satisfied {
            let names: Vec<String> = reach.unreachable.iter().map(|i| (i + 1).to_string()).collect();
            let msg = format!("no leader reaches follower(s) {}", names.join(", "));
            if allow_unreachable {
                warnings.push(msg);
            } else {
                return Err(Error::Scenario(msg));
            }
        }
        Ok(warnings)
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_with(false).map(|_| ())
    }
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    Scenario::from_json(&std::fs::read_to_string(path)?)
}

/// Loads without enforcing A1; violations come back as warnings.
pub fn load_scenario_lenient(path: &Path) -> Result<(Scenario, Vec<String>)> {
    let s: Scenario =
        serde_json::from_str(&std::fs::read_to_string(path)?).map_err(|e| Error::Scenario(e.to_string()))?;
    let w = s.validate_with(true)?;
    Ok((s, w))
}

pub fn save_scenario(scenario: &Scenario, path: &Path) -> Result<()> {
    std::fs::write(path, scenario.to_json() + "\n")?;
    Ok(())
}
