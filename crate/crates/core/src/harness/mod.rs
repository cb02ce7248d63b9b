//! Scenario-driven runs: gain synthesis, dispatch to the simulators, reports.

pub mod builtin;
pub mod scenario;

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::closed_loop::{ClosedLoop, ClosedLoopSpec, Weighting};
use crate::error::{Error, Result};
use crate::signals::TimeDomain;
use crate::sim_continuous::{self, ContinuousConfig, DEFAULT_DT};
use crate::sim_discrete::{self, DiscreteConfig, MonteCarloReport};
use crate::synthesis::{self, CompanionPlant, EstimatorGainSynthesis, GainSynthesis, StabilityMargin};
use crate::topology::{build_laplacian, certify_spectrum, SpectralCertificate};
use crate::trace::{ContainmentTrace, DecayFit};

pub use builtin::{builtin, builtin_names};
pub use scenario::{load_scenario, save_scenario, ControllerKind, GainSpec, Scenario};

pub const REPORT_SCHEMA_VERSION: u32 = 1;
/// Required `E_r(T_end)/E_r(0)`.
pub const CONTAINMENT_RATIO: f64 = 1e-2;
/// Agent-level vs lifted agreement (continuous, absolute).
pub const LIFTED_TOL_CONTINUOUS: f64 = 1e-5;
/// Agent-level vs lifted agreement (discrete, relative to the state scale).
pub const LIFTED_TOL_DISCRETE: f64 = 1e-10;
/// Robot runs: mean hull distance over the last steps vs the initial one.
pub const ROBOT_RATIO: f64 = 0.05;
pub const ROBOT_TAIL_STEPS: usize = 20;

#[derive(Debug, Clone, Serialize)]
pub struct TopologyAudit {
    pub lambda_min_real: f64,
    pub max_normalized_deviation: f64,
    pub gershgorin_margin: f64,
    pub min_convex_weight: f64,
    pub max_row_sum_error: f64,
}

impl From<&SpectralCertificate> for TopologyAudit {
    fn from(c: &SpectralCertificate) -> Self {
        Self {
            lambda_min_real: c.spectrum.lambda_min_real,
            max_normalized_deviation: c.spectrum.max_normalized_deviation(),
            gershgorin_margin: c.spectrum.gershgorin_margin,
            min_convex_weight: c.min_weight,
            max_row_sum_error: c.max_row_sum_error,
        }
    }
}

/// Gains actually used by a run, with their provenance.
#[derive(Debug, Clone, Serialize)]
pub struct SynthesisAudit {
    pub domain: TimeDomain,
    pub controller: ControllerKind,
    /// Row gain `(κ_{l_m−1}, …, κ_0)` used by the run.
    pub gains: Vec<f64>,
    pub gains_source: &'static str,
    /// Riccati solution behind the synthesized gain (also computed when explicit gains are given).
    pub synthesized: GainSynthesis,
    pub uniform_mu: Option<f64>,
    pub estimator: Option<EstimatorGainSynthesis>,
    pub topology: TopologyAudit,
    pub margin: StabilityMargin,
    pub estimator_margin: Option<StabilityMargin>,
}

impl SynthesisAudit {
    pub fn certified(&self) -> bool {
        self.margin.certified() && self.estimator_margin.map(|m| m.certified()).unwrap_or(true)
    }
}

/// Synthesis and certification for a scenario.
pub fn synthesize(s: &Scenario) -> Result<SynthesisAudit> {
    s.validate()?;
    let topo = s.build_topology()?;
    let blocks = build_laplacian(&topo);
    let cert = certify_spectrum(&blocks)?;
    let lm = s.lifted_order();
    let domain = s.domain();
    let plant = CompanionPlant::new(lm, domain)?;
    let mut mu = None;
    let (synth, est_eps) = match (domain, s.controller) {
        (TimeDomain::Continuous, _) => {
            let g = synthesis::synthesize_continuous(lm, &cert.spectrum)?;
            let e = g.epsilon;
            (g, e)
        }
        (TimeDomain::Discrete, ControllerKind::DiscretePinUniform) => {
            let (m_opt, dev_opt) = synthesis::uniform_weight(&cert.spectrum.eigenvalues)?;
            let m = s.uniform_mu.unwrap_or(m_opt);
            let dev = if s.uniform_mu.is_some() {
                cert.spectrum.eigenvalues.iter().map(|l| (nalgebra::Complex::new(1.0, 0.0) - l * m).norm()).fold(0.0, f64::max)
            } else {
                dev_opt
            };
            mu = Some(m);
            let g = synthesis::synthesize_discrete(lm, dev)?;
            let e = g.epsilon;
            (g, e)
        }
        (TimeDomain::Discrete, _) => {
            let g = synthesis::synthesize_discrete(lm, cert.spectrum.max_normalized_deviation())?;
            let e = g.epsilon;
            (g, e)
        }
    };
    let (gains, gains_source) = match &s.gains {
        GainSpec::Synthesized => (synth.k.clone(), "synthesized"),
        GainSpec::Explicit(k) => (k.clone(), "explicit"),
    };
    let margin = synthesis::verify_closed_loop(&blocks, &plant, &gains, mu)?;
    let (estimator, estimator_margin) = if s.controller.uses_estimator() {
        let m = s.follower_order;
        let e = match domain {
            TimeDomain::Continuous => synthesis::estimator_gain_continuous(m, est_eps)?,
            TimeDomain::Discrete => synthesis::estimator_gain_discrete(m, est_eps)?,
        };
        let eplant = CompanionPlant::new(m, domain)?;
        let em = synthesis::verify_estimator(&blocks, &eplant, &e.k_e)?;
        (Some(e), Some(em))
    } else {
        (None, None)
    };
    let mut synthesized = synth;
    synthesized.certified = margin.certified();
    Ok(SynthesisAudit {
        domain,
        controller: s.controller,
        gains,
        gains_source,
        synthesized,
        uniform_mu: mu,
        estimator,
        topology: TopologyAudit::from(&cert),
        margin,
        estimator_margin,
    })
}

/// The agent-level closed loop described by a scenario and its audit.
pub fn closed_loop(s: &Scenario, audit: &SynthesisAudit) -> Result<ClosedLoop> {
    let topo = s.build_topology()?;
    let noise = s.build_noise()?;
    let weighting = match (s.domain(), audit.uniform_mu) {
        (TimeDomain::Continuous, _) => Weighting::Unit,
        (TimeDomain::Discrete, Some(mu)) => Weighting::Uniform(mu),
        (TimeDomain::Discrete, None) => Weighting::Normalized,
    };
    ClosedLoop::new(ClosedLoopSpec {
        domain: s.domain(),
        topology: &topo,
        leaders: &s.leaders,
        disturbances: &s.disturbances,
        order: s.follower_order,
        trajectory_order: s.trajectory_order,
        gain_row: &audit.gains,
        weighting,
        estimator_gain: audit.estimator.as_ref().map(|e| e.k_e.as_slice()),
        noise: noise.as_ref(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub scenario: String,
    pub controller: ControllerKind,
    pub seed: u64,
    pub synthesis: SynthesisAudit,
    pub samples: usize,
    pub initial_error: f64,
    pub final_error: f64,
    pub error_ratio: f64,
    pub decay: DecayFit,
    pub final_estimator_error: Option<f64>,
    pub estimator_decay: Option<DecayFit>,
    pub lifted_gap: Option<f64>,
    /// Robot runs: mean total hull distance over the last steps divided by the initial one.
    pub tail_ratio: Option<f64>,
    pub monte_carlo: Option<MonteCarloSummary>,
    pub checks: BTreeMap<String, bool>,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MonteCarloSummary {
    pub runs: usize,
    pub final_distance_of_mean: Vec<f64>,
    pub final_standard_error: Vec<f64>,
    pub final_mean_distance: Vec<f64>,
    pub max_second_moment: f64,
    pub tail_second_moment: f64,
    pub mean_condition: bool,
    pub second_moment_bounded: bool,
}

impl From<&MonteCarloReport> for MonteCarloSummary {
    fn from(r: &MonteCarloReport) -> Self {
        Self {
            runs: r.runs,
            final_distance_of_mean: r.distance_of_mean.last().cloned().unwrap_or_default(),
            final_standard_error: r.standard_error.last().cloned().unwrap_or_default(),
            final_mean_distance: r.mean_distance.last().cloned().unwrap_or_default(),
            max_second_moment: r.total_second_moment().into_iter().fold(0.0, f64::max),
            tail_second_moment: r.tail_second_moment(),
            mean_condition: r.mean_condition(),
            second_moment_bounded: r.second_moment_bounded(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: RunReport,
    pub trace: ContainmentTrace,
    pub monte_carlo: Option<MonteCarloReport>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Monte-Carlo runs for noisy controllers; `None` uses the scenario value
    /// and `Some(0)` skips the ensemble.
    pub runs: Option<usize>,
}

fn continuous_config(s: &Scenario) -> ContinuousConfig {
    let mut cfg = ContinuousConfig::new(s.dt.unwrap_or(DEFAULT_DT), s.horizon);
    if let Some(r) = s.record_every {
        cfg.record_every = r;
    }
    cfg
}

fn discrete_config(s: &Scenario) -> DiscreteConfig {
    let mut cfg = DiscreteConfig::new(s.horizon as usize);
    if let Some(r) = s.record_every {
        cfg.record_every = r;
    }
    cfg
}

/// Mean total hull distance over the final `tail` samples divided by the initial one.
pub fn tail_ratio(trace: &ContainmentTrace, tail: usize) -> f64 {
    let e = trace.errors();
    let start = e.len().saturating_sub(tail);
    let mean = e[start..].iter().sum::<f64>() / (e.len() - start) as f64;
    if mean == 0.0 {
        0.0
    } else {
        mean / e[0]
    }
}

fn max_abs_position(trace: &ContainmentTrace) -> f64 {
    trace
        .samples
        .iter()
        .flat_map(|s| s.followers.iter().map(|x| x.amax()))
        .fold(1.0, f64::max)
}

pub fn run_with(s: &Scenario, opts: RunOptions) -> Result<RunOutput> {
    let audit = synthesize(s)?;
    let cl = closed_loop(s, &audit)?;
    let init = s.follower_inits();
    let mut checks = BTreeMap::new();
    checks.insert("closed_loop_stable".to_string(), audit.margin.certified());
    if let Some(m) = audit.estimator_margin {
        checks.insert("estimator_stable".to_string(), m.certified());
    }
    let mut lifted_gap = None;
    let mut monte = None;
    let mut tail = None;
    let trace = match s.controller {
        ControllerKind::ContinuousPin | ControllerKind::ContinuousHighOrder => {
            let cfg = continuous_config(s);
            let tr = if s.controller == ControllerKind::ContinuousPin {
                sim_continuous::run_pin_single_integrator(&cl, &init, &cfg)?
            } else {
                sim_continuous::run_high_order_full_info(&cl, &init, &cfg)?
            };
            let lifted = sim_continuous::run_lifted_closed_loop(&cl, &init, &cfg)?;
            let gap = lifted.max_position_gap(&tr);
            checks.insert("lifted_agreement".into(), gap < LIFTED_TOL_CONTINUOUS);
            lifted_gap = Some(gap);
            tr
        }
        ControllerKind::ContinuousEstimator => {
            sim_continuous::run_high_order_estimator(&cl, &init, &continuous_config(s))?
        }
        ControllerKind::DiscretePin | ControllerKind::DiscretePinUniform | ControllerKind::DiscreteHighOrder => {
            let cfg = discrete_config(s);
            let tr = sim_discrete::run_discrete_high_order(&cl, &init, &cfg)?;
            let lifted = sim_discrete::run_lifted_recursion(&cl, &init, &cfg)?;
            let gap = lifted.max_position_gap(&tr);
            checks.insert(
                "lifted_agreement".into(),
                gap <= LIFTED_TOL_DISCRETE * max_abs_position(&tr),
            );
            lifted_gap = Some(gap);
            tr
        }
        ControllerKind::DiscreteEstimator => sim_discrete::run_discrete_high_order(&cl, &init, &discrete_config(s))?,
        ControllerKind::DiscreteNoisy | ControllerKind::RobotApplication => {
            let cfg = discrete_config(s);
            let robot = s.robot.clone();
            let single = |c: &ClosedLoop, i: &[crate::closed_loop::FollowerInit], g: &DiscreteConfig| match &robot {
                Some(r) => sim_discrete::run_robot_application(c, i, g, r.wheel_offset, &r.initial_heading),
                None => sim_discrete::run_discrete_pin(c, i, g),
            };
            let tr = single(&cl, &init, &cfg)?;
            let runs = opts.runs.or(s.runs).unwrap_or(0);
            if runs >= 2 {
                let rep = sim_discrete::monte_carlo(&cl, &init, &cfg, runs, s.seed, single)?;
                checks.insert("mean_condition".into(), rep.mean_condition());
                if s.controller == ControllerKind::DiscreteNoisy {
                    checks.insert("second_moment_bounded".into(), rep.second_moment_bounded());
                }
                monte = Some(rep);
            } else if runs == 1 {
                return Err(Error::Parameter("Monte-Carlo statistics need at least 2 runs".into()));
            }
            if s.controller == ControllerKind::RobotApplication {
                let r = tail_ratio(&tr, ROBOT_TAIL_STEPS);
                checks.insert("robot_containment".into(), r < ROBOT_RATIO);
                tail = Some(r);
            }
            tr
        }
    };
    let decay = trace.decay_fit();
    let ratio = trace.error_ratio();
    if !s.controller.noisy() {
        checks.insert("containment".into(), ratio < CONTAINMENT_RATIO);
        checks.insert("decay".into(), decay.decaying());
    }
    let (final_est, est_decay) = if cl.has_estimator() {
        let fit = trace.estimator_decay_fit();
        checks.insert("estimator_decay".into(), fit.decaying());
        (trace.samples.last().map(|x| x.estimator_error), Some(fit))
    } else {
        (None, None)
    };
    let passed = checks.values().all(|&v| v);
    let report = RunReport {
        schema_version: REPORT_SCHEMA_VERSION,
        scenario: s.name.clone(),
        controller: s.controller,
        seed: s.seed,
        synthesis: audit,
        samples: trace.samples.len(),
        initial_error: trace.initial_error(),
        final_error: trace.final_error(),
        error_ratio: ratio,
        decay,
        final_estimator_error: final_est,
        estimator_decay: est_decay,
        lifted_gap,
        tail_ratio: tail,
        monte_carlo: monte.as_ref().map(MonteCarloSummary::from),
        checks,
        passed,
    };
    Ok(RunOutput {
        report,
        trace,
        monte_carlo: monte,
    })
}

pub fn run(s: &Scenario) -> Result<RunOutput> {
    run_with(s, RunOptions::default())
}

/// Field overrides applied to a base scenario by [`sweep`].
#[derive(Debug, Clone, Default)]
pub struct Override {
    pub seed: Option<u64>,
    pub dt: Option<f64>,
    pub horizon: Option<f64>,
    pub gains: Option<GainSpec>,
}

impl Override {
    pub fn apply(&self, base: &Scenario) -> Scenario {
        let mut s = base.clone();
        if let Some(seed) = self.seed {
            s.seed = seed;
        }
        if self.dt.is_some() {
            s.dt = self.dt;
        }
        if let Some(h) = self.horizon {
            s.horizon = h;
        }
        if let Some(g) = &self.gains {
            s.gains = g.clone();
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub reports: Vec<RunReport>,
    /// Ensemble statistics across the sweep (noisy controllers only).
    pub monte_carlo: Option<MonteCarloReport>,
}

/// Runs every override in parallel (results in override order). Noisy
/// scenarios additionally get a `runs`-member Monte-Carlo ensemble.
pub fn sweep(base: &Scenario, overrides: &[Override], runs: usize) -> Result<SweepOutput> {
    let reports = overrides
        .par_iter()
        .map(|o| run_with(&o.apply(base), RunOptions { runs: Some(0) }).map(|r| r.report))
        .collect::<Result<Vec<_>>>()?;
    let monte_carlo = if base.controller.noisy() && runs >= 2 {
        run_with(base, RunOptions { runs: Some(runs) })?.monte_carlo
    } else {
        None
    };
    Ok(SweepOutput { reports, monte_carlo })
}

/// Writes `<name>.trace.csv`, `<name>.report.json` and, if present, `<name>.montecarlo.json`.
pub fn write_outputs(out: &RunOutput, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let name = &out.report.scenario;
    let mut f = std::io::BufWriter::new(std::fs::File::create(dir.join(format!("{name}.trace.csv")))?);
    out.trace.write_csv(&mut f)?;
    std::fs::write(
        dir.join(format!("{name}.report.json")),
        serde_json::to_string_pretty(&out.report)? + "\n",
    )?;
    if let Some(mc) = &out.monte_carlo {
        std::fs::write(dir.join(format!("{name}.montecarlo.json")), serde_json::to_string_pretty(mc)? + "\n")?;
    }
    Ok(())
}
