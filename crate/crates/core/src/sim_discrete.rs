//! Exact recursions of the discrete-time closed loops, the noisy Monte-Carlo
//! driver and the differential-drive robot pipeline.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

use crate::closed_loop::{ClosedLoop, FollowerInit};
use crate::error::{Error, Result};
use crate::geometry::hull_distance;
use crate::signals::TimeDomain;
use crate::sim_continuous::LiftedTrace;
use crate::trace::{ContainmentTrace, TraceSample};

#[derive(Debug, Clone, Copy)]
pub struct DiscreteConfig {
    /// Number of steps; samples `k = 0..=horizon`.
    pub horizon: usize,
    pub record_every: usize,
}

impl DiscreteConfig {
    pub fn new(horizon: usize) -> Self {
        Self {
            horizon,
            record_every: 1,
        }
    }

    fn check(&self) -> Result<()> {
        if self.horizon == 0 || self.record_every == 0 {
            return Err(Error::Parameter("horizon and record_every must be positive".into()));
        }
        Ok(())
    }
}

fn check_discrete(cl: &ClosedLoop) -> Result<()> {
    if cl.domain != TimeDomain::Discrete {
        return Err(Error::Parameter("discrete simulator given a continuous law".into()));
    }
    Ok(())
}

/// Differential-drive pose; `center` is the feedback-linearised point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotPose {
    pub center: [f64; 2],
    /// Wrapped to `(−π, π]`.
    pub heading: f64,
    pub wheel_offset: f64,
}

pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::PI;
    let mut w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    w
}

/// `(v, ω)` realising the point velocity `u`.
pub fn recover_wheel_commands(u: [f64; 2], pose: &RobotPose) -> (f64, f64) {
    let (s, c) = pose.heading.sin_cos();
    let v = c * u[0] + s * u[1];
    let w = (-s * u[0] + c * u[1]) / pose.wheel_offset;
    (v, w)
}

/// Point velocity produced by `(v, ω)`; inverse of [`recover_wheel_commands`].
pub fn point_velocity(v: f64, w: f64, pose: &RobotPose) -> [f64; 2] {
    let (s, c) = pose.heading.sin_cos();
    let d = pose.wheel_offset;
    [v * c - d * w * s, v * s + d * w * c]
}

struct RobotState {
    headings: Vec<f64>,
    wheel_offset: f64,
}

fn simulate(
    cl: &ClosedLoop,
    x0: Vec<f64>,
    cfg: &DiscreteConfig,
    mut robot: Option<RobotState>,
) -> Result<(ContainmentTrace, Vec<f64>)> {
    check_discrete(cl)?;
    cfg.check()?;
    if robot.is_some() && cl.dim != 2 {
        return Err(Error::Parameter("robot pipeline needs planar agents".into()));
    }
    let n = x0.len();
    let nn = cl.num_followers();
    let mut x = x0;
    let mut dx = vec![0.0; n];
    let mut u = vec![0.0; nn * cl.dim];
    let mut samples = Vec::with_capacity(cfg.horizon / cfg.record_every + 2);
    for k in 0..=cfg.horizon {
        let t = k as f64;
        // inputs at k are needed both for the update and for wheel commands
        cl.rhs(t, &x, Some(k as u64), &mut dx, Some(&mut u));
        if k % cfg.record_every == 0 || k == cfg.horizon {
            let mut s = TraceSample::new(t, cl.follower_positions(&x), cl.leader_positions(t), cl.estimator_error_norm(&x));
            if let Some(r) = &robot {
                s.commands = Some(
                    (0..nn)
                        .map(|i| {
                            let pose = RobotPose {
                                center: [s.followers[i][0], s.followers[i][1]],
                                heading: r.headings[i],
                                wheel_offset: r.wheel_offset,
                            };
                            recover_wheel_commands([u[2 * i], u[2 * i + 1]], &pose)
                        })
                        .collect(),
                );
            }
            samples.push(s);
        }
        if k == cfg.horizon {
            break;
        }
        if let Some(r) = robot.as_mut() {
            for i in 0..nn {
                let pose = RobotPose {
                    center: [0.0, 0.0],
                    heading: r.headings[i],
                    wheel_offset: r.wheel_offset,
                };
                let (_, w) = recover_wheel_commands([u[2 * i], u[2 * i + 1]], &pose);
                r.headings[i] = wrap_angle(r.headings[i] + w);
            }
        }
        for (xi, d) in x.iter_mut().zip(&dx) {
            *xi += d;
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::Parameter(format!("state diverged at k = {}", k + 1)));
        }
    }
    Ok((
        ContainmentTrace {
            domain: TimeDomain::Discrete,
            samples,
        },
        x,
    ))
}

/// Single-integrator `PI^n` recursion (normalised or uniform weights, optional noise).
pub fn run_discrete_pin(cl: &ClosedLoop, init: &[FollowerInit], cfg: &DiscreteConfig) -> Result<ContainmentTrace> {
    if cl.order != 1 || cl.has_estimator() {
        return Err(Error::Parameter("PI^n run needs single-integrator followers without estimator".into()));
    }
    Ok(simulate(cl, cl.initial_state(init)?, cfg, None)?.0)
}

/// High-order recursion; the estimator variant is selected by the law.
pub fn run_discrete_high_order(cl: &ClosedLoop, init: &[FollowerInit], cfg: &DiscreteConfig) -> Result<ContainmentTrace> {
    Ok(simulate(cl, cl.initial_state(init)?, cfg, None)?.0)
}

/// Robot pipeline: linearised points follow the law, headings follow the
/// recovered angular velocity under zero-order hold.
pub fn run_robot_application(
    cl: &ClosedLoop,
    init: &[FollowerInit],
    cfg: &DiscreteConfig,
    wheel_offset: f64,
    headings: &[f64],
) -> Result<ContainmentTrace> {
    if !(wheel_offset > 0.0) {
        return Err(Error::Parameter(format!("wheel offset d = {wheel_offset} must be positive")));
    }
    if headings.len() != cl.num_followers() {
        return Err(Error::Parameter("one initial heading per robot required".into()));
    }
    let robot = RobotState {
        headings: headings.iter().map(|&h| wrap_angle(h)).collect(),
        wheel_offset,
    };
    Ok(simulate(cl, cl.initial_state(init)?, cfg, Some(robot))?.0)
}

/// Kronecker recursion `Ξ̂[k+1] = (I⊗Â − L̂2⊗BK)Ξ̂[k] + B·Δ^{l_m−m}δ[k]`.
pub fn run_lifted_recursion(cl: &ClosedLoop, init: &[FollowerInit], cfg: &DiscreteConfig) -> Result<LiftedTrace> {
    check_discrete(cl)?;
    cfg.check()?;
    let x0 = cl.initial_state(init)?;
    let mat = cl.lifted_matrix();
    let mut xi = cl.lifted_state(0.0, &x0)?;
    let mut out = LiftedTrace {
        times: vec![],
        norms: vec![],
        positions: vec![],
    };
    for k in 0..=cfg.horizon {
        let t = k as f64;
        if k % cfg.record_every == 0 || k == cfg.horizon {
            out.times.push(t);
            out.norms.push(xi.norm());
            out.positions.push(cl.positions_from_lifted(t, &xi)?);
        }
        xi = &mat * &xi + cl.lifted_forcing(t);
    }
    Ok(out)
}

/// Ensemble statistics of a noisy discrete run; indices are `[sample][follower]`.
#[derive(Debug, Clone, Serialize)]
pub struct MonteCarloReport {
    pub schema_version: u32,
    pub runs: usize,
    pub seed: u64,
    pub times: Vec<f64>,
    /// `E dist(x_i, co_L)`.
    pub mean_distance: Vec<Vec<f64>>,
    /// `E dist(x_i, co_L)²`.
    pub second_moment: Vec<Vec<f64>>,
    /// `dist(E x_i, co_L)`.
    pub distance_of_mean: Vec<Vec<f64>>,
    /// `sqrt(tr Cov x_i / R)`.
    pub standard_error: Vec<Vec<f64>>,
}

impl MonteCarloReport {
    /// `dist(E x_i, co_L) ≤ 3·SE` for every follower at the horizon.
    pub fn mean_condition(&self) -> bool {
        let (Some(d), Some(se)) = (self.distance_of_mean.last(), self.standard_error.last()) else {
            return false;
        };
        d.iter().zip(se).all(|(d, s)| *d <= 3.0 * s)
    }

    /// `Σ_i E dist²` per sample.
    pub fn total_second_moment(&self) -> Vec<f64> {
        self.second_moment.iter().map(|r| r.iter().sum()).collect()
    }

    /// Mean of the total second moment over the last quarter of the samples.
    pub fn tail_second_moment(&self) -> f64 {
        let m = self.total_second_moment();
        let start = m.len() - (m.len() / 4).max(1);
        m[start..].iter().sum::<f64>() / (m.len() - start) as f64
    }

    /// `max_k Σ_i E dist² < 10 ×` its tail mean.
    pub fn second_moment_bounded(&self) -> bool {
        let max = self.total_second_moment().into_iter().fold(0.0, f64::max);
        let tail = self.tail_second_moment();
        max == 0.0 || max < 10.0 * tail
    }
}

/// `runs` independent noisy runs (one noise stream per run), in parallel.
pub fn run_discrete_pin_noisy(
    cl: &ClosedLoop,
    init: &[FollowerInit],
    cfg: &DiscreteConfig,
    runs: usize,
) -> Result<MonteCarloReport> {
    let noise = cl
        .noise
        .as_ref()
        .ok_or_else(|| Error::Parameter("noisy run needs a noise model".into()))?;
    if runs < 2 {
        return Err(Error::Parameter(format!("need at least 2 runs for statistics, got {runs}")));
    }
    monte_carlo(cl, init, cfg, runs, noise.seed(), |cl, init, cfg| run_discrete_pin(cl, init, cfg))
}

/// Monte-Carlo driver shared by the noisy single-integrator and robot runs.
pub fn monte_carlo(
    cl: &ClosedLoop,
    init: &[FollowerInit],
    cfg: &DiscreteConfig,
    runs: usize,
    seed: u64,
    run: impl Fn(&ClosedLoop, &[FollowerInit], &DiscreteConfig) -> Result<ContainmentTrace> + Sync,
) -> Result<MonteCarloReport> {
    let noise = cl.noise.clone();
    let traces: Vec<ContainmentTrace> = (0..runs)
        .into_par_iter()
        .map(|r| {
            let mut c = cl.clone();
            c.noise = noise.as_ref().map(|n| n.with_stream(r as u64));
            run(&c, init, cfg)
        })
        .collect::<Result<_>>()?;
    let first = &traces[0];
    let ns = first.samples.len();
    let nn = cl.num_followers();
    let rn = runs as f64;
    let mut rep = MonteCarloReport {
        schema_version: 1,
        runs,
        seed,
        times: first.times(),
        mean_distance: vec![vec![0.0; nn]; ns],
        second_moment: vec![vec![0.0; nn]; ns],
        distance_of_mean: vec![vec![0.0; nn]; ns],
        standard_error: vec![vec![0.0; nn]; ns],
    };
    for k in 0..ns {
        let leaders = &first.samples[k].leaders;
        for i in 0..nn {
            let mut mean = DVector::zeros(cl.dim);
            for tr in &traces {
                let s = &tr.samples[k];
                rep.mean_distance[k][i] += s.hull_distances[i] / rn;
                rep.second_moment[k][i] += s.hull_distances[i].powi(2) / rn;
                mean += &s.followers[i] / rn;
            }
            let var: f64 = traces
                .iter()
                .map(|tr| (&tr.samples[k].followers[i] - &mean).norm_squared())
                .sum::<f64>()
                / (rn - 1.0);
            rep.standard_error[k][i] = (var / rn).sqrt();
            rep.distance_of_mean[k][i] = hull_distance(&mean, leaders).distance;
        }
    }
    Ok(rep)
}

/// `max ‖x_F − x̂_F‖` between an agent-level trace and the lifted recursion.
pub fn lifted_gap(trace: &ContainmentTrace, lifted: &LiftedTrace) -> f64 {
    lifted.max_position_gap(trace)
}

/// Spectral radius of the lifted recursion matrix.
pub fn lifted_spectral_radius(cl: &ClosedLoop) -> Result<f64> {
    crate::linalg::spectral_radius(&cl.lifted_matrix())
}
