//! Fixed-step RK4 integration of the continuous-time closed loops.

use nalgebra::{DMatrix, DVector};

use crate::closed_loop::{ClosedLoop, FollowerInit};
use crate::error::{Error, Result};
use crate::signals::TimeDomain;
use crate::trace::{ContainmentTrace, TraceSample};

pub const DEFAULT_DT: f64 = 1e-3;

#[derive(Debug, Clone, Copy)]
pub struct ContinuousConfig {
    pub dt: f64,
    pub horizon: f64,
    /// Record every this many steps (the final step is always recorded).
    pub record_every: usize,
}

impl ContinuousConfig {
    pub fn new(dt: f64, horizon: f64) -> Self {
        Self {
            dt,
            horizon,
            record_every: ((0.1 / dt).round() as usize).max(1),
        }
    }

    fn steps(&self) -> Result<usize> {
        if !(self.dt > 0.0) || !(self.horizon > 0.0) {
            return Err(Error::Parameter(format!(
                "step {} and horizon {} must be positive",
                self.dt, self.horizon
            )));
        }
        if self.record_every == 0 {
            return Err(Error::Parameter("record_every must be positive".into()));
        }
        Ok((self.horizon / self.dt).round() as usize)
    }
}

/// One classical RK4 step of `x' = f(t, x)`.
pub fn rk4_step(f: &mut dyn FnMut(f64, &[f64], &mut [f64]), t: f64, x: &mut [f64], dt: f64) {
    let n = x.len();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut tmp = vec![0.0; n];
    f(t, x, &mut k1);
    for i in 0..n {
        tmp[i] = x[i] + 0.5 * dt * k1[i];
    }
    f(t + 0.5 * dt, &tmp, &mut k2);
    for i in 0..n {
        tmp[i] = x[i] + 0.5 * dt * k2[i];
    }
    f(t + 0.5 * dt, &tmp, &mut k3);
    for i in 0..n {
        tmp[i] = x[i] + dt * k3[i];
    }
    f(t + dt, &tmp, &mut k4);
    for i in 0..n {
        x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}

fn sample(cl: &ClosedLoop, t: f64, x: &[f64]) -> TraceSample {
    TraceSample::new(t, cl.follower_positions(x), cl.leader_positions(t), cl.estimator_error_norm(x))
}

/// Integrates the agent-level loop from `x0`.
pub fn simulate(cl: &ClosedLoop, x0: Vec<f64>, cfg: &ContinuousConfig) -> Result<(ContainmentTrace, Vec<f64>)> {
    if cl.domain != TimeDomain::Continuous {
        return Err(Error::Parameter("continuous simulator given a discrete law".into()));
    }
    let steps = cfg.steps()?;
    let mut x = x0;
    let mut samples = vec![sample(cl, 0.0, &x)];
    let mut f = |t: f64, s: &[f64], out: &mut [f64]| cl.rhs(t, s, None, out, None);
    for k in 0..steps {
        let t = k as f64 * cfg.dt;
        rk4_step(&mut f, t, &mut x, cfg.dt);
        if !x.iter().all(|v| v.is_finite()) {
            return Err(Error::Parameter(format!("state diverged at t = {}", t + cfg.dt)));
        }
        if (k + 1) % cfg.record_every == 0 || k + 1 == steps {
            samples.push(sample(cl, (k + 1) as f64 * cfg.dt, &x));
        }
    }
    Ok((
        ContainmentTrace {
            domain: TimeDomain::Continuous,
            samples,
        },
        x,
    ))
}

/// Single-integrator `PI^n` law.
pub fn run_pin_single_integrator(cl: &ClosedLoop, init: &[FollowerInit], cfg: &ContinuousConfig) -> Result<ContainmentTrace> {
    if cl.order != 1 || cl.has_estimator() {
        return Err(Error::Parameter("PI^n run needs single-integrator followers without estimator".into()));
    }
    Ok(simulate(cl, cl.initial_state(init)?, cfg)?.0)
}

/// High-order followers with exact relative derivatives.
pub fn run_high_order_full_info(cl: &ClosedLoop, init: &[FollowerInit], cfg: &ContinuousConfig) -> Result<ContainmentTrace> {
    if cl.has_estimator() {
        return Err(Error::Parameter("full-information run given an estimator law".into()));
    }
    Ok(simulate(cl, cl.initial_state(init)?, cfg)?.0)
}

/// High-order followers whose differential terms come from the distributed estimator.
pub fn run_high_order_estimator(cl: &ClosedLoop, init: &[FollowerInit], cfg: &ContinuousConfig) -> Result<ContainmentTrace> {
    if !cl.has_estimator() {
        return Err(Error::Parameter("estimator run needs an estimator gain".into()));
    }
    Ok(simulate(cl, cl.initial_state(init)?, cfg)?.0)
}

#[derive(Debug, Clone)]
pub struct LiftedTrace {
    pub times: Vec<f64>,
    /// `‖Ξ̂_F‖_F` per sample.
    pub norms: Vec<f64>,
    pub positions: Vec<Vec<DVector<f64>>>,
}

impl LiftedTrace {
    /// Largest follower position gap against an agent-level trace sampled at the same times.
    pub fn max_position_gap(&self, trace: &ContainmentTrace) -> f64 {
        let mut gap: f64 = 0.0;
        for (pos, s) in self.positions.iter().zip(&trace.samples) {
            for (a, b) in pos.iter().zip(&s.followers) {
                gap = gap.max((a - b).norm());
            }
        }
        gap
    }
}

/// Integrates `Ξ̂_F' = (I⊗A − L2⊗BK)Ξ̂_F + B·D^{l_m−m}δ` directly.
pub fn run_lifted_closed_loop(cl: &ClosedLoop, init: &[FollowerInit], cfg: &ContinuousConfig) -> Result<LiftedTrace> {
    if cl.domain != TimeDomain::Continuous {
        return Err(Error::Parameter("continuous lifted run given a discrete law".into()));
    }
    let steps = cfg.steps()?;
    let x0 = cl.initial_state(init)?;
    let mat = cl.lifted_matrix();
    let xi0 = cl.lifted_state(0.0, &x0)?;
    let (rows, p) = xi0.shape();
    let mut x: Vec<f64> = xi0.as_slice().to_vec();
    let record = |t: f64, x: &[f64], out: &mut LiftedTrace| -> Result<()> {
        let m = DMatrix::from_column_slice(rows, p, x);
        out.norms.push(m.norm());
        out.positions.push(cl.positions_from_lifted(t, &m)?);
        out.times.push(t);
        Ok(())
    };
    let mut out = LiftedTrace {
        times: vec![],
        norms: vec![],
        positions: vec![],
    };
    record(0.0, &x, &mut out)?;
    let mut f = |t: f64, s: &[f64], d: &mut [f64]| {
        let sm = DMatrix::from_column_slice(rows, p, s);
        let v = &mat * sm + cl.lifted_forcing(t);
        d.copy_from_slice(v.as_slice());
    };
    for k in 0..steps {
        rk4_step(&mut f, k as f64 * cfg.dt, &mut x, cfg.dt);
        if (k + 1) % cfg.record_every == 0 || k + 1 == steps {
            record((k + 1) as f64 * cfg.dt, &x, &mut out)?;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_loop::{ClosedLoopSpec, Weighting};
    use crate::signals::VectorPolynomial;
    use crate::topology::DirectedTopology;

    #[test]
    fn rk4_exponential() {
        let mut x = vec![1.0];
        let mut f = |_: f64, s: &[f64], d: &mut [f64]| d[0] = -s[0];
        for k in 0..1000 {
            rk4_step(&mut f, k as f64 * 1e-3, &mut x, 1e-3);
        }
        assert!((x[0] - (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn scalar_pin_matches_closed_form() {
        let topo = DirectedTopology::from_edges(1, 1, &[(0, 1, 1.0)]).unwrap();
        let leader = [VectorPolynomial::zero(1)];
        let cl = ClosedLoop::new(ClosedLoopSpec {
            domain: TimeDomain::Continuous,
            topology: &topo,
            leaders: &leader,
            disturbances: &[],
            order: 1,
            trajectory_order: 0,
            gain_row: &[1.0],
            weighting: Weighting::Unit,
            estimator_gain: None,
            noise: None,
        })
        .unwrap();
        let init = [FollowerInit {
            chain: vec![DVector::from_vec(vec![3.0])],
            ..Default::default()
        }];
        let cfg = ContinuousConfig::new(1e-3, 2.0);
        let tr = run_pin_single_integrator(&cl, &init, &cfg).unwrap();
        for s in &tr.samples {
            assert!((s.followers[0][0] - 3.0 * (-s.t).exp()).abs() < 1e-6);
        }
    }
}
