//! Agent-level containment law shared by both time domains.
//!
//! The follower state is stored flat. Per follower: the chain
//! `x, Dx, …, D^{m−1}x`, then the accumulators `w_1 … w_{l_m−m}`
//! (`Dw_1 = s`, `Dw_{a+1} = w_a`), then the optional estimator chain `z`,
//! each entry a `p`-vector. [`ClosedLoop::rhs`] returns `D` of the state, so
//! continuous runs integrate it and discrete runs add it once per step.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::signals::{NoiseModel, TimeDomain, VectorPolynomial};
use crate::synthesis::{lifted_matrix, CompanionPlant};
use crate::topology::{build_laplacian, check_assumption_a1, DirectedTopology, LaplacianBlocks};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Weighting {
    /// Continuous laws: no row scaling.
    Unit,
    /// `1/(1+d_i)` per follower.
    Normalized,
    /// A single constant `μ ∈ (0,1)`.
    Uniform(f64),
}

/// Initial data of one follower. Missing chain entries are zero.
#[derive(Debug, Clone, Default)]
pub struct FollowerInit {
    pub chain: Vec<DVector<f64>>,
    /// `ẑ(0) = z(0) − chain(0)`; zero when absent.
    pub estimator_error: Vec<DVector<f64>>,
}

#[derive(Debug, Clone)]
pub struct ClosedLoop {
    pub domain: TimeDomain,
    pub dim: usize,
    pub order: usize,
    pub trajectory_order: usize,
    /// `l_m = max{m, n+1}`.
    pub lifted_order: usize,
    pub topology: DirectedTopology,
    pub blocks: LaplacianBlocks,
    /// Law-order gains `κ_0 … κ_{l_m−1}`.
    pub kappa: Vec<f64>,
    pub weighting: Weighting,
    pub estimator_gain: Option<Vec<f64>>,
    pub noise: Option<NoiseModel>,
    scale: Vec<f64>,
    neighbors: Vec<Vec<(usize, f64)>>,
    /// Per leader, `D^q` of its trajectory for `q = 0..=l_m`.
    leader_ops: Vec<Vec<VectorPolynomial>>,
    /// Per follower, `D^q δ_i` for `q = 0..=l_m−m`.
    disturbance_ops: Vec<Vec<VectorPolynomial>>,
}

fn eval_flat(p: &VectorPolynomial, t: f64, out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    for c in p.coeffs().iter().rev() {
        for (o, ci) in out.iter_mut().zip(c.iter()) {
            *o = *o * t + ci;
        }
    }
}

pub struct ClosedLoopSpec<'a> {
    pub domain: TimeDomain,
    pub topology: &'a DirectedTopology,
    pub leaders: &'a [VectorPolynomial],
    pub disturbances: &'a [VectorPolynomial],
    pub order: usize,
    pub trajectory_order: usize,
    /// Row gain `(κ_{l_m−1}, …, κ_0)`.
    pub gain_row: &'a [f64],
    pub weighting: Weighting,
    pub estimator_gain: Option<&'a [f64]>,
    pub noise: Option<&'a NoiseModel>,
}

impl ClosedLoop {
    pub fn new(spec: ClosedLoopSpec<'_>) -> Result<Self> {
        let t = spec.topology;
        let (mm, nn) = (t.num_leaders(), t.num_followers());
        let m = spec.order;
        if m == 0 {
            return Err(Error::Parameter("follower order must be at least 1".into()));
        }
        let lm = m.max(spec.trajectory_order + 1);
        if spec.gain_row.len() != lm {
            return Err(Error::Parameter(format!(
                "gain vector has length {}, expected l_m = max(m, n+1) = {lm}",
                spec.gain_row.len()
            )));
        }
        if spec.leaders.len() != mm {
            return Err(Error::Parameter(format!(
                "{} leader trajectories for {mm} leaders",
                spec.leaders.len()
            )));
        }
        let dim = spec.leaders.first().map(|p| p.dim()).unwrap_or(1);
        if spec.leaders.iter().any(|p| p.dim() != dim) {
            return Err(Error::Parameter("leader trajectories differ in dimension".into()));
        }
        for (i, p) in spec.leaders.iter().enumerate() {
            if p.effective_degree().unwrap_or(0) > spec.trajectory_order {
                return Err(Error::Parameter(format!(
                    "leader {} has degree {} above the trajectory order {}",
                    i + 1,
                    p.degree(),
                    spec.trajectory_order
                )));
            }
        }
        let disturbances: Vec<VectorPolynomial> = if spec.disturbances.is_empty() {
            vec![VectorPolynomial::zero(dim); nn]
        } else if spec.disturbances.len() == nn && spec.disturbances.iter().all(|d| d.dim() == dim) {
            spec.disturbances.to_vec()
        } else {
            return Err(Error::Parameter(format!(
                "need {nn} disturbance polynomials of dimension {dim}"
            )));
        };
        let reach = check_assumption_a1(t);
        if !reach.satisfied {
            return Err(Error::Unreachable {
                unreachable: reach.unreachable,
            });
        }
        let blocks = build_laplacian(t);
        let scale = match spec.weighting {
            Weighting::Unit => vec![1.0; nn],
            Weighting::Normalized => blocks.follower_degrees().iter().map(|d| 1.0 / (1.0 + d)).collect(),
            Weighting::Uniform(mu) => {
                if !(mu > 0.0 && mu < 1.0) {
                    return Err(Error::Parameter(format!("uniform weight μ = {mu} outside (0, 1)")));
                }
                vec![mu; nn]
            }
        };
        if spec.domain == TimeDomain::Continuous && spec.weighting != Weighting::Unit {
            return Err(Error::Parameter("continuous laws use unit weighting".into()));
        }
        if spec.domain == TimeDomain::Discrete && spec.weighting == Weighting::Unit {
            return Err(Error::Parameter("discrete laws need normalized or uniform weighting".into()));
        }
        if let Some(ke) = spec.estimator_gain {
            if ke.len() != m {
                return Err(Error::Parameter(format!(
                    "estimator gain has length {}, expected m = {m}",
                    ke.len()
                )));
            }
        }
        if let Some(nz) = spec.noise {
            if nz.dim() != dim {
                return Err(Error::Parameter("noise dimension differs from agent dimension".into()));
            }
        }
        let neighbors = (mm..mm + nn).map(|i| t.in_neighbors(i).collect()).collect();
        let leader_ops = spec
            .leaders
            .iter()
            .map(|p| p.operator_chain(spec.domain, lm + 1))
            .collect();
        let disturbance_ops = disturbances
            .iter()
            .map(|p| p.operator_chain(spec.domain, lm - m + 1))
            .collect();
        Ok(Self {
            domain: spec.domain,
            dim,
            order: m,
            trajectory_order: spec.trajectory_order,
            lifted_order: lm,
            topology: t.clone(),
            blocks,
            kappa: spec.gain_row.iter().rev().copied().collect(),
            weighting: spec.weighting,
            estimator_gain: spec.estimator_gain.map(|k| k.to_vec()),
            noise: spec.noise.cloned(),
            scale,
            neighbors,
            leader_ops,
            disturbance_ops,
        })
    }

    pub fn num_leaders(&self) -> usize {
        self.topology.num_leaders()
    }

    pub fn num_followers(&self) -> usize {
        self.topology.num_followers()
    }

    pub fn num_accumulators(&self) -> usize {
        self.lifted_order - self.order
    }

    pub fn has_estimator(&self) -> bool {
        self.estimator_gain.is_some()
    }

    fn block(&self) -> usize {
        let est = if self.has_estimator() { self.order } else { 0 };
        (self.order + self.num_accumulators() + est) * self.dim
    }

    pub fn state_len(&self) -> usize {
        self.block() * self.num_followers()
    }

    fn chain_off(&self, i: usize, q: usize) -> usize {
        i * self.block() + q * self.dim
    }

    fn acc_off(&self, i: usize, a: usize) -> usize {
        i * self.block() + (self.order + a - 1) * self.dim
    }

    fn est_off(&self, i: usize, q: usize) -> usize {
        i * self.block() + (self.order + self.num_accumulators() + q) * self.dim
    }

    /// Row-scaling factor of follower `i` (zero-based among followers).
    pub fn scale(&self, i: usize) -> f64 {
        self.scale[i]
    }

    pub fn initial_state(&self, init: &[FollowerInit]) -> Result<Vec<f64>> {
        let nn = self.num_followers();
        if !init.is_empty() && init.len() != nn {
            return Err(Error::Parameter(format!(
                "{} follower initial states for {nn} followers",
                init.len()
            )));
        }
        let p = self.dim;
        let mut x = vec![0.0; self.state_len()];
        for (i, f) in init.iter().enumerate() {
            if f.chain.len() > self.order || f.chain.iter().any(|c| c.len() != p) {
                return Err(Error::Parameter(format!(
                    "follower {}: initial chain must hold at most {} vectors of dimension {p}",
                    i + 1,
                    self.order
                )));
            }
            for (q, c) in f.chain.iter().enumerate() {
                let o = self.chain_off(i, q);
                x[o..o + p].copy_from_slice(c.as_slice());
            }
            if !f.estimator_error.is_empty() {
                if !self.has_estimator() {
                    return Err(Error::Parameter("estimator error given without an estimator".into()));
                }
                if f.estimator_error.len() > self.order || f.estimator_error.iter().any(|c| c.len() != p) {
                    return Err(Error::Parameter(format!(
                        "follower {}: estimator error must hold at most {} vectors of dimension {p}",
                        i + 1,
                        self.order
                    )));
                }
            }
        }
        if self.has_estimator() {
            for i in 0..nn {
                for q in 0..self.order {
                    let (c, z) = (self.chain_off(i, q), self.est_off(i, q));
                    for s in 0..p {
                        let err = init
                            .get(i)
                            .and_then(|f| f.estimator_error.get(q))
                            .map(|e| e[s])
                            .unwrap_or(0.0);
                        x[z + s] = x[c + s] + err;
                    }
                }
            }
        }
        Ok(x)
    }

    /// `D^q x_j(t)` for leader `j`, `q ≤ l_m`.
    pub fn leader_op(&self, j: usize, q: usize, t: f64, out: &mut [f64]) {
        eval_flat(&self.leader_ops[j][q], t, out);
    }

    pub fn leader_positions(&self, t: f64) -> Vec<DVector<f64>> {
        (0..self.num_leaders())
            .map(|j| {
                let mut v = DVector::zeros(self.dim);
                self.leader_op(j, 0, t, v.as_mut_slice());
                v
            })
            .collect()
    }

    pub fn follower_positions(&self, state: &[f64]) -> Vec<DVector<f64>> {
        (0..self.num_followers())
            .map(|i| {
                let o = self.chain_off(i, 0);
                DVector::from_column_slice(&state[o..o + self.dim])
            })
            .collect()
    }

    /// `‖Ẑ‖` over all followers. Zero without an estimator.
    pub fn estimator_error_norm(&self, state: &[f64]) -> f64 {
        if !self.has_estimator() {
            return 0.0;
        }
        let mut acc = 0.0;
        for i in 0..self.num_followers() {
            for q in 0..self.order {
                let (c, z) = (self.chain_off(i, q), self.est_off(i, q));
                for s in 0..self.dim {
                    acc += (state[z + s] - state[c + s]).powi(2);
                }
            }
        }
        acc.sqrt()
    }

    /// Leader chains `D^q x_j(t)` for `q < m` as one flat buffer.
    fn leader_chains(&self, t: f64) -> Vec<f64> {
        let (p, m) = (self.dim, self.order);
        let mut buf = vec![0.0; self.num_leaders() * m * p];
        for j in 0..self.num_leaders() {
            for q in 0..m {
                let o = (j * m + q) * p;
                self.leader_op(j, q, t, &mut buf[o..o + p]);
            }
        }
        buf
    }

    /// Writes `D state` at time `t` into `out`; `u_out` (if given) receives
    /// the applied inputs `u_i`. `step` keys the measurement noise.
    pub fn rhs(&self, t: f64, state: &[f64], step: Option<u64>, out: &mut [f64], mut u_out: Option<&mut [f64]>) {
        let (p, m, mm) = (self.dim, self.order, self.num_leaders());
        let na = self.num_accumulators();
        let lead = self.leader_chains(t);
        // x^{(q)} of agent `j` (global index) as seen by follower controllers
        let agent = |j: usize, q: usize, use_est: bool| -> &[f64] {
            if j < mm {
                let o = (j * m + q) * p;
                &lead[o..o + p]
            } else {
                let o = if use_est {
                    self.est_off(j - mm, q)
                } else {
                    self.chain_off(j - mm, q)
                };
                &state[o..o + p]
            }
        };
        let mut s = vec![0.0; m * p];
        let mut u = vec![0.0; p];
        let mut innov = vec![0.0; p];
        let mut delta = vec![0.0; p];
        for i in 0..self.num_followers() {
            let gi = mm + i;
            let est = self.has_estimator();
            s.iter_mut().for_each(|v| *v = 0.0);
            for &(j, w) in &self.neighbors[i] {
                for q in 0..m {
                    let use_est = est && q > 0;
                    let xj = agent(j, q, use_est);
                    let xi = agent(gi, q, use_est);
                    for c in 0..p {
                        s[q * p + c] += w * (xj[c] - xi[c]);
                    }
                }
                if let (Some(nz), Some(k)) = (&self.noise, step) {
                    let eta = nz.sample(j, gi, k);
                    for c in 0..p {
                        s[c] += w * eta[c];
                    }
                }
            }
            // u = scale·(Σ_{l<m} κ_l s^{(m−1−l)} + Σ_{l≥m} κ_l w_{l−m+1})
            u.iter_mut().for_each(|v| *v = 0.0);
            for l in 0..m {
                let q = m - 1 - l;
                for c in 0..p {
                    u[c] += self.kappa[l] * s[q * p + c];
                }
            }
            for a in 1..=na {
                let o = self.acc_off(i, a);
                for c in 0..p {
                    u[c] += self.kappa[m + a - 1] * state[o + c];
                }
            }
            u.iter_mut().for_each(|v| *v *= self.scale[i]);
            if let Some(buf) = u_out.as_deref_mut() {
                buf[i * p..(i + 1) * p].copy_from_slice(&u);
            }
            eval_flat(&self.disturbance_ops[i][0], t, &mut delta);

            for q in 0..m {
                let o = self.chain_off(i, q);
                if q + 1 < m {
                    let src = self.chain_off(i, q + 1);
                    out[o..o + p].copy_from_slice(&state[src..src + p]);
                } else {
                    for c in 0..p {
                        out[o + c] = u[c] + delta[c];
                    }
                }
            }
            for a in 1..=na {
                let o = self.acc_off(i, a);
                if a == 1 {
                    out[o..o + p].copy_from_slice(&s[0..p]);
                } else {
                    let src = self.acc_off(i, a - 1);
                    out[o..o + p].copy_from_slice(&state[src..src + p]);
                }
            }
            if let Some(ke) = &self.estimator_gain {
                // innovation Σ α((z_{j,0} − x_j) − (z_{i,0} − x_i)); leaders send exact chains
                innov.iter_mut().for_each(|v| *v = 0.0);
                let own_z = self.est_off(i, 0);
                let own_x = self.chain_off(i, 0);
                for &(j, w) in &self.neighbors[i] {
                    for c in 0..p {
                        let mine = state[own_z + c] - state[own_x + c];
                        let theirs = if j < mm {
                            0.0
                        } else {
                            state[self.est_off(j - mm, 0) + c] - state[self.chain_off(j - mm, 0) + c]
                        };
                        innov[c] += w * (theirs - mine);
                    }
                }
                for q in 0..m {
                    let o = self.est_off(i, q);
                    for c in 0..p {
                        let drift = if q + 1 < m {
                            state[self.est_off(i, q + 1) + c]
                        } else {
                            u[c]
                        };
                        out[o + c] = drift + ke[q] * self.scale[i] * innov[c];
                    }
                }
            }
        }
    }

    /// Coupling matrix of the lifted recursion.
    pub fn coupling(&self) -> DMatrix<f64> {
        crate::synthesis::coupling_matrix(
            &self.blocks,
            self.domain,
            match self.weighting {
                Weighting::Uniform(mu) => Some(mu),
                _ => None,
            },
        )
    }

    pub fn plant(&self) -> CompanionPlant {
        CompanionPlant::new(self.lifted_order, self.domain).expect("l_m ≥ 1")
    }

    /// `I_N ⊗ A − L ⊗ BK`, acting on one spatial component.
    pub fn lifted_matrix(&self) -> DMatrix<f64> {
        let row: Vec<f64> = self.kappa.iter().rev().copied().collect();
        lifted_matrix(&self.coupling(), &self.plant(), &row)
    }

    /// Extended follower chains `D^q x_i`, `q < l_m`, implied by the state.
    fn extended_chains(&self, t: f64, state: &[f64]) -> Vec<Vec<DVector<f64>>> {
        let (p, m, mm, nn, lm) = (self.dim, self.order, self.num_leaders(), self.num_followers(), self.lifted_order);
        let mut fc: Vec<Vec<DVector<f64>>> = (0..nn)
            .map(|i| {
                (0..m)
                    .map(|q| {
                        let o = self.chain_off(i, q);
                        DVector::from_column_slice(&state[o..o + p])
                    })
                    .collect()
            })
            .collect();
        let lc: Vec<Vec<DVector<f64>>> = (0..mm)
            .map(|j| {
                (0..lm)
                    .map(|q| {
                        let mut v = DVector::zeros(p);
                        self.leader_op(j, q, t, v.as_mut_slice());
                        v
                    })
                    .collect()
            })
            .collect();
        let srel = |fc: &Vec<Vec<DVector<f64>>>, i: usize, r: usize| -> DVector<f64> {
            let mut acc = DVector::zeros(p);
            for &(j, w) in &self.neighbors[i] {
                let xj = if j < mm { &lc[j][r] } else { &fc[j - mm][r] };
                acc += (xj - &fc[i][r]) * w;
            }
            acc
        };
        for q in m..lm {
            let jd = q - m;
            let mut next = Vec::with_capacity(nn);
            for i in 0..nn {
                let mut du = DVector::zeros(p);
                for l in 0..m {
                    du += srel(&fc, i, m - 1 - l + jd) * self.kappa[l];
                }
                for l in m..lm {
                    let a = l - m + 1;
                    let term = if jd < a {
                        let o = self.acc_off(i, a - jd);
                        DVector::from_column_slice(&state[o..o + p])
                    } else {
                        srel(&fc, i, jd - a)
                    };
                    du += term * self.kappa[l];
                }
                du *= self.scale[i];
                let mut dd = DVector::zeros(p);
                eval_flat(&self.disturbance_ops[i][jd], t, dd.as_mut_slice());
                next.push(du + dd);
            }
            for (i, v) in next.into_iter().enumerate() {
                fc[i].push(v);
            }
        }
        fc
    }

    /// Leader correction `(L2⁻¹L1 ⊗ I)Ξ_L(t)` laid out like `Ξ̂_F`.
    fn leader_offset(&self, t: f64) -> Result<DMatrix<f64>> {
        let (p, mm, nn, lm) = (self.dim, self.num_leaders(), self.num_followers(), self.lifted_order);
        let g = self
            .blocks
            .l2
            .clone()
            .lu()
            .solve(&self.blocks.l1)
            .ok_or(Error::Singular("L2"))?;
        // rows: follower-major then chain order; columns: spatial component
        let mut out = DMatrix::zeros(nn * lm, p);
        let mut v = vec![0.0; p];
        for j in 0..mm {
            for q in 0..lm {
                self.leader_op(j, q, t, &mut v);
                for i in 0..nn {
                    for c in 0..p {
                        out[(i * lm + q, c)] += g[(i, j)] * v[c];
                    }
                }
            }
        }
        Ok(out)
    }

    /// `Ξ̂_F(t)` as an `(N·l_m) × p` matrix (one column per spatial component).
    pub fn lifted_state(&self, t: f64, state: &[f64]) -> Result<DMatrix<f64>> {
        if self.has_estimator() {
            return Err(Error::Parameter("lifted form needs full-information feedback".into()));
        }
        let lm = self.lifted_order;
        let fc = self.extended_chains(t, state);
        let mut xi = self.leader_offset(t)?;
        for (i, chain) in fc.iter().enumerate() {
            for (q, v) in chain.iter().enumerate() {
                for c in 0..self.dim {
                    xi[(i * lm + q, c)] += v[c];
                }
            }
        }
        Ok(xi)
    }

    /// Follower positions recovered from `Ξ̂_F(t)`.
    pub fn positions_from_lifted(&self, t: f64, xi: &DMatrix<f64>) -> Result<Vec<DVector<f64>>> {
        let lm = self.lifted_order;
        let off = self.leader_offset(t)?;
        Ok((0..self.num_followers())
            .map(|i| (xi.row(i * lm) - off.row(i * lm)).transpose())
            .collect())
    }

    /// Forcing `B·D^{l_m−m}δ(t)` of the lifted recursion.
    pub fn lifted_forcing(&self, t: f64) -> DMatrix<f64> {
        let (p, lm, m) = (self.dim, self.lifted_order, self.order);
        let mut f = DMatrix::zeros(self.num_followers() * lm, p);
        let mut v = vec![0.0; p];
        for i in 0..self.num_followers() {
            eval_flat(&self.disturbance_ops[i][lm - m], t, &mut v);
            for c in 0..p {
                f[(i * lm + lm - 1, c)] = v[c];
            }
        }
        f
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_edge() -> DirectedTopology {
        DirectedTopology::from_edges(1, 1, &[(0, 1, 1.0)]).unwrap()
    }

    #[test]
    fn layout_and_rhs_of_scalar_pi() {
        let topo = single_edge();
        let leader = [VectorPolynomial::from_rows(&[&[2.0]]).unwrap()];
        let cl = ClosedLoop::new(ClosedLoopSpec {
            domain: TimeDomain::Continuous,
            topology: &topo,
            leaders: &leader,
            disturbances: &[],
            order: 1,
            trajectory_order: 1,
            gain_row: &[0.5, 3.0],
            weighting: Weighting::Unit,
            estimator_gain: None,
            noise: None,
        })
        .unwrap();
        assert_eq!(cl.kappa, vec![3.0, 0.5]);
        assert_eq!(cl.state_len(), 2);
        let x = [1.0, 4.0];
        let mut out = [0.0; 2];
        cl.rhs(0.0, &x, None, &mut out, None);
        // s = 2 − 1 = 1; u = 3·1 + 0.5·4
        assert_eq!(out, [5.0, 1.0]);
    }

    #[test]
    fn rejects_wrong_gain_length_and_unreachable() {
        let topo = single_edge();
        let leader = [VectorPolynomial::zero(1)];
        let mk = |row: &[f64], topo: &DirectedTopology| {
            ClosedLoop::new(ClosedLoopSpec {
                domain: TimeDomain::Continuous,
                topology: topo,
                leaders: &leader,
                disturbances: &[],
                order: 3,
                trajectory_order: 3,
                gain_row: row,
                weighting: Weighting::Unit,
                estimator_gain: None,
                noise: None,
            })
        };
        assert!(mk(&[1.0, 2.0, 3.0], &topo).is_err());
        assert!(mk(&[1.0, 2.0, 3.0, 4.0], &topo).is_ok());
        let cut = DirectedTopology::from_edges(1, 2, &[(0, 1, 1.0)]).unwrap();
        assert!(matches!(mk(&[1.0; 4], &cut), Err(Error::Unreachable { .. })));
    }

    #[test]
    fn normalized_weighting_halves_single_edge() {
        let topo = single_edge();
        let leader = [VectorPolynomial::zero(1)];
        let cl = ClosedLoop::new(ClosedLoopSpec {
            domain: TimeDomain::Discrete,
            topology: &topo,
            leaders: &leader,
            disturbances: &[],
            order: 1,
            trajectory_order: 0,
            gain_row: &[1.0],
            weighting: Weighting::Normalized,
            estimator_gain: None,
            noise: None,
        })
        .unwrap();
        let mut out = [0.0];
        cl.rhs(0.0, &[4.0], None, &mut out, None);
        assert_eq!(out[0], -2.0);
    }
}
