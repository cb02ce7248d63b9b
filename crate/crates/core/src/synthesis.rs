//! Companion-form plants and the Riccati-based gain synthesis for the
//! continuous and discrete containment laws and their state estimators.
//!
//! Gain vectors are rows ordered like the lifted state
//! `(x, Dx, …, D^{q−1}x)`, i.e. `K = (κ_{q−1}, …, κ_0)`: the first entry
//! weighs the highest-order integral term, the last entry the highest-order
//! differential (or the proportional term when `q = n + 1` and `m = 1`).

use nalgebra::{Complex, DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::signals::TimeDomain;
use crate::topology::{LaplacianBlocks, SpectrumReport};

pub const CARE_RESIDUAL_TOL: f64 = 1e-8;
const NEWTON_MAX_ITER: usize = 100;
/// Relative Frobenius change that ends the modified-DARE fixed point.
pub const MDARE_REL_TOL: f64 = 1e-10;
pub const MDARE_MAX_ITER: usize = 100_000;
/// Continuous `σ_min` as a fraction of `λ_min`.
pub const SIGMA_FRACTION: f64 = 0.99;

/// Chain-of-integrators plant: upper-shift `A`, input `B = e_q`, and
/// `Â = I + A` in discrete mode.
#[derive(Debug, Clone)]
pub struct CompanionPlant {
    pub order: usize,
    pub domain: TimeDomain,
    /// `A` (continuous) or `Â = I + A` (discrete).
    pub state: DMatrix<f64>,
    pub input: DVector<f64>,
}

impl CompanionPlant {
    pub fn new(order: usize, domain: TimeDomain) -> Result<Self> {
        if order == 0 {
            return Err(Error::Parameter("plant order must be at least 1".into()));
        }
        let mut state = DMatrix::from_fn(order, order, |i, j| if j == i + 1 { 1.0 } else { 0.0 });
        if domain == TimeDomain::Discrete {
            state += DMatrix::<f64>::identity(order, order);
        }
        let mut input = DVector::zeros(order);
        input[order - 1] = 1.0;
        Ok(Self {
            order,
            domain,
            state,
            input,
        })
    }

    /// Nilpotent shift part `A` regardless of mode.
    pub fn shift(&self) -> DMatrix<f64> {
        match self.domain {
            TimeDomain::Continuous => self.state.clone(),
            TimeDomain::Discrete => &self.state - DMatrix::<f64>::identity(self.order, self.order),
        }
    }

    pub fn input_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_column_slice(self.order, 1, self.input.as_slice())
    }

    /// Estimator-side pair `(Aᵀ, e_1)`: the dual plant whose controller gain,
    /// transposed, is the estimator gain.
    pub fn transposed(&self) -> DualPlant {
        let mut output = DVector::zeros(self.order);
        output[0] = 1.0;
        DualPlant {
            state: self.state.transpose(),
            input: output,
        }
    }
}

/// A generic single-input pair `(A, b)`.
#[derive(Debug, Clone)]
pub struct DualPlant {
    pub state: DMatrix<f64>,
    pub input: DVector<f64>,
}

impl From<&CompanionPlant> for DualPlant {
    fn from(p: &CompanionPlant) -> Self {
        DualPlant {
            state: p.state.clone(),
            input: p.input.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GainSynthesis {
    #[serde(serialize_with = "ser_matrix")]
    pub p: DMatrix<f64>,
    pub epsilon: f64,
    /// Row gain `(κ_{q−1}, …, κ_0)`.
    pub k: Vec<f64>,
    pub residual: f64,
    pub min_eig_p: f64,
    pub iterations: usize,
    pub certified: bool,
}

impl GainSynthesis {
    /// Gains in law order `κ_0, κ_1, …`.
    pub fn kappa(&self) -> Vec<f64> {
        self.k.iter().rev().copied().collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimatorGainSynthesis {
    #[serde(serialize_with = "ser_matrix")]
    pub p: DMatrix<f64>,
    pub epsilon: f64,
    /// Column gain `K_e`.
    pub k_e: Vec<f64>,
    pub residual: f64,
    pub domain: TimeDomain,
}

pub(crate) fn ser_matrix<S: serde::Serializer>(m: &DMatrix<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(m.nrows()))?;
    for r in m.row_iter() {
        seq.serialize_element(&r.iter().copied().collect::<Vec<_>>())?;
    }
    seq.end()
}

/// `‖AᵀP + PA + I − P b bᵀ P‖_F`.
pub fn care_residual(a: &DMatrix<f64>, b: &DVector<f64>, p: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let pb = p * b;
    (a.transpose() * p + p * a + DMatrix::<f64>::identity(n, n) - &pb * pb.transpose()).norm()
}

/// Coefficients of `(s+1)^q` below the leading term: the gain placing all
/// poles of the companion pair at −1.
pub fn unit_pole_gain(q: usize) -> DVector<f64> {
    let mut c = DVector::zeros(q);
    let mut binom = 1.0;
    for j in 0..q {
        c[j] = binom;
        binom = binom * (q - j) as f64 / (j + 1) as f64;
    }
    c
}

/// Stabilising solution of `AᵀP + PA + I − P b bᵀ P = 0` by Newton–Kleinman
/// iteration from the stabilising gain `k0`.
pub fn care_newton(a: &DMatrix<f64>, b: &DVector<f64>, k0: &DVector<f64>) -> Result<(DMatrix<f64>, usize)> {
    let n = a.nrows();
    let eye = DMatrix::<f64>::identity(n, n);
    let mut k = k0.transpose();
    let mut p_prev: Option<DMatrix<f64>> = None;
    let mut last_change = f64::INFINITY;
    for it in 1..=NEWTON_MAX_ITER {
        let closed = a - b * &k;
        let q = &eye + k.transpose() * &k;
        let p = linalg::solve_lyapunov(&closed, &q)?;
        k = (p.transpose() * b).transpose();
        if let Some(prev) = &p_prev {
            last_change = (&p - prev).norm();
            if last_change <= 1e-14 * p.norm() {
                return Ok((p, it));
            }
        }
        p_prev = Some(p);
    }
    let p = p_prev.expect("at least one iteration");
    if care_residual(a, b, &p) < CARE_RESIDUAL_TOL {
        return Ok((p, NEWTON_MAX_ITER));
    }
    Err(Error::NoConvergence {
        solver: "Newton-Kleinman CARE",
        iterations: NEWTON_MAX_ITER,
        last_change,
    })
}

/// CARE for the continuous companion plant.
pub fn care_solve(plant: &CompanionPlant) -> Result<DMatrix<f64>> {
    if plant.domain != TimeDomain::Continuous {
        return Err(Error::Parameter("care_solve needs a continuous plant".into()));
    }
    let (p, _) = care_newton(&plant.state, &plant.input, &unit_pole_gain(plant.order))?;
    Ok(p)
}

/// `ε = ½ max{1, 1/σ_min}` with `σ_min = 0.99 λ_min`.
pub fn epsilon_continuous(spectrum: &SpectrumReport) -> Result<f64> {
    epsilon_from_lambda_min(spectrum.lambda_min_real)
}

pub fn epsilon_from_lambda_min(lambda_min: f64) -> Result<f64> {
    if !(lambda_min > 0.0) {
        return Err(Error::Parameter(format!(
            "λ_min = {lambda_min:e} must be positive (assumption A1)"
        )));
    }
    let sigma = SIGMA_FRACTION * lambda_min;
    Ok(0.5 * f64::max(1.0, 1.0 / sigma))
}

/// `K = ε bᵀP` with its audit record.
pub fn continuous_gain(p: &DMatrix<f64>, epsilon: f64, plant: &CompanionPlant) -> GainSynthesis {
    let k: Vec<f64> = (p.transpose() * &plant.input * epsilon).iter().copied().collect();
    GainSynthesis {
        p: p.clone(),
        epsilon,
        k,
        residual: care_residual(&plant.state, &plant.input, p),
        min_eig_p: linalg::min_symmetric_eigenvalue(p),
        iterations: 0,
        certified: false,
    }
}

/// Full continuous synthesis: CARE plus ε from the follower spectrum.
pub fn synthesize_continuous(order: usize, spectrum: &SpectrumReport) -> Result<GainSynthesis> {
    let plant = CompanionPlant::new(order, TimeDomain::Continuous)?;
    let p = care_solve(&plant)?;
    let eps = epsilon_continuous(spectrum)?;
    Ok(continuous_gain(&p, eps, &plant))
}

#[derive(Debug, Clone)]
pub struct ModifiedDare {
    pub p: DMatrix<f64>,
    pub iterations: usize,
    /// `λ_min(P − ÂᵀPÂ + (1−ε²) ÂᵀPb(bᵀPb)⁻¹bᵀPÂ)`.
    pub margin: f64,
}

fn mdare_map(a: &DMatrix<f64>, b: &DVector<f64>, p: &DMatrix<f64>, epsilon: f64) -> DMatrix<f64> {
    let pa = p * a;
    let btpa = (b.transpose() * &pa).transpose();
    let btpb = (b.transpose() * p * b)[(0, 0)];
    a.transpose() * &pa - &btpa * btpa.transpose() * ((1.0 - epsilon * epsilon) / btpb)
}

/// Strict-inequality margin of `P` for the modified Riccati inequality.
pub fn mdare_margin(a: &DMatrix<f64>, b: &DVector<f64>, p: &DMatrix<f64>, epsilon: f64) -> f64 {
    linalg::min_symmetric_eigenvalue(&(p - mdare_map(a, b, p, epsilon)))
}

/// Fixed point of `P ← ÂᵀPÂ − (1−ε²) ÂᵀPb(bᵀPb)⁻¹bᵀPÂ + I` from `P = I`.
pub fn modified_dare(a: &DMatrix<f64>, b: &DVector<f64>, epsilon: f64) -> Result<ModifiedDare> {
    modified_dare_traced(a, b, epsilon, |_| {})
}

/// As [`modified_dare`], calling `observe` on every iterate.
pub fn modified_dare_traced(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    epsilon: f64,
    mut observe: impl FnMut(&DMatrix<f64>),
) -> Result<ModifiedDare> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Parameter(format!("ε = {epsilon} must lie in (0, 1)")));
    }
    let n = a.nrows();
    let eye = DMatrix::<f64>::identity(n, n);
    let mut p = eye.clone();
    observe(&p);
    let mut change = f64::INFINITY;
    for it in 1..=MDARE_MAX_ITER {
        let mut next = mdare_map(a, b, &p, epsilon) + &eye;
        next = (&next + next.transpose()) * 0.5;
        change = (&next - &p).norm();
        p = next;
        observe(&p);
        if !p.iter().all(|v| v.is_finite()) {
            break;
        }
        if change <= MDARE_REL_TOL * p.norm().max(1.0) {
            let margin = mdare_margin(a, b, &p, epsilon);
            return Ok(ModifiedDare {
                p,
                iterations: it,
                margin,
            });
        }
    }
    Err(Error::NoConvergence {
        solver: "modified DARE fixed point",
        iterations: MDARE_MAX_ITER,
        last_change: change,
    })
}

pub fn modified_dare_solve(plant: &CompanionPlant, epsilon: f64) -> Result<ModifiedDare> {
    if plant.domain != TimeDomain::Discrete {
        return Err(Error::Parameter("modified_dare_solve needs a discrete plant".into()));
    }
    modified_dare(&plant.state, &plant.input, epsilon)
}

/// `K = (bᵀPb)⁻¹ bᵀPÂ`.
pub fn discrete_gain_of(a: &DMatrix<f64>, b: &DVector<f64>, p: &DMatrix<f64>) -> Result<Vec<f64>> {
    let btpb = (b.transpose() * p * b)[(0, 0)];
    if !(btpb > 0.0) {
        return Err(Error::Parameter(format!("bᵀPb = {btpb:e} is not positive")));
    }
    Ok((b.transpose() * p * a / btpb).iter().copied().collect())
}

pub fn discrete_gain(sol: &ModifiedDare, epsilon: f64, plant: &CompanionPlant) -> Result<GainSynthesis> {
    let k = discrete_gain_of(&plant.state, &plant.input, &sol.p)?;
    Ok(GainSynthesis {
        p: sol.p.clone(),
        epsilon,
        k,
        residual: (&sol.p - mdare_map(&plant.state, &plant.input, &sol.p, epsilon)
            - DMatrix::<f64>::identity(plant.order, plant.order))
        .norm(),
        min_eig_p: linalg::min_symmetric_eigenvalue(&sol.p),
        iterations: sol.iterations,
        certified: false,
    })
}

/// Interior choice `(max|1−λ̂| + 1) / 2` of the discrete ε interval.
pub fn epsilon_discrete(max_deviation: f64) -> Result<f64> {
    if !(max_deviation >= 0.0 && max_deviation < 1.0) {
        return Err(Error::Parameter(format!(
            "max |1 − λ̂| = {max_deviation} leaves no admissible ε in (·, 1)"
        )));
    }
    Ok(0.5 * (max_deviation + 1.0))
}

pub fn synthesize_discrete(order: usize, max_deviation: f64) -> Result<GainSynthesis> {
    let plant = CompanionPlant::new(order, TimeDomain::Discrete)?;
    let eps = epsilon_discrete(max_deviation)?;
    let sol = modified_dare_solve(&plant, eps)?;
    discrete_gain(&sol, eps, &plant)
}

/// Uniform weight `μ ∈ (0,1)` minimising `max|1 − μλ_i|` on a grid, and the
/// attained maximum.
pub fn uniform_weight(eigenvalues: &[Complex<f64>]) -> Result<(f64, f64)> {
    const GRID: usize = 10_000;
    let worst = |mu: f64| {
        eigenvalues
            .iter()
            .map(|l| (Complex::new(1.0, 0.0) - l * mu).norm())
            .fold(0.0, f64::max)
    };
    let (mu, dev) = (1..GRID)
        .map(|i| {
            let mu = i as f64 / GRID as f64;
            (mu, worst(mu))
        })
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("nonempty grid");
    if dev >= 1.0 {
        return Err(Error::Parameter(format!(
            "no μ in (0,1) brings max|1 − μλ| below one (best {dev})"
        )));
    }
    Ok((mu, dev))
}

/// Continuous estimator: `ĒP + PĒᵀ + I − PGᵀGP = 0`, `K_e = ε P Gᵀ`.
pub fn estimator_gain_continuous(order: usize, epsilon: f64) -> Result<EstimatorGainSynthesis> {
    let plant = CompanionPlant::new(order, TimeDomain::Continuous)?;
    let dual = plant.transposed();
    // the pole-placing gain of the dual pair is the reversed unit-pole gain
    let k0 = DVector::from_iterator(order, unit_pole_gain(order).iter().rev().copied());
    let (p, _) = care_newton(&dual.state, &dual.input, &k0)?;
    let k_e: Vec<f64> = (&p * &dual.input * epsilon).iter().copied().collect();
    Ok(EstimatorGainSynthesis {
        residual: care_residual(&dual.state, &dual.input, &p),
        p,
        epsilon,
        k_e,
        domain: TimeDomain::Continuous,
    })
}

/// Discrete estimator: modified DARE on `(Ẽᵀ, Gᵀ)`, `K_e = ẼPGᵀ(GPGᵀ)⁻¹`.
pub fn estimator_gain_discrete(order: usize, epsilon: f64) -> Result<EstimatorGainSynthesis> {
    let plant = CompanionPlant::new(order, TimeDomain::Discrete)?;
    let dual = plant.transposed();
    let sol = modified_dare(&dual.state, &dual.input, epsilon)?;
    let k = discrete_gain_of(&dual.state, &dual.input, &sol.p)?;
    Ok(EstimatorGainSynthesis {
        residual: (&sol.p
            - mdare_map(&dual.state, &dual.input, &sol.p, epsilon)
            - DMatrix::<f64>::identity(order, order))
        .norm(),
        p: sol.p,
        epsilon,
        k_e: k,
        domain: TimeDomain::Discrete,
    })
}

/// Coupling matrix used by the closed loop: `L2` (continuous) or the
/// normalised `L̂2` (discrete); `mu` replaces the `1/(1+d_i)` weights.
pub fn coupling_matrix(blocks: &LaplacianBlocks, domain: TimeDomain, mu: Option<f64>) -> DMatrix<f64> {
    match (domain, mu) {
        (TimeDomain::Continuous, _) => blocks.l2.clone(),
        (TimeDomain::Discrete, None) => blocks.normalized_l2(),
        (TimeDomain::Discrete, Some(mu)) => &blocks.l2 * mu,
    }
}

/// `I_N ⊗ A − L ⊗ b k` for a row gain `k`.
pub fn lifted_matrix(coupling: &DMatrix<f64>, plant: &CompanionPlant, k: &[f64]) -> DMatrix<f64> {
    let n = coupling.nrows();
    let bk = plant.input_matrix() * DMatrix::from_row_slice(1, k.len(), k);
    DMatrix::<f64>::identity(n, n).kronecker(&plant.state) - coupling.kronecker(&bk)
}

/// Estimator error matrix `I_N ⊗ A − L ⊗ K_e G`.
pub fn estimator_error_matrix(coupling: &DMatrix<f64>, plant: &CompanionPlant, k_e: &[f64]) -> DMatrix<f64> {
    let n = coupling.nrows();
    let q = plant.order;
    let mut g = DMatrix::zeros(1, q);
    g[(0, 0)] = 1.0;
    let keg = DMatrix::from_column_slice(q, 1, k_e) * g;
    DMatrix::<f64>::identity(n, n).kronecker(&plant.state) - coupling.kronecker(&keg)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct StabilityMargin {
    /// `−max Re spec` (continuous) or `1 − ρ` (discrete); positive ⇒ certified.
    pub kronecker: f64,
    /// Same quantity from the per-eigenvalue blocks `A − λ_i b k`.
    pub blockwise: f64,
}

impl StabilityMargin {
    pub fn certified(&self) -> bool {
        self.kronecker > 0.0
    }
}

fn margin_of(m: &DMatrix<f64>, domain: TimeDomain) -> Result<f64> {
    Ok(match domain {
        TimeDomain::Continuous => -linalg::spectral_abscissa(m)?,
        TimeDomain::Discrete => 1.0 - linalg::spectral_radius(m)?,
    })
}

fn blockwise_margin(
    eigenvalues: &[Complex<f64>],
    a: &DMatrix<f64>,
    coupling_vec: &DMatrix<f64>,
    domain: TimeDomain,
) -> Result<f64> {
    let mut worst = f64::INFINITY;
    for lam in eigenvalues {
        let re = a - coupling_vec * lam.re;
        let im = -coupling_vec * lam.im;
        worst = worst.min(margin_of(&linalg::complex_embedding(&re, &im), domain)?);
    }
    Ok(worst)
}

/// Closed-loop margin of the follower network under row gain `k`.
pub fn verify_closed_loop(
    blocks: &LaplacianBlocks,
    plant: &CompanionPlant,
    k: &[f64],
    mu: Option<f64>,
) -> Result<StabilityMargin> {
    let coupling = coupling_matrix(blocks, plant.domain, mu);
    let kronecker = margin_of(&lifted_matrix(&coupling, plant, k), plant.domain)?;
    let eig = linalg::eigenvalues(&coupling)?;
    let bk = plant.input_matrix() * DMatrix::from_row_slice(1, k.len(), k);
    let blockwise = blockwise_margin(&eig, &plant.state, &bk, plant.domain)?;
    Ok(StabilityMargin { kronecker, blockwise })
}

/// Margin of the estimator error dynamics under column gain `k_e`.
pub fn verify_estimator(
    blocks: &LaplacianBlocks,
    plant: &CompanionPlant,
    k_e: &[f64],
) -> Result<StabilityMargin> {
    let coupling = coupling_matrix(blocks, plant.domain, None);
    let kronecker = margin_of(&estimator_error_matrix(&coupling, plant, k_e), plant.domain)?;
    let eig = linalg::eigenvalues(&coupling)?;
    let mut g = DMatrix::zeros(1, plant.order);
    g[(0, 0)] = 1.0;
    let keg = DMatrix::from_column_slice(plant.order, 1, k_e) * g;
    let blockwise = blockwise_margin(&eig, &plant.state, &keg, plant.domain)?;
    Ok(StabilityMargin { kronecker, blockwise })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{build_laplacian, DirectedTopology};

    const SQRT3: f64 = 1.732_050_807_568_877_2;

    #[test]
    fn companion_shapes() {
        let p = CompanionPlant::new(2, TimeDomain::Continuous).unwrap();
        assert_eq!(p.state, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]));
        assert_eq!(p.input.as_slice(), &[0.0, 1.0]);
        let d = CompanionPlant::new(1, TimeDomain::Discrete).unwrap();
        assert_eq!(d.state[(0, 0)], 1.0);
        assert_eq!(d.input[0], 1.0);
        let four = CompanionPlant::new(4, TimeDomain::Discrete).unwrap();
        assert_eq!(four.state.shape(), (4, 4));
        assert_eq!(four.shift().pow(4), DMatrix::zeros(4, 4));
        assert!(CompanionPlant::new(0, TimeDomain::Continuous).is_err());
    }

    #[test]
    fn scalar_care() {
        let p = care_solve(&CompanionPlant::new(1, TimeDomain::Continuous).unwrap()).unwrap();
        assert!((p[(0, 0)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn second_order_care_closed_form() {
        let plant = CompanionPlant::new(2, TimeDomain::Continuous).unwrap();
        let p = care_solve(&plant).unwrap();
        let expect = DMatrix::from_row_slice(2, 2, &[SQRT3, 1.0, 1.0, SQRT3]);
        assert!((&p - expect).norm() < 1e-9);
        let g = continuous_gain(&p, 1.0, &plant);
        assert!((g.k[0] - 1.0).abs() < 1e-9 && (g.k[1] - SQRT3).abs() < 1e-9);
        let g2 = continuous_gain(&p, 2.0, &plant);
        for (a, b) in g2.k.iter().zip(&g.k) {
            assert!((a - 2.0 * b).abs() < 1e-14);
        }
    }

    #[test]
    fn care_residuals_up_to_eight() {
        for q in 1..=8 {
            let plant = CompanionPlant::new(q, TimeDomain::Continuous).unwrap();
            let p = care_solve(&plant).unwrap();
            assert!(care_residual(&plant.state, &plant.input, &p) < CARE_RESIDUAL_TOL, "q={q}");
            assert!((&p - p.transpose()).norm() < 1e-10);
            assert!(linalg::min_symmetric_eigenvalue(&p) > 0.0);
        }
    }

    #[test]
    fn epsilon_formula() {
        assert_eq!(epsilon_from_lambda_min(2.0).unwrap(), 0.5);
        let e = epsilon_from_lambda_min(0.5).unwrap();
        assert!((e - 0.5 / 0.495).abs() < 1e-12);
        assert!((e - 1.0101).abs() < 1e-4);
        assert!(epsilon_from_lambda_min(0.0).is_err());
        assert!(epsilon_from_lambda_min(-1.0).is_err());
    }

    #[test]
    fn scalar_mdare_fixed_point() {
        let plant = CompanionPlant::new(1, TimeDomain::Discrete).unwrap();
        let sol = modified_dare_solve(&plant, 0.5).unwrap();
        assert!((sol.p[(0, 0)] - 4.0 / 3.0).abs() < 1e-9);
        let g = discrete_gain(&sol, 0.5, &plant).unwrap();
        assert!((g.k[0] - 1.0).abs() < 1e-14);
        assert!(modified_dare_solve(&plant, 1.0).is_err());
        assert!(modified_dare_solve(&plant, 0.0).is_err());
    }

    #[test]
    fn mdare_margin_and_monotone_iterates() {
        let plant = CompanionPlant::new(2, TimeDomain::Discrete).unwrap();
        let mut iterates = Vec::new();
        let sol = modified_dare_traced(&plant.state, &plant.input, 0.9, |p| iterates.push(p.clone())).unwrap();
        assert!(sol.margin >= 0.5);
        for w in iterates.windows(2) {
            let scale = w[1].norm();
            assert!(linalg::min_symmetric_eigenvalue(&(&w[1] - &w[0])) >= -1e-9 * scale);
        }
    }

    #[test]
    fn discrete_gain_schur_on_disk() {
        let plant = CompanionPlant::new(2, TimeDomain::Discrete).unwrap();
        let eps = 0.9;
        let sol = modified_dare_solve(&plant, eps).unwrap();
        let g = discrete_gain(&sol, eps, &plant).unwrap();
        let bk = plant.input_matrix() * DMatrix::from_row_slice(1, 2, &g.k);
        for r in [0.0, 0.3, 0.6, 0.89] {
            for step in 0..24 {
                let th = step as f64 * std::f64::consts::PI / 12.0;
                let lam = Complex::new(1.0 - r * th.cos(), -r * th.sin());
                let re = &plant.state - &bk * lam.re;
                let im = -&bk * lam.im;
                let rho = linalg::spectral_radius(&linalg::complex_embedding(&re, &im)).unwrap();
                assert!(rho < 1.0, "λ̂ = {lam}, ρ = {rho}");
            }
        }
    }

    #[test]
    fn continuous_estimator_duality() {
        let est = estimator_gain_continuous(1, 0.7).unwrap();
        assert!((est.p[(0, 0)] - 1.0).abs() < 1e-12);
        assert!((est.k_e[0] - 0.7).abs() < 1e-12);
        let est2 = estimator_gain_continuous(2, 1.5).unwrap();
        let expect = DMatrix::from_row_slice(2, 2, &[SQRT3, 1.0, 1.0, SQRT3]);
        assert!((&est2.p - expect).norm() < 1e-9);
        assert!((est2.k_e[0] - 1.5 * SQRT3).abs() < 1e-9 && (est2.k_e[1] - 1.5).abs() < 1e-9);
        for m in 3..=6 {
            let e = estimator_gain_continuous(m, 1.0).unwrap();
            let c = care_solve(&CompanionPlant::new(m, TimeDomain::Continuous).unwrap()).unwrap();
            let j = linalg::reversal(m);
            assert!((&e.p - &j * c * &j).norm() < 1e-8);
        }
    }

    #[test]
    fn discrete_estimator_duality_and_scalar() {
        let e1 = estimator_gain_discrete(1, 0.6).unwrap();
        assert!((e1.k_e[0] - 1.0).abs() < 1e-12);
        for m in 2..=4 {
            let est = estimator_gain_discrete(m, 0.8).unwrap();
            let plant = CompanionPlant::new(m, TimeDomain::Discrete).unwrap();
            let ctrl = modified_dare_solve(&plant, 0.8).unwrap();
            let j = linalg::reversal(m);
            let mapped = &j * &ctrl.p * &j;
            assert!((&est.p - &mapped).norm() <= 1e-8 * mapped.norm());
        }
    }

    #[test]
    fn discrete_estimator_schur_on_disk() {
        let plant = CompanionPlant::new(2, TimeDomain::Discrete).unwrap();
        let est = estimator_gain_discrete(2, 0.9).unwrap();
        let mut g = DMatrix::zeros(1, 2);
        g[(0, 0)] = 1.0;
        let keg = DMatrix::from_column_slice(2, 1, &est.k_e) * g;
        for r in [0.0, 0.5, 0.89] {
            for step in 0..24 {
                let th = step as f64 * std::f64::consts::PI / 12.0;
                let lam = Complex::new(1.0 - r * th.cos(), -r * th.sin());
                let re = &plant.state - &keg * lam.re;
                let im = -&keg * lam.im;
                assert!(linalg::spectral_radius(&linalg::complex_embedding(&re, &im)).unwrap() < 1.0);
            }
        }
    }

    #[test]
    fn scalar_closed_loop_margin() {
        let t = DirectedTopology::from_edges(1, 1, &[(0, 1, 1.0)]).unwrap();
        let b = build_laplacian(&t);
        let plant = CompanionPlant::new(1, TimeDomain::Continuous).unwrap();
        let m = verify_closed_loop(&b, &plant, &[0.7], None).unwrap();
        assert!((m.kronecker - 0.7).abs() < 1e-12);
        assert!((m.blockwise - 0.7).abs() < 1e-12);
    }

    #[test]
    fn uniform_weight_search() {
        let eig = [Complex::new(1.0, 0.0), Complex::new(3.0, 0.0)];
        let (mu, dev) = uniform_weight(&eig).unwrap();
        // optimum equalises 1−μ and 3μ−1
        assert!((mu - 0.5).abs() < 1e-3);
        assert!((dev - 0.5).abs() < 1e-3);
    }
}
