#![allow(dead_code)]

use containment::harness::scenario::{InitialState, TopologySpec, SCENARIO_SCHEMA_VERSION};
use containment::harness::{ControllerKind, GainSpec, Scenario};
use containment::signals::VectorPolynomial;

pub fn poly(rows: &[&[f64]]) -> VectorPolynomial {
    VectorPolynomial::from_rows(rows).unwrap()
}

pub fn at(chain: &[&[f64]]) -> InitialState {
    InitialState {
        chain: chain.iter().map(|v| v.to_vec()).collect(),
        estimator_error: vec![],
    }
}

/// Two leaders on a short horizontal segment, two followers, `n = 2`, and a
/// vertical disturbance `c·t^r` on both followers.
pub fn sharpness(controller: ControllerKind, r: usize, c: f64) -> Scenario {
    let mut coeffs = vec![vec![0.0, 0.0]; r + 1];
    coeffs[r][1] = c;
    let d = VectorPolynomial::from_rows(&coeffs.iter().map(|v| v.as_slice()).collect::<Vec<_>>()).unwrap();
    let continuous = controller == ControllerKind::ContinuousPin;
    Scenario {
        name: format!("sharpness-{}-r{r}", controller.name()),
        schema_version: SCENARIO_SCHEMA_VERSION,
        topology: TopologySpec {
            leaders: 2,
            followers: 2,
            edges: vec![(1, 3, 1.0), (2, 4, 1.0), (3, 4, 1.0), (4, 3, 1.0)],
        },
        leaders: vec![
            poly(&[&[-1.0, 0.0], &[0.2, 0.0], &[0.001, 0.0]]),
            poly(&[&[1.0, 0.0], &[0.2, 0.0], &[0.001, 0.0]]),
        ],
        follower_order: 1,
        trajectory_order: 2,
        controller,
        disturbances: vec![d; 2],
        noise: None,
        gains: GainSpec::Synthesized,
        dt: continuous.then_some(1e-3),
        horizon: if continuous { 40.0 } else { 300.0 },
        seed: 11,
        record_every: continuous.then_some(100),
        initial: vec![at(&[&[0.5, 2.0]]), at(&[&[-0.5, -2.0]])],
        uniform_mu: None,
        robot: None,
        runs: None,
    }
}

/// Exact distance to the hull by enumerating leader subsets of size at most
/// `p + 1` and projecting onto their affine hulls.
pub fn brute_force_hull_distance(x: &nalgebra::DVector<f64>, leaders: &[nalgebra::DVector<f64>]) -> f64 {
    use nalgebra::{DMatrix, DVector};
    let m = leaders.len();
    let p = x.len();
    let mut best = f64::INFINITY;
    for mask in 1u32..(1 << m) {
        let idx: Vec<usize> = (0..m).filter(|j| mask & (1 << j) != 0).collect();
        if idx.len() > p + 1 {
            continue;
        }
        let base = &leaders[idx[0]];
        let k = idx.len() - 1;
        let (y, w) = if k == 0 {
            (base.clone(), DVector::from_element(1, 1.0))
        } else {
            let e = DMatrix::from_fn(p, k, |r, c| leaders[idx[c + 1]][r] - base[r]);
            let g = e.transpose() * &e;
            let Some(chol) = g.clone().cholesky() else { continue };
            if g.determinant().abs() < 1e-12 * g.norm().powi(k as i32) {
                continue;
            }
            let lam = chol.solve(&(e.transpose() * (x - base)));
            let mut w = DVector::zeros(k + 1);
            w[0] = 1.0 - lam.sum();
            w.rows_mut(1, k).copy_from(&lam);
            (base + &e * lam, w)
        };
        if w.iter().all(|&v| v >= -1e-12) {
            best = best.min((x - y).norm());
        }
    }
    best
}
