use nalgebra::{DMatrix, DVector};

use super::polynomial::VectorPolynomial;
use crate::error::{Error, Result};

/// Vandermonde condition numbers above this are flagged.
pub const CONDITION_WARNING: f64 = 1e12;

#[derive(Debug, Clone)]
pub struct Interpolant {
    pub polynomial: VectorPolynomial,
    /// 2-norm condition number of the monomial Vandermonde matrix on the nodes.
    pub condition: f64,
}

impl Interpolant {
    pub fn ill_conditioned(&self) -> bool {
        self.condition > CONDITION_WARNING
    }
}

/// Unique degree-`(len−1)` interpolant through `(times[i], points[i])`,
/// built from Newton divided differences.
pub fn interpolate_waypoints(times: &[f64], points: &[DVector<f64>]) -> Result<Interpolant> {
    if times.is_empty() || times.len() != points.len() {
        return Err(Error::Parameter(format!(
            "need matching nonempty node lists (got {} times, {} points)",
            times.len(),
            points.len()
        )));
    }
    for (i, a) in times.iter().enumerate() {
        if times[..i].iter().any(|b| b == a) {
            return Err(Error::DuplicateNode(*a));
        }
    }
    let n = times.len();
    let dim = points[0].len();

    // in-place divided-difference table; table[j] ends as f[t_0..t_j]
    let mut table: Vec<DVector<f64>> = points.to_vec();
    for level in 1..n {
        for j in (level..n).rev() {
            let denom = times[j] - times[j - level];
            table[j] = (&table[j] - &table[j - 1]) / denom;
        }
    }

    // nested multiplication back to the monomial basis
    let mut coeffs: Vec<DVector<f64>> = vec![table[n - 1].clone()];
    for j in (0..n - 1).rev() {
        // coeffs <- coeffs * (t - t_j) + table[j]
        let mut next = vec![DVector::zeros(dim); coeffs.len() + 1];
        for (i, c) in coeffs.iter().enumerate() {
            next[i + 1] += c;
            next[i] -= c * times[j];
        }
        next[0] += &table[j];
        coeffs = next;
    }

    let vandermonde = DMatrix::from_fn(n, n, |i, j| times[i].powi(j as i32));
    let sv = vandermonde.singular_values();
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };

    Ok(Interpolant {
        polynomial: VectorPolynomial::new(coeffs)?,
        condition,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_points_give_line() {
        let p = interpolate_waypoints(
            &[1.0, 3.0],
            &[DVector::from_vec(vec![0.0, 2.0]), DVector::from_vec(vec![4.0, 0.0])],
        )
        .unwrap()
        .polynomial;
        assert_eq!(p.degree(), 1);
        assert!((p.coeffs()[1][0] - 2.0).abs() < 1e-14);
        assert!((p.coeffs()[0][0] + 2.0).abs() < 1e-14);
        assert!((p.coeffs()[1][1] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn duplicate_nodes_rejected() {
        let pts = vec![DVector::zeros(1); 3];
        assert!(matches!(
            interpolate_waypoints(&[0.0, 1.0, 0.0], &pts),
            Err(Error::DuplicateNode(_))
        ));
    }

    #[test]
    fn single_node_is_constant() {
        let p = interpolate_waypoints(&[5.0], &[DVector::from_vec(vec![3.0])]).unwrap();
        assert_eq!(p.polynomial.degree(), 0);
        assert_eq!(p.polynomial.eval(-100.0)[0], 3.0);
    }

    #[test]
    fn recovers_polynomial_of_matching_degree() {
        let orig = VectorPolynomial::from_rows(&[&[1.0, -2.0], &[0.5, 0.1], &[-0.02, 0.003], &[1e-4, 2e-5]]).unwrap();
        let times = [0.0, 10.0, 20.0, 35.0];
        let pts: Vec<_> = times.iter().map(|&t| orig.eval(t)).collect();
        let back = interpolate_waypoints(&times, &pts).unwrap().polynomial;
        for (a, b) in back.coeffs().iter().zip(orig.coeffs()) {
            assert!((a - b).norm() <= 1e-8 * (1.0 + b.norm()));
        }
    }

    #[test]
    fn random_degree_five_residuals() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let mut times: Vec<f64> = (0..6).map(|i| i as f64 * 30.0 + rng.random_range(-5.0..5.0)).collect();
            times.sort_by(f64::total_cmp);
            let pts: Vec<_> = (0..6)
                .map(|_| DVector::from_fn(2, |_, _| rng.random_range(-500.0..500.0)))
                .collect();
            let p = interpolate_waypoints(&times, &pts).unwrap().polynomial;
            for (t, x) in times.iter().zip(&pts) {
                assert!((p.eval(*t) - x).norm() <= 1e-8 * x.norm().max(1.0));
            }
        }
    }
}
