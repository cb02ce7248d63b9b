//! Distance from a point to the convex hull of the leaders, via Wolfe's
//! minimum-norm-point algorithm over the probability simplex.

use nalgebra::{DMatrix, DVector};

/// Certification slack for the simplex first-order condition (normalised units).
pub const OPTIMALITY_TOL: f64 = 1e-8;
const MAX_MAJOR: usize = 500;
const MAX_MINOR: usize = 500;

#[derive(Debug, Clone)]
pub struct HullProjection {
    pub distance: f64,
    /// Convex weights over the leaders; `Σ μ = 1`, `μ ≥ 0`.
    pub weights: DVector<f64>,
    /// `min_j ⟨z, y_j⟩ − ‖z‖²` in normalised coordinates; nonnegative at the optimum.
    pub optimality_gap: f64,
}

impl HullProjection {
    pub fn certified(&self) -> bool {
        self.optimality_gap >= -OPTIMALITY_TOL
    }
}

/// Closest point of `co{leaders}` to `point`.
///
/// # Panics
/// If `leaders` is empty or the dimensions disagree.
pub fn hull_distance(point: &DVector<f64>, leaders: &[DVector<f64>]) -> HullProjection {
    let m = leaders.len();
    assert!(m > 0, "convex hull of an empty set");
    let diffs: Vec<DVector<f64>> = leaders.iter().map(|l| l - point).collect();
    let scale = diffs.iter().map(|d| d.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        let mut weights = DVector::zeros(m);
        weights[0] = 1.0;
        return HullProjection {
            distance: 0.0,
            weights,
            optimality_gap: 0.0,
        };
    }
    let y: Vec<DVector<f64>> = diffs.iter().map(|d| d / scale).collect();
    let (weights, z) = wolfe(&y);
    let zz = z.norm_squared();
    let optimality_gap = y
        .iter()
        .map(|v| v.dot(&z) - zz)
        .fold(f64::INFINITY, f64::min);
    HullProjection {
        distance: z.norm() * scale,
        weights,
        optimality_gap,
    }
}

/// Minimum-norm point of `co{y}`; returns (weights, point).
fn wolfe(y: &[DVector<f64>]) -> (DVector<f64>, DVector<f64>) {
    let m = y.len();
    let combo = |idx: &[usize], w: &[f64]| -> DVector<f64> {
        let mut x = DVector::zeros(y[0].len());
        for (&i, &wi) in idx.iter().zip(w) {
            x += &y[i] * wi;
        }
        x
    };

    let start = (0..m)
        .min_by(|&a, &b| y[a].norm_squared().total_cmp(&y[b].norm_squared()))
        .unwrap();
    let mut active: Vec<usize> = vec![start];
    let mut lambda: Vec<f64> = vec![1.0];
    let mut x = y[start].clone();

    for _ in 0..MAX_MAJOR {
        let xx = x.norm_squared();
        let (j, best) = (0..m)
            .map(|j| (j, x.dot(&y[j])))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        // termination: no vertex improves on the current point
        if best >= xx - 1e-14 || active.contains(&j) || xx <= 1e-30 {
            break;
        }
        active.push(j);
        lambda.push(0.0);

        for _ in 0..MAX_MINOR {
            let alpha = affine_minimizer(y, &active);
            if alpha.iter().all(|&a| a > 1e-15) {
                lambda = alpha;
                break;
            }
            // step from lambda toward alpha until a weight hits zero
            let mut theta = 1.0f64;
            for (l, a) in lambda.iter().zip(&alpha) {
                if *a <= 1e-15 && l - a > 0.0 {
                    theta = theta.min(l / (l - a));
                }
            }
            for (l, a) in lambda.iter_mut().zip(&alpha) {
                *l = theta * a + (1.0 - theta) * *l;
            }
            let mut k = 0;
            while k < active.len() {
                if lambda[k] <= 1e-15 {
                    active.swap_remove(k);
                    lambda.swap_remove(k);
                } else {
                    k += 1;
                }
            }
            let total: f64 = lambda.iter().sum();
            lambda.iter_mut().for_each(|l| *l /= total);
        }
        x = combo(&active, &lambda);
    }

    let mut weights = DVector::zeros(m);
    for (&i, &l) in active.iter().zip(&lambda) {
        weights[i] += l;
    }
    (weights, x)
}

/// Weights of the minimum-norm point of the affine hull of the active vertices.
fn affine_minimizer(y: &[DVector<f64>], active: &[usize]) -> Vec<f64> {
    let k = active.len();
    let mut sys = DMatrix::zeros(k + 1, k + 1);
    for a in 0..k {
        for b in 0..k {
            sys[(a, b)] = y[active[a]].dot(&y[active[b]]);
        }
        sys[(a, k)] = 1.0;
        sys[(k, a)] = 1.0;
    }
    let mut rhs = DVector::zeros(k + 1);
    rhs[k] = 1.0;
    let sol = sys
        .clone()
        .lu()
        .solve(&rhs)
        .filter(|s| s.iter().all(|v| v.is_finite()))
        .unwrap_or_else(|| {
            sys.svd(true, true)
                .solve(&rhs, 1e-13)
                .expect("SVD solve with both factors")
        });
    let w: Vec<f64> = sol.iter().take(k).copied().collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|v| v / total).collect()
}

/// `E_r`: sum of follower distances to the leaders' hull.
pub fn containment_error(followers: &[DVector<f64>], leaders: &[DVector<f64>]) -> f64 {
    followers
        .iter()
        .map(|f| hull_distance(f, leaders).distance)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(x)
    }

    #[test]
    fn point_on_vertex() {
        let l = vec![v(&[0.0, 0.0]), v(&[1.0, 0.0]), v(&[0.0, 1.0])];
        let h = hull_distance(&v(&[1.0, 0.0]), &l);
        assert!(h.distance < 1e-12);
        assert!((h.weights[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn single_leader_is_euclidean() {
        let h = hull_distance(&v(&[3.0, 4.0]), &[v(&[0.0, 0.0])]);
        assert!((h.distance - 5.0).abs() < 1e-12);
        assert!(h.certified());
    }

    #[test]
    fn interior_point() {
        let l = vec![v(&[0.0, 0.0]), v(&[4.0, 0.0]), v(&[0.0, 4.0])];
        let p = v(&[1.0, 1.0]);
        let h = hull_distance(&p, &l);
        assert!(h.distance < 1e-12);
        let rec: DVector<f64> = l.iter().zip(h.weights.iter()).map(|(x, w)| x * *w).sum();
        assert!((rec - p).norm() < 1e-9);
    }

    #[test]
    fn segment_and_error_additivity() {
        let l = vec![v(&[0.0, 0.0]), v(&[2.0, 0.0])];
        let out = v(&[1.0, 2.0]);
        assert!((hull_distance(&out, &l).distance - 2.0).abs() < 1e-12);
        let e = containment_error(&[out, v(&[0.5, 0.0]), v(&[2.0, 0.0])], &l);
        assert!((e - 2.0).abs() < 1e-12);
        assert_eq!(containment_error(&l, &l), 0.0);
    }

    #[test]
    fn coincident_and_collinear_leaders() {
        let l = vec![v(&[1.0, 1.0]), v(&[1.0, 1.0]), v(&[2.0, 2.0]), v(&[3.0, 3.0])];
        let h = hull_distance(&v(&[0.0, 2.0]), &l);
        // closest point on the segment (1,1)-(3,3) to (0,2) is (1,1)
        assert!((h.distance - 2f64.sqrt()).abs() < 1e-10);
        assert!(h.certified());
        let s: f64 = h.weights.iter().sum();
        assert!((s - 1.0).abs() < 1e-9);
    }
}
