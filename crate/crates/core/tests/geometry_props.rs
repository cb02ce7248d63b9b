mod common;

use containment::geometry::{containment_error, hull_distance};
use nalgebra::{DMatrix, DVector, Rotation2};
use proptest::prelude::*;

fn vecs(p: usize, max: usize) -> impl Strategy<Value = Vec<DVector<f64>>> {
    prop::collection::vec(prop::collection::vec(-10.0f64..10.0, p), 1..=max)
        .prop_map(|v| v.into_iter().map(DVector::from_vec).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn matches_subset_enumeration(leaders in vecs(3, 6), x in prop::collection::vec(-15.0f64..15.0, 3)) {
        let x = DVector::from_vec(x);
        let h = hull_distance(&x, &leaders);
        prop_assert!(h.certified());
        prop_assert!((h.distance - common::brute_force_hull_distance(&x, &leaders)).abs() < 1e-6);
        prop_assert!((h.weights.sum() - 1.0).abs() < 1e-9);
        prop_assert!(h.weights.iter().all(|&w| w >= 0.0));
    }

    #[test]
    fn invariant_under_leader_permutation(leaders in vecs(2, 7), x in prop::collection::vec(-15.0f64..15.0, 2), shift in 0usize..7) {
        let x = DVector::from_vec(x);
        let mut perm = leaders.clone();
        perm.rotate_left(shift % leaders.len());
        perm.reverse();
        prop_assert!((hull_distance(&x, &leaders).distance - hull_distance(&x, &perm).distance).abs() < 1e-9);
    }

    #[test]
    fn invariant_under_rigid_motion(
        leaders in vecs(2, 6),
        x in prop::collection::vec(-15.0f64..15.0, 2),
        angle in -3.2f64..3.2,
        offset in prop::collection::vec(-50.0f64..50.0, 2),
    ) {
        let r: DMatrix<f64> = DMatrix::from_iterator(2, 2, Rotation2::new(angle).matrix().iter().copied());
        let b = DVector::from_vec(offset);
        let moved: Vec<DVector<f64>> = leaders.iter().map(|l| &r * l + &b).collect();
        let x = DVector::from_vec(x);
        let d0 = hull_distance(&x, &leaders).distance;
        let d1 = hull_distance(&(&r * &x + &b), &moved).distance;
        prop_assert!((d0 - d1).abs() < 1e-8 * (1.0 + d0));
    }

    #[test]
    fn leader_points_and_convex_combinations_are_inside(leaders in vecs(3, 5), w in prop::collection::vec(0.01f64..1.0, 5)) {
        let m = leaders.len();
        let s: f64 = w[..m].iter().sum();
        let x = leaders.iter().zip(&w).fold(DVector::zeros(3), |acc, (l, wi)| acc + l * (*wi / s));
        prop_assert!(hull_distance(&x, &leaders).distance < 1e-8);
        prop_assert!(containment_error(&leaders, &leaders) < 1e-8);
    }
}
