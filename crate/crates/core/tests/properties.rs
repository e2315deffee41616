#[path = "common/oracles.rs"]
mod oracles;

use graddiv::diversity::{pairwise_stats_from_gradients, path_disagreement, stats_from_gradients};
use graddiv::linalg::{norm2_sq, project_l2_ball, sigma_max};
use graddiv::problems::{Dataset, LossModel};
use graddiv::stability::normalized_distance;
use ndarray::{Array1, Array2};
use proptest::prelude::*;

fn fixed_width(max_n: usize, d: usize) -> impl Strategy<Value = Array2<f64>> {
    (1..=max_n)
        .prop_flat_map(move |n| prop::collection::vec(-10.0f64..10.0, n * d).prop_map(move |v| Array2::from_shape_vec((n, d), v).unwrap()))
}

fn matrix(max_n: usize, max_d: usize) -> impl Strategy<Value = Array2<f64>> {
    (1..=max_n, 1..=max_d)
        .prop_flat_map(|(n, d)| prop::collection::vec(-10.0f64..10.0, n * d).prop_map(move |v| Array2::from_shape_vec((n, d), v).unwrap()))
}

proptest! {
    #[test]
    fn batch_bound_at_least_one(g in matrix(12, 6)) {
        let s = stats_from_gradients(&g);
        prop_assert!(s.bs >= 1.0 - 1e-12 || s.degenerate);
        prop_assert!(s.bs <= f64::INFINITY);
        let p = pairwise_stats_from_gradients(&g);
        prop_assert!(path_disagreement(&s, &p) <= 1e-8);
    }

    #[test]
    fn batch_bound_is_scale_invariant(g in matrix(8, 4), c in 0.01f64..100.0) {
        let a = stats_from_gradients(&g);
        let b = stats_from_gradients(&(&g * c));
        if !a.degenerate && !b.degenerate {
            prop_assert!((a.bs - b.bs).abs() <= 1e-8 * a.bs);
        }
    }

    #[test]
    fn row_permutation_does_not_change_bound(g in matrix(8, 4)) {
        let mut rev = g.clone();
        rev.invert_axis(ndarray::Axis(0));
        let a = stats_from_gradients(&g);
        let b = stats_from_gradients(&rev);
        prop_assert!(a.degenerate == b.degenerate);
        if !a.degenerate {
            prop_assert!((a.bs - b.bs).abs() <= 1e-9 * a.bs);
        }
    }

    #[test]
    fn projection_lands_in_ball(v in prop::collection::vec(-50.0f64..50.0, 1..6), r in 0.1f64..5.0) {
        let mut w = Array1::from(v.clone());
        project_l2_ball(&mut w, r);
        prop_assert!(norm2_sq(w.view()).sqrt() <= r * (1.0 + 1e-12));
        let orig = Array1::from(v);
        if norm2_sq(orig.view()).sqrt() <= r {
            prop_assert_eq!(w, orig);
        }
    }

    #[test]
    fn spectral_norm_matches_svd(x in matrix(6, 5)) {
        let est = sigma_max(x.view(), 1e-12, 20_000, 1);
        let dense = oracles::sigma_max_dense(&x);
        prop_assert!((est.sigma_max - dense).abs() <= 1e-6 * dense.max(1e-12));
    }

    #[test]
    fn normalized_distance_in_unit_interval(a in prop::collection::vec(-5.0f64..5.0, 3), b in prop::collection::vec(-5.0f64..5.0, 3)) {
        let nd = normalized_distance(Array1::from(a).view(), Array1::from(b).view());
        prop_assert!((0.0..=1.0).contains(&nd));
    }

    #[test]
    fn csv_round_trip(x in matrix(5, 3), labels in prop::collection::vec(-3.0f64..3.0, 5)) {
        let n = x.nrows();
        let data = Dataset::new(x, Array1::from(labels[..n].to_vec())).unwrap();
        let mut buf = Vec::new();
        data.write_csv(&mut buf).unwrap();
        let back = Dataset::read_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(back, data);
    }

    #[test]
    fn logistic_gradient_norm_bounded_by_row_norm(x in fixed_width(4, 3), w in prop::collection::vec(-20.0f64..20.0, 3)) {
        let n = x.nrows();
        let labels = Array1::from_iter((0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }));
        let data = Dataset::new(x, labels).unwrap();
        let w = Array1::from(w);
        for i in 0..n {
            let g = LossModel::Logistic.gradient(&data, i, w.view()).unwrap();
            prop_assert!(norm2_sq(g.view()) <= norm2_sq(data.row(i)) * (1.0 + 1e-12));
        }
    }
}
