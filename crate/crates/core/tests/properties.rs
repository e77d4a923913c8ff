//! Property tests over random point clouds.

use approx::assert_abs_diff_eq;
use camel::curvature::camel_curvature;
use camel::dataset::{preprocess, DataMatrix};
use camel::force_field::{gradient, pareto_kernel, ForceParams, ForceSystem};
use camel::knn::{build_knn, sample_distant, KnnMode};
use camel::linalg::procrustes_disparity;
use camel::metrics::coranking;
use ndarray::{Array2, Axis};
use proptest::prelude::*;

/// `n x d` matrices with entries in `[-10, 10]`.
fn cloud(n: std::ops::Range<usize>, d: usize) -> impl Strategy<Value = Array2<f64>> {
    n.prop_flat_map(move |n| {
        prop::collection::vec(-10.0..10.0f64, n * d)
            .prop_map(move |v| Array2::from_shape_vec((n, d), v).unwrap())
    })
}

fn rotate2(y: &Array2<f64>, theta: f64) -> Array2<f64> {
    let (c, s) = (theta.cos(), theta.sin());
    let r = ndarray::array![[c, s], [-s, c]];
    y.dot(&r)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn curvature_is_similarity_invariant(
        x in cloud(12..30, 2),
        theta in 0.0..std::f64::consts::TAU,
        scale in 0.1..10.0f64,
        shift in (-50.0..50.0f64, -50.0..50.0f64),
    ) {
        let g = build_knn(x.view(), 4, KnnMode::Exact, 0).unwrap();
        let mut moved = rotate2(&x, theta) * scale;
        moved.column_mut(0).mapv_inplace(|v| v + shift.0);
        moved.column_mut(1).mapv_inplace(|v| v + shift.1);
        let a = camel_curvature(x.view(), &g);
        let b = camel_curvature(moved.view(), &g);
        for (u, v) in a.as_flat().iter().zip(b.as_flat()) {
            prop_assert!((u - v).abs() < 1e-8, "{u} vs {v}");
        }
    }

    #[test]
    fn curvature_never_exceeds_one(x in cloud(8..40, 3)) {
        let g = build_knn(x.view(), 3, KnnMode::Exact, 0).unwrap();
        prop_assert!(camel_curvature(x.view(), &g).as_flat().iter().all(|k| *k <= 1.0 + 1e-12));
    }

    #[test]
    fn field_is_translation_and_rotation_equivariant(
        x in cloud(20..40, 3),
        y in cloud(40..41, 2),
        theta in 0.0..std::f64::consts::TAU,
        shift in (-20.0..20.0f64, -20.0..20.0f64),
    ) {
        let n = x.nrows();
        let y = y.slice(ndarray::s![..n, ..]).to_owned();
        let g = build_knn(x.view(), 4, KnnMode::Exact, 0).unwrap();
        let s = sample_distant(&g, 5, 1).unwrap();
        let sys = ForceSystem::new(x.view(), &g, &s, ForceParams::default(), None).unwrap();
        let f = gradient(y.view(), &sys, false).unwrap().grads;

        let mut shifted = y.clone();
        shifted.column_mut(0).mapv_inplace(|v| v + shift.0);
        shifted.column_mut(1).mapv_inplace(|v| v + shift.1);
        let f_shift = gradient(shifted.view(), &sys, false).unwrap().grads;
        for (a, b) in f.iter().zip(f_shift.iter()) {
            prop_assert!((a - b).abs() < 1e-7 * (1.0 + a.abs()), "{a} vs {b}");
        }

        let f_rot = gradient(rotate2(&y, theta).view(), &sys, false).unwrap().grads;
        let expected = rotate2(&f, theta);
        for (a, b) in expected.iter().zip(f_rot.iter()) {
            prop_assert!((a - b).abs() < 1e-7 * (1.0 + a.abs()), "{a} vs {b}");
        }
    }

    #[test]
    fn pareto_kernel_is_decreasing(a in 0.0..1e4f64, b in 0.0..1e4f64, sigma in 0.1..50.0f64) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(pareto_kernel(lo, sigma, 2.0) >= pareto_kernel(hi, sigma, 2.0));
        prop_assert!(pareto_kernel(hi, sigma, 2.0) > 0.0 && pareto_kernel(lo, sigma, 2.0) <= 1.0);
    }

    #[test]
    fn preprocess_is_idempotent(x in cloud(3..30, 4)) {
        let m = DataMatrix::new(x).unwrap();
        let (once, _) = preprocess(&m).unwrap();
        let (twice, _) = preprocess(&once).unwrap();
        for (a, b) in once.values().iter().zip(twice.values().iter()) {
            prop_assert!((a - b).abs() < 1e-10);
        }
        let mean = once.values().mean_axis(Axis(0)).unwrap();
        prop_assert!(mean.iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn neighbor_lists_are_sorted_and_exclude_self(x in cloud(10..60, 3), k in 1usize..6) {
        let g = build_knn(x.view(), k, KnnMode::Exact, 0).unwrap();
        for i in 0..g.n_points() {
            prop_assert!(!g.neighbors(i).contains(&i));
            prop_assert!(g.distances(i).windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn distant_samples_avoid_neighbors(x in cloud(30..60, 2), m in 1usize..10, seed in any::<u64>()) {
        let g = build_knn(x.view(), 5, KnnMode::Exact, 0).unwrap();
        let s = sample_distant(&g, m, seed).unwrap();
        for i in 0..g.n_points() {
            let d = s.distant(i);
            prop_assert_eq!(d.len(), m);
            prop_assert!(d.iter().all(|l| *l != i && !g.neighbors(i).contains(l)));
            let mut u = d.to_vec();
            u.sort_unstable();
            u.dedup();
            prop_assert_eq!(u.len(), m);
        }
    }

    #[test]
    fn coranking_margins_are_n(x in cloud(5..25, 3), y in cloud(25..26, 2)) {
        let n = x.nrows();
        let y = y.slice(ndarray::s![..n, ..]).to_owned();
        let q = coranking(x.view(), y.view()).unwrap();
        let q = q.counts();
        prop_assert!(q.sum_axis(Axis(0)).iter().all(|c| *c as usize == n));
        prop_assert!(q.sum_axis(Axis(1)).iter().all(|c| *c as usize == n));
    }

    #[test]
    fn procrustes_ignores_similarity_transforms(
        y in cloud(5..30, 2),
        theta in 0.0..std::f64::consts::TAU,
        scale in 0.1..10.0f64,
    ) {
        let other = rotate2(&y, theta) * scale + 3.0;
        prop_assume!(y.std_axis(Axis(0), 0.0).iter().all(|s| *s > 1e-3));
        assert_abs_diff_eq!(procrustes_disparity(y.view(), other.view()), 0.0, epsilon = 1e-9);
    }
}
