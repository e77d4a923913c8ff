//! Neighbor-list metrics: NPP, NNWR and the curvature similarity score.

use ndarray::ArrayView2;

use crate::curvature::camel_curvature;
use crate::error::{CamelError, Result};
use crate::knn::{build_knn, KnnMode, NeighborGraph};

/// Exact kNN graphs of both spaces.
pub(crate) fn graphs(
    x: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
    k: usize,
) -> Result<(NeighborGraph, NeighborGraph)> {
    if x.nrows() != y.nrows() {
        return Err(CamelError::Dimension(format!(
            "{} high-dimensional rows against {} embedding rows",
            x.nrows(),
            y.nrows()
        )));
    }
    Ok((
        build_knn(x, k, KnnMode::Exact, 0)?,
        build_knn(y, k, KnnMode::Exact, 0)?,
    ))
}

fn overlaps<'a>(a: &'a NeighborGraph, b: &'a NeighborGraph) -> impl Iterator<Item = usize> + 'a {
    (0..a.n_points()).map(move |i| {
        a.neighbors(i)
            .iter()
            .filter(|j| b.neighbors(i).contains(j))
            .count()
    })
}

/// Mean fraction of each point's high-dimensional neighbors that are also
/// embedding neighbors.
pub fn npp_from_graphs(hd: &NeighborGraph, ld: &NeighborGraph) -> f64 {
    let k = hd.k() as f64;
    overlaps(hd, ld).map(|c| c as f64 / k).sum::<f64>() / hd.n_points() as f64
}

/// Fraction of points whose neighbor lists disagree on at most half of
/// their entries (strictly more than half counts as wrong).
pub fn nnwr_from_graphs(hd: &NeighborGraph, ld: &NeighborGraph) -> f64 {
    let k = hd.k();
    let wrong = overlaps(hd, ld).filter(|&c| 2 * (k - c) > k).count();
    1.0 - wrong as f64 / hd.n_points() as f64
}

pub fn npp(x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>, k: usize) -> Result<f64> {
    let (hd, ld) = graphs(x, y, k)?;
    Ok(npp_from_graphs(&hd, &ld))
}

pub fn nnwr(x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>, k: usize) -> Result<f64> {
    let (hd, ld) = graphs(x, y, k)?;
    Ok(nnwr_from_graphs(&hd, &ld))
}

/// Mean CAMEL curvature of both spaces, each over its own kNN graph.
pub fn mean_curvatures(
    x: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
    hd: &NeighborGraph,
    ld: &NeighborGraph,
) -> (f64, f64) {
    let xs = x.as_standard_layout();
    let ys = y.as_standard_layout();
    (
        camel_curvature(xs.view(), hd).mean(),
        camel_curvature(ys.view(), ld).mean(),
    )
}

/// `exp(-|C_hd - C_ld|)` of the mean curvatures.
pub fn curv_simi_score(c_hd: f64, c_ld: f64) -> f64 {
    (-(c_hd - c_ld).abs()).exp()
}

pub fn curv_simi(x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>, k: usize) -> Result<f64> {
    let (hd, ld) = graphs(x, y, k)?;
    let (a, b) = mean_curvatures(x, y, &hd, &ld);
    Ok(curv_simi_score(a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};
    use rand::{seq::SliceRandom, Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, d: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((n, d), |_| rng.random::<f64>())
    }

    #[test]
    fn identical_spaces_score_one() {
        let x = random(50, 3, 0);
        assert_eq!(npp(x.view(), x.view(), 5).unwrap(), 1.0);
        assert_eq!(nnwr(x.view(), x.view(), 5).unwrap(), 1.0);
        assert_eq!(curv_simi(x.view(), x.view(), 5).unwrap(), 1.0);
    }

    #[test]
    fn npp_matches_set_intersection() {
        let x = random(50, 4, 1);
        let y = random(50, 2, 2);
        let (hd, ld) = graphs(x.view(), y.view(), 5).unwrap();
        let mut total = 0usize;
        for i in 0..50 {
            let a: std::collections::HashSet<_> = hd.neighbors(i).iter().collect();
            let b: std::collections::HashSet<_> = ld.neighbors(i).iter().collect();
            total += a.intersection(&b).count();
        }
        assert!((npp(x.view(), y.view(), 5).unwrap() - total as f64 / 250.0).abs() < 1e-15);
    }

    #[test]
    fn disjoint_lists_give_zero_npp() {
        // two tight pairs; the embedding swaps partners
        let x = array![[0.0], [0.1], [10.0], [10.1]];
        let y = array![[0.0], [10.0], [0.1], [10.1]];
        assert_eq!(npp(x.view(), y.view(), 1).unwrap(), 0.0);
        assert_eq!(nnwr(x.view(), y.view(), 1).unwrap(), 0.0);
    }

    #[test]
    fn half_wrong_is_not_wrong() {
        // k = 2 and each point keeps exactly one of its two neighbors
        let hd = NeighborGraph::from_lists(
            array![[0.0], [1.0], [2.0], [3.0]].view(),
            array![[0.0], [1.0], [2.0], [3.0]].view(),
            &[vec![1, 2], vec![0, 2], vec![1, 3], vec![2, 1]],
        )
        .unwrap();
        let ld = NeighborGraph::from_lists(
            array![[0.0], [1.0], [2.0], [3.0]].view(),
            array![[0.0], [1.0], [2.0], [3.0]].view(),
            &[vec![1, 3], vec![0, 3], vec![1, 0], vec![2, 0]],
        )
        .unwrap();
        assert_eq!(npp_from_graphs(&hd, &ld), 0.5);
        assert_eq!(nnwr_from_graphs(&hd, &ld), 1.0);
    }

    #[test]
    fn shuffled_embedding_is_mostly_wrong() {
        let x = random(100, 3, 3);
        let mut idx: Vec<usize> = (0..100).collect();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(4));
        let y = x.select(ndarray::Axis(0), &idx);
        assert!(nnwr(x.view(), y.view(), 10).unwrap() < 0.05);
    }

    #[test]
    fn unit_curvature_gap_scores_inverse_e() {
        assert!((curv_simi_score(0.7, -0.3) - (-1f64).exp()).abs() < 1e-15);
    }
}
