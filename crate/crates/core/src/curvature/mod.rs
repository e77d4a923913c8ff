//! Edge curvature of a kNN graph.
//!
//! The production path uses the centroid approximation
//! `kappa_ij = 1 - |c_i - c_j| / d_ij`, where `c_i` is the mean of the
//! coordinates of point `i`'s neighbors (the point itself excluded). An exact
//! Ollivier-Ricci evaluator over small weighted graphs lives in [`ollivier`]
//! and serves as a validation oracle.

pub mod ollivier;

pub use ollivier::{ollivier_ricci_exact, WeightedGraph, MAX_ORACLE_NODES};

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;

use crate::knn::NeighborGraph;
use crate::linalg::{dist, Rows};

/// Pair distance below which an edge is assigned zero curvature.
pub const EPS_DIST: f64 = 1e-8;

/// Per-edge curvature, one value per (point, neighbor rank), flat `N x k`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeCurvature {
    k: usize,
    kappa: Vec<f64>,
}

impl EdgeCurvature {
    pub fn from_flat(k: usize, kappa: Vec<f64>) -> Self {
        assert!(
            k > 0 && kappa.len().is_multiple_of(k),
            "curvature buffer is not N x k"
        );
        Self { k, kappa }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_points(&self) -> usize {
        self.kappa.len() / self.k
    }

    pub fn get(&self, i: usize, rank: usize) -> f64 {
        self.kappa[i * self.k + rank]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.kappa[i * self.k..(i + 1) * self.k]
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.kappa
    }

    pub fn to_array(&self) -> Array2<f64> {
        Array2::from_shape_vec((self.n_points(), self.k), self.kappa.clone())
            .expect("shape checked at construction")
    }

    /// Unweighted mean over all directed edges.
    pub fn mean(&self) -> f64 {
        if self.kappa.is_empty() {
            return 0.0;
        }
        self.kappa.iter().sum::<f64>() / self.kappa.len() as f64
    }

    /// Rows of `self` followed by rows of `other`.
    pub fn stacked(&self, other: &EdgeCurvature) -> EdgeCurvature {
        assert_eq!(self.k, other.k, "stacking curvatures with different k");
        let mut kappa = self.kappa.clone();
        kappa.extend_from_slice(&other.kappa);
        EdgeCurvature { k: self.k, kappa }
    }
}

/// Centroid curvature of every edge of `graph`, measured in `coords`.
///
/// `coords` may be a different space than the one the graph was built in
/// (for instance the current embedding); centroids and distances are always
/// recomputed from `coords`, so neighbor indices must address its rows.
pub fn camel_curvature(coords: ArrayView2<'_, f64>, graph: &NeighborGraph) -> EdgeCurvature {
    let c = coords.as_standard_layout();
    let rows = Rows::from_view(c.view());
    let k = graph.k();
    let mut kappa = vec![0.0; graph.n_points() * k];
    let mut centroids = vec![0.0; rows.len() * rows.dim()];
    curvature_into(
        rows,
        graph.all_neighbors(),
        k,
        graph.n_points(),
        &mut centroids,
        &mut kappa,
    );
    EdgeCurvature { k, kappa }
}

/// Centroid of the neighbors of every source point. Points with index
/// `>= n_sources` have no neighbor list; their centroid is left at zero and
/// never read.
pub(crate) fn centroids_into(
    rows: Rows<'_>,
    neighbors: &[usize],
    k: usize,
    n_sources: usize,
    out: &mut [f64],
) {
    let d = rows.dim();
    out[..n_sources * d]
        .par_chunks_mut(d)
        .enumerate()
        .for_each(|(i, c)| {
            c.iter_mut().for_each(|v| *v = 0.0);
            for &j in &neighbors[i * k..(i + 1) * k] {
                for (acc, x) in c.iter_mut().zip(rows.get(j)) {
                    *acc += x;
                }
            }
            c.iter_mut().for_each(|v| *v /= k as f64);
        });
}

/// Buffer-reusing form of [`camel_curvature`] used inside the optimizer loop.
///
/// Edges whose target has no neighbor list of its own (a reference point
/// outside the source range) use that target's coordinates in place of its
/// centroid.
pub(crate) fn curvature_into(
    rows: Rows<'_>,
    neighbors: &[usize],
    k: usize,
    n_sources: usize,
    centroid_buf: &mut [f64],
    out: &mut [f64],
) {
    let d = rows.dim();
    centroids_into(rows, neighbors, k, n_sources, centroid_buf);
    let centroids: &[f64] = centroid_buf;
    out[..n_sources * k]
        .par_chunks_mut(k)
        .enumerate()
        .for_each(|(i, slot)| {
            let ci = &centroids[i * d..(i + 1) * d];
            let yi = rows.get(i);
            for (r, &j) in neighbors[i * k..(i + 1) * k].iter().enumerate() {
                let dij = dist(yi, rows.get(j));
                slot[r] = if dij < EPS_DIST {
                    0.0
                } else {
                    let cj = if j < n_sources {
                        &centroids[j * d..(j + 1) * d]
                    } else {
                        rows.get(j)
                    };
                    1.0 - dist(ci, cj) / dij
                };
            }
        });
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knn::{build_knn, KnnMode};
    use ndarray::array;

    fn graph_of(x: &Array2<f64>, k: usize) -> NeighborGraph {
        build_knn(x.view(), k, KnnMode::Exact, 0).unwrap()
    }

    #[test]
    fn coinciding_centroids_give_unit_curvature() {
        // c_0 = (x_1 + x_2) / 2 = (x_0 + x_3) / 2 = c_1
        let x = array![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
        let lists = vec![vec![1, 2], vec![0, 3], vec![0, 3], vec![1, 2]];
        let g = NeighborGraph::from_lists(x.view(), x.view(), &lists).unwrap();
        let kappa = camel_curvature(x.view(), &g);
        assert!((kappa.get(0, 0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn centroid_at_own_point_gives_flat_curvature() {
        let x = array![[0.0, 0.0], [1.0, 0.0], [-1.0, 0.0], [2.0, 0.0]];
        let lists = vec![vec![1, 2], vec![0, 3], vec![0, 1], vec![1, 0]];
        let g = NeighborGraph::from_lists(x.view(), x.view(), &lists).unwrap();
        let kappa = camel_curvature(x.view(), &g);
        assert!(kappa.get(0, 0).abs() < 1e-15);
        assert!(kappa.get(1, 0).abs() < 1e-15);
    }

    #[test]
    fn chain_interior_edge_is_flat() {
        let x = array![[0.0], [1.0], [2.0], [3.0], [4.0]];
        let lists = vec![vec![1, 2], vec![0, 2], vec![1, 3], vec![2, 4], vec![3, 2]];
        let g = NeighborGraph::from_lists(x.view(), x.view(), &lists).unwrap();
        let kappa = camel_curvature(x.view(), &g);
        // edge (1, 2): c_1 = 1, c_2 = 2, d = 1
        assert!(kappa.get(1, 1).abs() < 1e-15);
        assert!(kappa.get(2, 0).abs() < 1e-15);
    }

    #[test]
    fn curvature_never_exceeds_one() {
        let x = crate::dataset::gen_swiss_roll(300, 0.1, 4).0.into_inner();
        let g = graph_of(&x, 10);
        let kappa = camel_curvature(x.view(), &g);
        assert!(kappa.as_flat().iter().all(|v| *v <= 1.0 && v.is_finite()));
    }

    #[test]
    fn coincident_endpoints_give_zero() {
        let x = array![[0.0, 0.0], [0.0, 0.0], [5.0, 5.0]];
        let g = graph_of(&x, 1);
        let kappa = camel_curvature(x.view(), &g);
        assert_eq!(kappa.get(0, 0), 0.0);
        assert_eq!(kappa.get(1, 0), 0.0);
    }
}
