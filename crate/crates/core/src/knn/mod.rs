//! k-nearest-neighbor graphs (exact and random-projection forest) and
//! negative sampling of distant points.

mod rp_forest;
mod sampling;

pub use rp_forest::RpForest;
pub use sampling::{sample_distant, sample_distant_from_reference, PairSampling};

use std::io::Write;
use std::path::Path;

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;

use crate::error::{CamelError, Result};
use crate::linalg::{dist, sq_dist, Rows};

/// Above this many points [`KnnMode::Auto`] switches to the approximate index.
pub const DEFAULT_EXACT_CUTOVER: usize = 5000;
pub const DEFAULT_K: usize = 10;
pub const DEFAULT_M: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KnnMode {
    Exact,
    Approx,
    /// Exact up to `cutover` points, approximate above.
    Auto {
        cutover: usize,
    },
}

impl Default for KnnMode {
    fn default() -> Self {
        KnnMode::Auto {
            cutover: DEFAULT_EXACT_CUTOVER,
        }
    }
}

impl KnnMode {
    pub fn is_exact_for(self, n: usize) -> bool {
        match self {
            KnnMode::Exact => true,
            KnnMode::Approx => false,
            KnnMode::Auto { cutover } => n <= cutover,
        }
    }
}

/// Directed kNN graph: `k` neighbors per point, ascending distance, ties by
/// lower index, plus per-point neighbor centroids and mean neighbor distance.
///
/// Neighbor indices normally refer to the same point set. For query graphs
/// (see [`knn_of_queries`]) they refer to a separate reference set, and the
/// centroids are means of reference coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborGraph {
    k: usize,
    neighbors: Vec<usize>,
    distances: Vec<f64>,
    centroids: Array2<f64>,
    mean_neighbor_dist: Vec<f64>,
}

impl NeighborGraph {
    /// Builds a graph from explicit neighbor lists. Rows of `points` are the
    /// sources, rows of `refs` the targets (pass the same matrix twice for an
    /// ordinary graph). Every list must have the same length.
    pub fn from_lists(
        points: ArrayView2<'_, f64>,
        refs: ArrayView2<'_, f64>,
        lists: &[Vec<usize>],
    ) -> Result<Self> {
        let k = lists.first().map_or(0, Vec::len);
        if lists.len() != points.nrows() {
            return Err(CamelError::Dimension(format!(
                "{} neighbor lists for {} points",
                lists.len(),
                points.nrows()
            )));
        }
        if points.ncols() != refs.ncols() {
            return Err(CamelError::Dimension(
                "points and references differ in dimension".into(),
            ));
        }
        let pts = points.as_standard_layout();
        let rfs = refs.as_standard_layout();
        let (p_rows, r_rows) = (Rows::from_view(pts.view()), Rows::from_view(rfs.view()));
        let mut neighbors = Vec::with_capacity(lists.len() * k);
        let mut distances = Vec::with_capacity(lists.len() * k);
        for (i, list) in lists.iter().enumerate() {
            if list.len() != k {
                return Err(CamelError::Dimension(format!(
                    "point {i} has {} neighbors, expected {k}",
                    list.len()
                )));
            }
            for &j in list {
                if j >= refs.nrows() {
                    return Err(CamelError::Dimension(format!(
                        "neighbor index {j} out of range"
                    )));
                }
                neighbors.push(j);
                distances.push(dist(p_rows.get(i), r_rows.get(j)));
            }
        }
        Ok(Self::assemble(k, neighbors, distances, r_rows))
    }

    fn assemble(k: usize, neighbors: Vec<usize>, distances: Vec<f64>, refs: Rows<'_>) -> Self {
        let n = neighbors.len().checked_div(k).unwrap_or(0);
        let centroids = neighbor_centroids(&neighbors, k, n, refs);
        let mean_neighbor_dist = if k == 0 {
            Vec::new()
        } else {
            distances
                .chunks(k)
                .map(|c| c.iter().sum::<f64>() / k as f64)
                .collect()
        };
        Self {
            k,
            neighbors,
            distances,
            centroids,
            mean_neighbor_dist,
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_points(&self) -> usize {
        self.centroids.nrows()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i * self.k..(i + 1) * self.k]
    }

    pub fn distances(&self, i: usize) -> &[f64] {
        &self.distances[i * self.k..(i + 1) * self.k]
    }

    pub fn all_neighbors(&self) -> &[usize] {
        &self.neighbors
    }

    pub fn all_distances(&self) -> &[f64] {
        &self.distances
    }

    pub fn centroids(&self) -> &Array2<f64> {
        &self.centroids
    }

    pub fn mean_neighbor_dist(&self, i: usize) -> f64 {
        self.mean_neighbor_dist[i]
    }

    pub fn lists(&self) -> Vec<Vec<usize>> {
        (0..self.n_points())
            .map(|i| self.neighbors(i).to_vec())
            .collect()
    }

    /// Appends the rows of `other` below `self`. Neighbor indices are kept as
    /// they are, so `other` must index into the same reference set.
    pub fn stacked(&self, other: &NeighborGraph) -> Result<NeighborGraph> {
        if self.k != other.k {
            return Err(CamelError::Dimension(format!(
                "cannot stack graphs with k = {} and k = {}",
                self.k, other.k
            )));
        }
        let mut neighbors = self.neighbors.clone();
        neighbors.extend_from_slice(&other.neighbors);
        let mut distances = self.distances.clone();
        distances.extend_from_slice(&other.distances);
        let mut mean_neighbor_dist = self.mean_neighbor_dist.clone();
        mean_neighbor_dist.extend_from_slice(&other.mean_neighbor_dist);
        let centroids = ndarray::concatenate(
            ndarray::Axis(0),
            &[self.centroids.view(), other.centroids.view()],
        )
        .map_err(|e| CamelError::Dimension(e.to_string()))?;
        Ok(NeighborGraph {
            k: self.k,
            neighbors,
            distances,
            centroids,
            mean_neighbor_dist,
        })
    }

    /// Debug dump: one `i,j,rank,distance` line per edge.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::from("i,j,rank,distance\n");
        for i in 0..self.n_points() {
            for (r, (&j, &d)) in self.neighbors(i).iter().zip(self.distances(i)).enumerate() {
                out.push_str(&format!("{i},{j},{r},{d}\n"));
            }
        }
        std::fs::File::create(path)
            .and_then(|mut f| f.write_all(out.as_bytes()))
            .map_err(|e| CamelError::io(path, e))
    }
}

/// Mean of the neighbor rows of `refs` for every source point.
pub fn neighbor_centroids(neighbors: &[usize], k: usize, n: usize, refs: Rows<'_>) -> Array2<f64> {
    let d = refs.dim();
    let mut out = Array2::zeros((n, d));
    if k == 0 {
        return out;
    }
    let inv = 1.0 / k as f64;
    out.as_slice_mut()
        .expect("fresh array")
        .par_chunks_mut(d)
        .enumerate()
        .for_each(|(i, c)| {
            for &j in &neighbors[i * k..(i + 1) * k] {
                for (cv, rv) in c.iter_mut().zip(refs.get(j)) {
                    *cv += rv;
                }
            }
            for cv in c.iter_mut() {
                *cv *= inv;
            }
        });
    out
}

/// Keeps the `k` smallest `(dist2, index)` pairs, ascending with index tie-break.
pub(crate) fn top_k(cands: &mut Vec<(f64, usize)>, k: usize) {
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if cands.len() > k {
        cands.select_nth_unstable_by(k - 1, cmp);
        cands.truncate(k);
    }
    cands.sort_unstable_by(cmp);
}

fn exact_lists(points: Rows<'_>, refs: Rows<'_>, k: usize, exclude_self: bool) -> Vec<usize> {
    let n_ref = refs.len();
    let mut out = vec![0usize; points.len() * k];
    out.par_chunks_mut(k.max(1))
        .enumerate()
        .for_each_init(Vec::new, |cands, (i, slot)| {
            if k == 0 {
                return;
            }
            cands.clear();
            let p = points.get(i);
            for j in 0..n_ref {
                if exclude_self && j == i {
                    continue;
                }
                cands.push((sq_dist(p, refs.get(j)), j));
            }
            top_k(cands, k);
            for (s, c) in slot.iter_mut().zip(cands.iter()) {
                *s = c.1;
            }
        });
    out
}

fn finish(points: Rows<'_>, refs: Rows<'_>, k: usize, neighbors: Vec<usize>) -> NeighborGraph {
    let distances = neighbors
        .par_chunks(k.max(1))
        .enumerate()
        .flat_map_iter(|(i, list)| {
            let p = points.get(i);
            list.iter().map(move |&j| dist(p, refs.get(j)))
        })
        .collect();
    NeighborGraph::assemble(k, neighbors, distances, refs)
}

/// Euclidean kNN graph over the rows of `x`, without self loops.
pub fn build_knn(
    x: ArrayView2<'_, f64>,
    k: usize,
    mode: KnnMode,
    seed: u64,
) -> Result<NeighborGraph> {
    let n = x.nrows();
    if k == 0 || k >= n {
        return Err(CamelError::InvalidParameter(format!(
            "need 1 <= k < N, got k = {k} with N = {n}"
        )));
    }
    let xs = x.as_standard_layout();
    let rows = Rows::from_view(xs.view());
    let lists = if mode.is_exact_for(n) {
        exact_lists(rows, rows, k, true)
    } else {
        RpForest::build(rows, seed).self_knn(k)
    };
    Ok(finish(rows, rows, k, lists))
}

/// Neighbors of each query row among the rows of `refs` (no self exclusion).
pub fn knn_of_queries(
    queries: ArrayView2<'_, f64>,
    refs: ArrayView2<'_, f64>,
    k: usize,
    mode: KnnMode,
    seed: u64,
) -> Result<NeighborGraph> {
    if queries.ncols() != refs.ncols() {
        return Err(CamelError::Dimension(format!(
            "queries have {} features, references {}",
            queries.ncols(),
            refs.ncols()
        )));
    }
    if k == 0 || k > refs.nrows() {
        return Err(CamelError::InvalidParameter(format!(
            "need 1 <= k <= {} references, got {k}",
            refs.nrows()
        )));
    }
    let qs = queries.as_standard_layout();
    let rs = refs.as_standard_layout();
    let (q_rows, r_rows) = (Rows::from_view(qs.view()), Rows::from_view(rs.view()));
    let lists = if mode.is_exact_for(refs.nrows()) {
        exact_lists(q_rows, r_rows, k, false)
    } else {
        RpForest::build(r_rows, seed).query_knn(q_rows, k)
    };
    Ok(finish(q_rows, r_rows, k, lists))
}

/// Average fraction of true neighbors recovered by `approx`.
pub fn recall(approx: &NeighborGraph, exact: &NeighborGraph) -> f64 {
    let n = exact.n_points();
    let k = exact.k();
    let mut hits = 0usize;
    for i in 0..n {
        let truth = exact.neighbors(i);
        hits += approx
            .neighbors(i)
            .iter()
            .filter(|j| truth.contains(j))
            .count();
    }
    hits as f64 / (n * k) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn gaussian(n: usize, d: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((n, d), |_| rng.sample(StandardNormal))
    }

    /// Independent O(N^2 log N) oracle: full sort of every row.
    fn brute_force(
        points: &Array2<f64>,
        refs: &Array2<f64>,
        k: usize,
        same: bool,
    ) -> Vec<Vec<usize>> {
        (0..points.nrows())
            .map(|i| {
                let mut all: Vec<(f64, usize)> = (0..refs.nrows())
                    .filter(|&j| !(same && i == j))
                    .map(|j| {
                        let d: f64 = points
                            .row(i)
                            .iter()
                            .zip(refs.row(j).iter())
                            .map(|(a, b)| (a - b).powi(2))
                            .sum();
                        (d, j)
                    })
                    .collect();
                all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
                all.iter().take(k).map(|p| p.1).collect()
            })
            .collect()
    }

    #[test]
    fn collinear_k1() {
        let x = array![[0.0], [1.0], [3.0]];
        let g = build_knn(x.view(), 1, KnnMode::Exact, 0).unwrap();
        assert_eq!(g.neighbors(0), &[1]);
        assert_eq!(g.neighbors(1), &[0]);
        assert_eq!(g.neighbors(2), &[1]);
        assert_eq!(g.distances(2), &[2.0]);
    }

    #[test]
    fn duplicates_have_zero_distance_and_no_self_loop() {
        let x = array![[1.0, 1.0], [1.0, 1.0], [5.0, 5.0]];
        let g = build_knn(x.view(), 1, KnnMode::Exact, 0).unwrap();
        assert_eq!(g.neighbors(0), &[1]);
        assert_eq!(g.neighbors(1), &[0]);
        assert_eq!(g.distances(0), &[0.0]);
    }

    #[test]
    fn k_must_be_below_n() {
        let x = array![[0.0], [1.0]];
        assert!(build_knn(x.view(), 2, KnnMode::Exact, 0).is_err());
        assert!(build_knn(x.view(), 0, KnnMode::Exact, 0).is_err());
    }

    #[test]
    fn exact_matches_brute_force() {
        for seed in 0..3 {
            let x = gaussian(300, 5, seed);
            let g = build_knn(x.view(), 7, KnnMode::Exact, 0).unwrap();
            assert_eq!(g.lists(), brute_force(&x, &x, 7, true));
            for i in 0..300 {
                let d = g.distances(i);
                assert!(d.windows(2).all(|w| w[0] <= w[1]));
                assert!(!g.neighbors(i).contains(&i));
            }
        }
    }

    #[test]
    fn approx_recall_on_gaussian() {
        let x = gaussian(500, 10, 11);
        let exact = build_knn(x.view(), 10, KnnMode::Exact, 0).unwrap();
        let approx = build_knn(x.view(), 10, KnnMode::Approx, 3).unwrap();
        let r = recall(&approx, &exact);
        assert!(r >= 0.9, "recall {r}");
        for i in 0..500 {
            assert!(!approx.neighbors(i).contains(&i));
            assert!(approx.distances(i).windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn centroids_consistent_with_lists() {
        let x = gaussian(60, 3, 2);
        let g = build_knn(x.view(), 4, KnnMode::Exact, 0).unwrap();
        for i in 0..60 {
            for c in 0..3 {
                let mean: f64 = g.neighbors(i).iter().map(|&j| x[[j, c]]).sum::<f64>() / 4.0;
                assert!((g.centroids()[[i, c]] - mean).abs() < 1e-12);
            }
            let md = g.distances(i).iter().sum::<f64>() / 4.0;
            assert!((g.mean_neighbor_dist(i) - md).abs() < 1e-12);
        }
    }

    #[test]
    fn query_equal_to_reference_is_nearest() {
        let refs = gaussian(50, 4, 3);
        let q = refs.slice(ndarray::s![7..8, ..]).to_owned();
        let g = knn_of_queries(q.view(), refs.view(), 3, KnnMode::Exact, 0).unwrap();
        assert_eq!(g.neighbors(0)[0], 7);
        assert_eq!(g.distances(0)[0], 0.0);
    }

    #[test]
    fn single_reference() {
        let refs = array![[2.0, 2.0]];
        let q = array![[0.0, 0.0], [9.0, -1.0]];
        let g = knn_of_queries(q.view(), refs.view(), 1, KnnMode::Exact, 0).unwrap();
        assert_eq!(g.neighbors(0), &[0]);
        assert_eq!(g.neighbors(1), &[0]);
    }

    #[test]
    fn queries_match_brute_force() {
        let refs = gaussian(500, 6, 4);
        let q = gaussian(100, 6, 5);
        let g = knn_of_queries(q.view(), refs.view(), 8, KnnMode::Exact, 0).unwrap();
        assert_eq!(g.lists(), brute_force(&q, &refs, 8, false));
    }

    #[test]
    fn query_dimension_mismatch() {
        let refs = gaussian(10, 3, 4);
        let q = gaussian(2, 2, 5);
        assert!(matches!(
            knn_of_queries(q.view(), refs.view(), 1, KnnMode::Exact, 0),
            Err(CamelError::Dimension(_))
        ));
    }

    #[test]
    fn empty_query_batch() {
        let refs = gaussian(10, 3, 4);
        let q = Array2::<f64>::zeros((0, 3));
        let g = knn_of_queries(q.view(), refs.view(), 2, KnnMode::Exact, 0).unwrap();
        assert_eq!(g.n_points(), 0);
    }

    #[test]
    fn approx_queries_recall() {
        let refs = gaussian(600, 8, 6);
        let q = gaussian(100, 8, 7);
        let exact = knn_of_queries(q.view(), refs.view(), 10, KnnMode::Exact, 0).unwrap();
        let approx = knn_of_queries(q.view(), refs.view(), 10, KnnMode::Approx, 1).unwrap();
        assert!(recall(&approx, &exact) >= 0.9);
    }

    #[test]
    fn csv_dump() {
        let x = array![[0.0], [1.0], [3.0]];
        let g = build_knn(x.view(), 1, KnnMode::Exact, 0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.csv");
        g.write_csv(&p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text, "i,j,rank,distance\n0,1,0,1\n1,0,0,1\n2,1,0,2\n");
    }
}
