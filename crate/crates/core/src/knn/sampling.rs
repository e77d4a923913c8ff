use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::NeighborGraph;
use crate::error::{CamelError, Result};

/// `m` distant (negative) samples per point, flat `N x m`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairSampling {
    m: usize,
    distant: Vec<usize>,
    seed: u64,
}

impl PairSampling {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n_points(&self) -> usize {
        self.distant.len().checked_div(self.m).unwrap_or(0)
    }

    pub fn distant(&self, i: usize) -> &[usize] {
        &self.distant[i * self.m..(i + 1) * self.m]
    }

    pub fn all_distant(&self) -> &[usize] {
        &self.distant
    }

    /// Sampling with no distant points (pure attraction systems).
    pub fn empty() -> Self {
        Self {
            m: 0,
            distant: Vec::new(),
            seed: 0,
        }
    }

    /// Builds a sampling from explicit lists, all of one length.
    pub fn from_lists(lists: &[Vec<usize>], seed: u64) -> Result<Self> {
        let m = lists.first().map_or(0, Vec::len);
        if lists.iter().any(|l| l.len() != m) {
            return Err(CamelError::Dimension("ragged distant-point lists".into()));
        }
        Ok(Self {
            m,
            distant: lists.concat(),
            seed,
        })
    }

    /// Rows of `self` followed by rows of `other`.
    pub fn stacked(&self, other: &PairSampling) -> Result<PairSampling> {
        if self.m != other.m {
            return Err(CamelError::Dimension(format!(
                "cannot stack samplings with m = {} and m = {}",
                self.m, other.m
            )));
        }
        let mut distant = self.distant.clone();
        distant.extend_from_slice(&other.distant);
        Ok(PairSampling {
            m: self.m,
            distant,
            seed: self.seed,
        })
    }

    /// True when no row hits its own point or one of its neighbors.
    pub fn is_consistent_with(&self, graph: &NeighborGraph) -> bool {
        (0..self.n_points().min(graph.n_points())).all(|i| {
            self.distant(i)
                .iter()
                .all(|j| *j != i && !graph.neighbors(i).contains(j))
        })
    }
}

pub(crate) fn point_rng(seed: u64, i: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i as u64);
    rng
}

/// Uniform sample of `m` distinct indices from `0..pool` avoiding `excluded`
/// (sorted, distinct, all `< pool`).
fn sample_row(pool: usize, excluded: &[usize], m: usize, rng: &mut ChaCha8Rng, out: &mut [usize]) {
    let available = pool - excluded.len();
    if m * 3 >= available {
        // dense regime: partial Fisher-Yates over the explicit candidate list
        let mut cands: Vec<usize> = (0..pool)
            .filter(|j| excluded.binary_search(j).is_err())
            .collect();
        for s in 0..m {
            let r = rng.random_range(s..cands.len());
            cands.swap(s, r);
            out[s] = cands[s];
        }
        return;
    }
    let mut filled = 0;
    while filled < m {
        let j = rng.random_range(0..pool);
        if excluded.binary_search(&j).is_ok() || out[..filled].contains(&j) {
            continue;
        }
        out[filled] = j;
        filled += 1;
    }
}

/// Draws `m` distant points per point uniformly without replacement from the
/// points that are neither the point itself nor one of its neighbors.
pub fn sample_distant(graph: &NeighborGraph, m: usize, seed: u64) -> Result<PairSampling> {
    let n = graph.n_points();
    let k = graph.k();
    if m + k + 1 > n {
        return Err(CamelError::InvalidParameter(format!(
            "m = {m} distant samples need N >= m + k + 1 = {}, got N = {n}",
            m + k + 1
        )));
    }
    let mut distant = vec![0usize; n * m];
    if m > 0 {
        distant.par_chunks_mut(m).enumerate().for_each(|(i, slot)| {
            let mut excluded: Vec<usize> = graph.neighbors(i).to_vec();
            excluded.push(i);
            excluded.sort_unstable();
            excluded.dedup();
            let mut rng = point_rng(seed, i);
            sample_row(n, &excluded, m, &mut rng, slot);
        });
    }
    Ok(PairSampling { m, distant, seed })
}

/// Distant samples for query points whose neighbor lists index a reference
/// set of `n_ref` points; samples are drawn from the references only.
pub fn sample_distant_from_reference(
    queries: &NeighborGraph,
    n_ref: usize,
    m: usize,
    seed: u64,
) -> Result<PairSampling> {
    let k = queries.k();
    if m + k > n_ref {
        return Err(CamelError::InvalidParameter(format!(
            "m = {m} distant samples need at least m + k = {} references, got {n_ref}",
            m + k
        )));
    }
    let q = queries.n_points();
    let mut distant = vec![0usize; q * m];
    if m > 0 {
        distant.par_chunks_mut(m).enumerate().for_each(|(i, slot)| {
            let mut excluded: Vec<usize> = queries.neighbors(i).to_vec();
            excluded.sort_unstable();
            excluded.dedup();
            let mut rng = point_rng(seed, i);
            sample_row(n_ref, &excluded, m, &mut rng, slot);
        });
    }
    Ok(PairSampling { m, distant, seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knn::{build_knn, KnnMode};
    use ndarray::Array2;
    use rand_distr::StandardNormal;

    fn graph(n: usize, k: usize) -> (Array2<f64>, NeighborGraph) {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = Array2::from_shape_fn((n, 2), |_| rng.sample(StandardNormal));
        let g = build_knn(x.view(), k, KnnMode::Exact, 0).unwrap();
        (x, g)
    }

    #[test]
    fn forced_set_when_pool_is_exact() {
        let (_, g) = graph(5, 2);
        let s = sample_distant(&g, 2, 1).unwrap();
        for i in 0..5 {
            let mut got = s.distant(i).to_vec();
            got.sort_unstable();
            let mut expect: Vec<usize> = (0..5)
                .filter(|j| *j != i && !g.neighbors(i).contains(j))
                .collect();
            expect.sort_unstable();
            assert_eq!(got, expect);
        }
    }

    #[test]
    fn reproducible_under_seed() {
        let (_, g) = graph(200, 10);
        let a = sample_distant(&g, 30, 7).unwrap();
        let b = sample_distant(&g, 30, 7).unwrap();
        assert_eq!(a, b);
        let c = sample_distant(&g, 30, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn never_hits_self_or_neighbors() {
        let (_, g) = graph(300, 10);
        let s = sample_distant(&g, 30, 3).unwrap();
        assert!(s.is_consistent_with(&g));
        for i in 0..300 {
            let mut row = s.distant(i).to_vec();
            row.sort_unstable();
            row.dedup();
            assert_eq!(row.len(), 30);
        }
    }

    #[test]
    fn inclusion_frequency_is_uniform() {
        // 200 reseeds of N = 1000, m = 30: each eligible index of point 0 is
        // drawn Binomial(200, 30 / 989) times
        let (_, g) = graph(1000, 10);
        let pool = 1000 - 10 - 1;
        let p = 30.0 / pool as f64;
        let (mean, sd) = (200.0 * p, (200.0 * p * (1.0 - p)).sqrt());
        for point in [0usize, 517] {
            let mut counts = vec![0usize; 1000];
            for seed in 0..200 {
                let s = sample_distant(&g, 30, seed).unwrap();
                for &j in s.distant(point) {
                    counts[j] += 1;
                }
            }
            let eligible: Vec<usize> = (0..1000)
                .filter(|j| *j != point && !g.neighbors(point).contains(j))
                .collect();
            let within3 = eligible
                .iter()
                .filter(|j| (counts[**j] as f64 - mean).abs() <= 3.0 * sd)
                .count();
            assert!(within3 as f64 >= 0.99 * eligible.len() as f64, "{within3}");
            assert!(eligible
                .iter()
                .all(|j| (counts[*j] as f64 - mean).abs() <= 5.0 * sd));
            assert_eq!(counts.iter().sum::<usize>(), 200 * 30);
        }
    }

    #[test]
    fn too_many_samples_rejected() {
        let (_, g) = graph(10, 3);
        assert!(sample_distant(&g, 7, 0).is_err());
        assert!(sample_distant(&g, 6, 0).is_ok());
    }

    #[test]
    fn reference_sampling_avoids_neighbors() {
        let (x, _) = graph(100, 5);
        let q = x.slice(ndarray::s![..10, ..]).to_owned();
        let qg = crate::knn::knn_of_queries(q.view(), x.view(), 5, KnnMode::Exact, 0).unwrap();
        let s = sample_distant_from_reference(&qg, 100, 20, 1).unwrap();
        for i in 0..10 {
            assert!(s
                .distant(i)
                .iter()
                .all(|j| !qg.neighbors(i).contains(j) && *j < 100));
        }
        assert!(sample_distant_from_reference(&qg, 100, 96, 1).is_err());
    }
}
