//! Distance ranks, the co-ranking matrix and the neighborhood scores derived
//! from it (trustworthiness, continuity, LCMC and the area under the
//! rescaled quality curve).
//!
//! Ranks are taken over full pairwise Euclidean distances, ties broken by the
//! lower index, and run from 1 (nearest) to N-1.

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;

use crate::error::{CamelError, Result};
use crate::linalg::{sq_dist, Rows};

/// Ranks of every other point as seen from `i`: `out[j]` is the rank of `j`
/// (`out[i]` is left at 0).
pub(crate) fn ranks_from(rows: Rows<'_>, i: usize, order: &mut Vec<(f64, usize)>, out: &mut [u32]) {
    let p = rows.get(i);
    order.clear();
    order.extend(
        (0..rows.len())
            .filter(|&j| j != i)
            .map(|j| (sq_dist(p, rows.get(j)), j)),
    );
    order.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    out[i] = 0;
    for (r, &(_, j)) in order.iter().enumerate() {
        out[j] = r as u32 + 1;
    }
}

fn check_pair(x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>) -> Result<()> {
    if x.nrows() != y.nrows() {
        return Err(CamelError::Dimension(format!(
            "{} high-dimensional rows against {} embedding rows",
            x.nrows(),
            y.nrows()
        )));
    }
    if x.nrows() < 3 {
        return Err(CamelError::InvalidParameter(
            "rank metrics need at least 3 points".into(),
        ));
    }
    Ok(())
}

/// Dense co-ranking matrix `Q[r_hd - 1][r_ld - 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoRankingMatrix {
    q: Array2<u32>,
}

/// Builds the dense co-ranking matrix. Memory grows as `N^2`, so this is for
/// small instances; [`NeighborhoodScores::compute`] covers large ones.
pub fn coranking(x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>) -> Result<CoRankingMatrix> {
    check_pair(x, y)?;
    let n = x.nrows();
    let (xs, ys) = (x.as_standard_layout(), y.as_standard_layout());
    let (xr, yr) = (Rows::from_view(xs.view()), Rows::from_view(ys.view()));
    let mut q = Array2::<u32>::zeros((n - 1, n - 1));
    let mut order = Vec::with_capacity(n);
    let (mut rh, mut rl) = (vec![0u32; n], vec![0u32; n]);
    for i in 0..n {
        ranks_from(xr, i, &mut order, &mut rh);
        ranks_from(yr, i, &mut order, &mut rl);
        for j in (0..n).filter(|&j| j != i) {
            q[[rh[j] as usize - 1, rl[j] as usize - 1]] += 1;
        }
    }
    Ok(CoRankingMatrix { q })
}

impl CoRankingMatrix {
    pub fn n_points(&self) -> usize {
        self.q.nrows() + 1
    }

    /// The matrix itself, indexed from rank 1 at position 0.
    pub fn counts(&self) -> &Array2<u32> {
        &self.q
    }

    /// Neighborhood scores at size `k` read off the matrix.
    pub fn scores(&self, k: usize) -> Result<NeighborhoodScores> {
        let n = self.n_points();
        check_k(k, n)?;
        let m = n - 1;
        let mut intrusion = 0.0;
        let mut extrusion = 0.0;
        let mut max_hist = vec![0u64; n];
        for a in 0..m {
            for b in 0..m {
                let c = self.q[[a, b]] as u64;
                if c == 0 {
                    continue;
                }
                let (rh, rl) = (a + 1, b + 1);
                max_hist[rh.max(rl)] += c;
                if rl <= k && rh > k {
                    intrusion += (c * (rh - k) as u64) as f64;
                }
                if rh <= k && rl > k {
                    extrusion += (c * (rl - k) as u64) as f64;
                }
            }
        }
        Ok(NeighborhoodScores::finish(
            n, k, intrusion, extrusion, &max_hist,
        ))
    }
}

fn check_k(k: usize, n: usize) -> Result<()> {
    if k == 0 || k >= n - 1 {
        return Err(CamelError::InvalidParameter(format!(
            "neighborhood size must satisfy 1 <= k < N - 1, got k = {k}, N = {n}"
        )));
    }
    Ok(())
}

/// Co-ranking based scores at one neighborhood size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborhoodScores {
    pub trust: f64,
    pub conti: f64,
    pub lcmc: f64,
    /// Area under `R_NX(K)` against `log K`, over `K = 1..N-2`.
    pub auc: f64,
}

impl NeighborhoodScores {
    /// Same scores as [`CoRankingMatrix::scores`] without materializing the
    /// matrix: per point ranks are streamed and reduced in parallel.
    pub fn compute(x: ArrayView2<'_, f64>, y: ArrayView2<'_, f64>, k: usize) -> Result<Self> {
        check_pair(x, y)?;
        let n = x.nrows();
        check_k(k, n)?;
        let (xs, ys) = (x.as_standard_layout(), y.as_standard_layout());
        let (xr, yr) = (Rows::from_view(xs.view()), Rows::from_view(ys.view()));
        let init = || (vec![0u64; n], 0u64, 0u64);
        let (max_hist, intrusion, extrusion) = (0..n)
            .into_par_iter()
            .fold(
                || (init(), Vec::with_capacity(n), vec![0u32; n], vec![0u32; n]),
                |(mut acc, mut order, mut rh, mut rl), i| {
                    ranks_from(xr, i, &mut order, &mut rh);
                    ranks_from(yr, i, &mut order, &mut rl);
                    for j in (0..n).filter(|&j| j != i) {
                        let (h, l) = (rh[j] as usize, rl[j] as usize);
                        acc.0[h.max(l)] += 1;
                        if l <= k && h > k {
                            acc.1 += (h - k) as u64;
                        }
                        if h <= k && l > k {
                            acc.2 += (l - k) as u64;
                        }
                    }
                    (acc, order, rh, rl)
                },
            )
            .map(|(acc, ..)| acc)
            .reduce(init, |mut a, b| {
                a.0.iter_mut().zip(&b.0).for_each(|(x, y)| *x += y);
                (a.0, a.1 + b.1, a.2 + b.2)
            });
        Ok(Self::finish(
            n,
            k,
            intrusion as f64,
            extrusion as f64,
            &max_hist,
        ))
    }

    fn finish(n: usize, k: usize, intrusion: f64, extrusion: f64, max_hist: &[u64]) -> Self {
        let (nf, kf) = (n as f64, k as f64);
        let norm = 2.0 / (nf * kf * (2.0 * nf - 3.0 * kf - 1.0));
        // Q_NX(K) = |pairs with both ranks <= K| / (K N)
        let mut cum = 0u64;
        let mut q_nx = vec![0.0; n];
        for kk in 1..n {
            cum += max_hist[kk];
            q_nx[kk] = cum as f64 / (kk as f64 * nf);
        }
        let (mut num, mut den) = (0.0, 0.0);
        for kk in 1..n - 1 {
            let r_nx = ((nf - 1.0) * q_nx[kk] - kk as f64) / (nf - 1.0 - kk as f64);
            num += r_nx / kk as f64;
            den += 1.0 / kk as f64;
        }
        Self {
            trust: 1.0 - norm * intrusion,
            conti: 1.0 - norm * extrusion,
            lcmc: q_nx[k] - kf / (nf - 1.0),
            auc: num / den,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, d: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((n, d), |_| rng.random::<f64>())
    }

    #[test]
    fn identical_spaces_give_diagonal_matrix() {
        let x = random(12, 3, 1);
        let q = coranking(x.view(), x.view()).unwrap();
        for ((a, b), &c) in q.counts().indexed_iter() {
            assert_eq!(c, if a == b { 12 } else { 0 });
        }
    }

    #[test]
    fn rank_reversing_layout_gives_anti_diagonal_matrix() {
        // every point sees its nearer and farther partner swapped
        let x = array![[0.0], [1.0], [3.0]];
        let y = array![[0.0], [3.0], [1.0]];
        let q = coranking(x.view(), y.view()).unwrap();
        assert_eq!(q.counts(), &array![[0, 3], [3, 0]]);
    }

    #[test]
    fn perfect_embedding_scores() {
        let x = random(40, 4, 2);
        let s = NeighborhoodScores::compute(x.view(), x.view(), 5).unwrap();
        assert!((s.trust - 1.0).abs() < 1e-12);
        assert!((s.conti - 1.0).abs() < 1e-12);
        assert!((s.lcmc - (1.0 - 5.0 / 39.0)).abs() < 1e-12);
        assert!((s.auc - 1.0).abs() < 1e-9);
    }

    #[test]
    fn streaming_matches_dense() {
        for seed in 0..4 {
            let x = random(30, 5, seed);
            let y = random(30, 2, seed + 100);
            let dense = coranking(x.view(), y.view()).unwrap().scores(7).unwrap();
            let stream = NeighborhoodScores::compute(x.view(), y.view(), 7).unwrap();
            assert!((dense.trust - stream.trust).abs() < 1e-12);
            assert!((dense.conti - stream.conti).abs() < 1e-12);
            assert!((dense.lcmc - stream.lcmc).abs() < 1e-12);
            assert!((dense.auc - stream.auc).abs() < 1e-12);
        }
    }

    #[test]
    fn too_few_points_rejected() {
        let x = random(2, 2, 0);
        assert!(coranking(x.view(), x.view()).is_err());
    }
}
