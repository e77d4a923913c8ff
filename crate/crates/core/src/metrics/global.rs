//! Sampled global metrics (random triplets, Spearman correlation of pair
//! distances) and the class-centroid metrics.

use ndarray::{Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{CamelError, Result};

fn d2(m: &ArrayView2<'_, f64>, i: usize, j: usize) -> f64 {
    m.row(i)
        .iter()
        .zip(m.row(j).iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}

fn check(x: &ArrayView2<'_, f64>, y: &ArrayView2<'_, f64>, min: usize) -> Result<()> {
    if x.nrows() != y.nrows() {
        return Err(CamelError::Dimension(format!(
            "{} high-dimensional rows against {} embedding rows",
            x.nrows(),
            y.nrows()
        )));
    }
    if x.nrows() < min {
        return Err(CamelError::InvalidParameter(format!(
            "need at least {min} points"
        )));
    }
    Ok(())
}

/// Fraction of random triplets `(i; j, l)` whose "is `j` closer to `i` than
/// `l`" answer is the same in both spaces.
pub fn triplet_score(
    x: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
    n_triplets: usize,
    seed: u64,
) -> Result<f64> {
    check(&x, &y, 3)?;
    let n = x.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut agree = 0usize;
    for _ in 0..n_triplets {
        let i = rng.random_range(0..n);
        let mut j = rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        let mut l = rng.random_range(0..n - 2);
        for skip in [i.min(j), i.max(j)] {
            if l >= skip {
                l += 1;
            }
        }
        let hd = d2(&x, i, j) < d2(&x, i, l);
        let ld = d2(&y, i, j) < d2(&y, i, l);
        agree += usize::from(hd == ld);
    }
    Ok(agree as f64 / n_triplets.max(1) as f64)
}

/// Average ranks (1-based, ties share their mean rank).
pub fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut s = 0;
    while s < idx.len() {
        let mut e = s;
        while e + 1 < idx.len() && v[idx[e + 1]] == v[idx[s]] {
            e += 1;
        }
        let r = (s + e) as f64 / 2.0 + 1.0;
        for &i in &idx[s..=e] {
            ranks[i] = r;
        }
        s = e + 1;
    }
    ranks
}

/// Spearman rank correlation (Pearson correlation of average ranks). A
/// constant input has no defined correlation and gives 0.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let (ra, rb) = (average_ranks(a), average_ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in ra.iter().zip(&rb) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return 0.0;
    }
    sab / (saa * sbb).sqrt()
}

/// Spearman correlation of the distances of `n_pairs` random pairs.
pub fn spearman_corr(
    x: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
    n_pairs: usize,
    seed: u64,
) -> Result<f64> {
    check(&x, &y, 2)?;
    let n = x.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut hd, mut ld) = (Vec::with_capacity(n_pairs), Vec::with_capacity(n_pairs));
    for _ in 0..n_pairs {
        let i = rng.random_range(0..n);
        let mut j = rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        hd.push(d2(&x, i, j));
        ld.push(d2(&y, i, j));
    }
    Ok(spearman(&hd, &ld))
}

/// Mean coordinates of each class.
pub fn class_centroids(m: ArrayView2<'_, f64>, classes: &[usize], n_classes: usize) -> Array2<f64> {
    let mut sums = Array2::zeros((n_classes, m.ncols()));
    let mut counts = vec![0usize; n_classes];
    for (r, &c) in m.rows().into_iter().zip(classes) {
        let mut s = sums.row_mut(c);
        s += &r;
        counts[c] += 1;
    }
    for (mut s, &c) in sums.rows_mut().into_iter().zip(&counts) {
        if c > 0 {
            s /= c as f64;
        }
    }
    sums
}

fn nearest_centroids(c: &Array2<f64>, i: usize, k: usize) -> Vec<usize> {
    let v = c.view();
    let mut others: Vec<(f64, usize)> = (0..c.nrows())
        .filter(|&j| j != i)
        .map(|j| (d2(&v, i, j), j))
        .collect();
    others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    others.into_iter().take(k).map(|(_, j)| j).collect()
}

/// Preserved fraction of each class centroid's `k_c` nearest centroids.
pub fn centroid_knn(
    x: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
    classes: &[usize],
    k_c: usize,
) -> Result<f64> {
    check(&x, &y, 1)?;
    let n_classes = classes.iter().max().map_or(0, |m| m + 1);
    if n_classes < 2 || k_c == 0 || k_c >= n_classes {
        return Err(CamelError::InvalidParameter(format!(
            "centroid kNN needs 1 <= k_c < classes, got k_c = {k_c} with {n_classes} classes"
        )));
    }
    let (ch, cl) = (
        class_centroids(x, classes, n_classes),
        class_centroids(y, classes, n_classes),
    );
    let mut kept = 0usize;
    for i in 0..n_classes {
        let a = nearest_centroids(&ch, i, k_c);
        let b = nearest_centroids(&cl, i, k_c);
        kept += a.iter().filter(|j| b.contains(j)).count();
    }
    Ok(kept as f64 / (n_classes * k_c) as f64)
}

/// Spearman correlation of all pairwise class-centroid distances. With two
/// classes there is a single pair, which trivially keeps its order.
pub fn centroid_dist(
    x: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
    classes: &[usize],
) -> Result<f64> {
    check(&x, &y, 1)?;
    let n_classes = classes.iter().max().map_or(0, |m| m + 1);
    if n_classes < 2 {
        return Err(CamelError::InvalidParameter(
            "centroid distances need two classes".into(),
        ));
    }
    if n_classes == 2 {
        return Ok(1.0);
    }
    let (ch, cl) = (
        class_centroids(x, classes, n_classes),
        class_centroids(y, classes, n_classes),
    );
    let (vh, vl) = (ch.view(), cl.view());
    let (mut hd, mut ld) = (Vec::new(), Vec::new());
    for i in 0..n_classes {
        for j in i + 1..n_classes {
            hd.push(d2(&vh, i, j));
            ld.push(d2(&vl, i, j));
        }
    }
    Ok(spearman(&hd, &ld))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn random(n: usize, d: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((n, d), |_| rng.random::<f64>())
    }

    #[test]
    fn identical_spaces_score_one() {
        let x = random(60, 3, 0);
        assert_eq!(triplet_score(x.view(), x.view(), 300, 1).unwrap(), 1.0);
        assert!((spearman_corr(x.view(), x.view(), 300, 1).unwrap() - 1.0).abs() < 1e-12);
        let classes: Vec<usize> = (0..60).map(|i| i % 4).collect();
        assert_eq!(centroid_knn(x.view(), x.view(), &classes, 2).unwrap(), 1.0);
        assert!((centroid_dist(x.view(), x.view(), &classes).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reversed_order_gives_minus_one() {
        // pair distances listed in exactly opposite order
        let hd = [1.0, 2.0, 3.0, 4.0];
        let ld = [4.0, 3.0, 2.0, 1.0];
        assert!((spearman(&hd, &ld) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn triplet_reversal_gives_zero() {
        // three points: from each point the nearer partner becomes the farther
        let x = array![[0.0], [1.0], [3.0]];
        let y = array![[0.0], [3.0], [1.0]];
        assert_eq!(triplet_score(x.view(), y.view(), 200, 0).unwrap(), 0.0);
    }

    #[test]
    fn random_embedding_triplet_is_near_half() {
        let x = random(200, 5, 1);
        let y = random(200, 2, 2);
        let t = triplet_score(x.view(), y.view(), 10_000, 3).unwrap();
        assert!((t - 0.5).abs() < 0.05, "{t}");
    }

    #[test]
    fn spearman_matches_hand_computation() {
        // 20 values: hd = i, ld = permutation; rho = 1 - 6 sum d^2 / (n (n^2 - 1))
        let hd: Vec<f64> = (0..20).map(f64::from).collect();
        let perm = [
            3, 0, 1, 2, 7, 4, 5, 6, 11, 8, 9, 10, 15, 12, 13, 14, 19, 16, 17, 18,
        ];
        let ld: Vec<f64> = perm.iter().map(|&p| p as f64).collect();
        let sum_d2: f64 = perm
            .iter()
            .enumerate()
            .map(|(i, &p)| ((i as f64) - p as f64).powi(2))
            .sum();
        let expect = 1.0 - 6.0 * sum_d2 / (20.0 * (400.0 - 1.0));
        assert!((spearman(&hd, &ld) - expect).abs() < 1e-12);
    }

    #[test]
    fn ties_share_average_rank() {
        assert_eq!(
            average_ranks(&[2.0, 1.0, 2.0, 3.0]),
            vec![2.5, 1.0, 2.5, 4.0]
        );
    }

    #[test]
    fn two_classes_centroid_knn_is_forced() {
        let x = random(20, 3, 5);
        let y = random(20, 2, 6);
        let classes: Vec<usize> = (0..20).map(|i| i % 2).collect();
        assert_eq!(centroid_knn(x.view(), y.view(), &classes, 1).unwrap(), 1.0);
    }

    #[test]
    fn shuffled_centroid_layout_matches_brute_force() {
        // five classes whose centroids sit on a line in hd and in a shuffled
        // order in ld
        let pos_hd = [0.0, 1.0, 3.0, 6.0, 10.0];
        let pos_ld = [6.0, 0.0, 10.0, 1.0, 3.0];
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        let mut classes = Vec::new();
        for c in 0..5 {
            for off in [-0.1, 0.1] {
                xs.push(pos_hd[c] + off);
                ys.push(pos_ld[c] + off);
                classes.push(c);
            }
        }
        let x = Array2::from_shape_vec((10, 1), xs).unwrap();
        let y = Array2::from_shape_vec((10, 1), ys).unwrap();
        let near = |pos: &[f64], i: usize| {
            let mut o: Vec<usize> = (0..5).filter(|&j| j != i).collect();
            o.sort_by(|&a, &b| {
                (pos[a] - pos[i])
                    .abs()
                    .total_cmp(&(pos[b] - pos[i]).abs())
                    .then(a.cmp(&b))
            });
            o.truncate(2);
            o
        };
        let kept: usize = (0..5)
            .map(|i| {
                near(&pos_hd, i)
                    .iter()
                    .filter(|j| near(&pos_ld, i).contains(j))
                    .count()
            })
            .sum();
        assert_eq!(
            centroid_knn(x.view(), y.view(), &classes, 2).unwrap(),
            kept as f64 / 10.0
        );
        let mut hd = Vec::new();
        let mut ld = Vec::new();
        for i in 0..5 {
            for j in i + 1..5 {
                hd.push((pos_hd[i] - pos_hd[j]).abs());
                ld.push((pos_ld[i] - pos_ld[j]).abs());
            }
        }
        assert!(
            (centroid_dist(x.view(), y.view(), &classes).unwrap() - spearman(&hd, &ld)).abs()
                < 1e-12
        );
    }
}
