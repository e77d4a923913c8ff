//! Small dense helpers shared by the neighbor search, optimizer and metrics.

use ndarray::{Array2, ArrayView2, Axis};

#[inline]
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        s += d * d;
    }
    s
}

#[inline]
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    sq_dist(a, b).sqrt()
}

/// Borrowed row-major point set: `n` rows of `d` coordinates.
#[derive(Debug, Clone, Copy)]
pub struct Rows<'a> {
    data: &'a [f64],
    d: usize,
}

impl<'a> Rows<'a> {
    pub fn new(data: &'a [f64], d: usize) -> Self {
        assert!(
            d > 0 && data.len().is_multiple_of(d),
            "ragged row-major buffer"
        );
        Self { data, d }
    }

    /// Panics unless `m` is in standard (C) layout.
    pub fn from_view(m: ArrayView2<'a, f64>) -> Self {
        let d = m.ncols().max(1);
        Self::new(m.to_slice().expect("standard layout matrix"), d)
    }

    /// Panics unless `m` is in standard (C) layout.
    pub fn from_array(m: &'a Array2<f64>) -> Self {
        Self::new(
            m.as_slice().expect("standard layout matrix"),
            m.ncols().max(1),
        )
    }

    #[inline]
    pub fn get(&self, i: usize) -> &'a [f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.d
    }
}

/// Owned standard-layout copy when needed.
pub fn standard(m: ArrayView2<'_, f64>) -> Array2<f64> {
    m.as_standard_layout().into_owned()
}

/// Full pairwise Euclidean distance matrix.
pub fn pairwise_distances(x: ArrayView2<'_, f64>) -> Array2<f64> {
    let x = standard(x);
    let n = x.nrows();
    let mut out = Array2::zeros((n, n));
    for i in 0..n {
        for j in i + 1..n {
            let d = dist(x.row(i).as_slice().unwrap(), x.row(j).as_slice().unwrap());
            out[[i, j]] = d;
            out[[j, i]] = d;
        }
    }
    out
}

/// Normalized Procrustes disparity between two point sets of equal shape.
///
/// Both sets are centered and scaled to unit Frobenius norm; the second is then
/// optimally rotated (reflections allowed) and scaled onto the first. The
/// residual sum of squares lies in `[0, 1]`.
pub fn procrustes_disparity(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> f64 {
    assert_eq!(a.shape(), b.shape(), "procrustes needs equal shapes");
    let center = |m: ArrayView2<'_, f64>| {
        let mean = m.mean_axis(Axis(0)).expect("non-empty");
        let c = &m - &mean;
        let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            c / norm
        } else {
            c
        }
    };
    let a = center(a);
    let b = center(b);
    let d = a.ncols();
    // cross-covariance b^T a, its nuclear norm gives the optimal fit
    let m = b.t().dot(&a);
    let mat = nalgebra::DMatrix::from_fn(d, d, |i, j| m[[i, j]]);
    let svd = mat.svd(false, false);
    let trace: f64 = svd.singular_values.iter().sum();
    (1.0 - trace * trace).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn procrustes_zero_for_similarity_transform() {
        let a = array![[0.0, 0.0], [1.0, 0.0], [0.0, 2.0], [3.0, 1.0]];
        let (c, s) = (0.3f64.cos(), 0.3f64.sin());
        let r = array![[c, -s], [s, c]];
        let b = a.dot(&r) * 2.5 + 7.0;
        assert!(procrustes_disparity(a.view(), b.view()) < 1e-12);
        let flipped = a.dot(&array![[-1.0, 0.0], [0.0, 1.0]]);
        assert!(procrustes_disparity(a.view(), flipped.view()) < 1e-12);
    }

    #[test]
    fn procrustes_bounded() {
        let a = array![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
        let b = array![[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]];
        let d = procrustes_disparity(a.view(), b.view());
        assert!(d > 0.1 && d <= 1.0);
    }

    #[test]
    fn procrustes_hand_value() {
        // centered b has rows (-1,-1/3), (1,-1/3), (0,2/3) with |b|^2 = 8/3;
        // b^T a = [[2, 0], [0, 0]] so the nuclear norm is 2 before scaling
        let a = array![[-1.0, 0.0], [1.0, 0.0], [0.0, 0.0]];
        let b = array![[-1.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let expected = 1.0 - (2.0 / (2.0f64.sqrt() * (8.0f64 / 3.0).sqrt())).powi(2);
        assert!((procrustes_disparity(a.view(), b.view()) - expected).abs() < 1e-12);
    }

    #[test]
    fn pairwise_symmetric() {
        let x = array![[0.0, 0.0], [3.0, 4.0]];
        let d = pairwise_distances(x.view());
        assert_eq!(d[[0, 1]], 5.0);
        assert_eq!(d[[1, 0]], 5.0);
    }
}
