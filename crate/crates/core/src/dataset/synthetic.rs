use std::f64::consts::PI;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{DataMatrix, LabelVector};

/// Range of the roll parameter `t`: `[1.5 pi, 4.5 pi]`.
pub const SWISS_ROLL_T_RANGE: (f64, f64) = (1.5 * PI, 4.5 * PI);
const SWISS_ROLL_HEIGHT: f64 = 21.0;

/// Swiss roll `(t cos t, h, t sin t)` with `t` uniform in
/// [`SWISS_ROLL_T_RANGE`] and `h` uniform in `[0, 21]`. The numerical label is `t`.
pub fn gen_swiss_roll(n: usize, noise: f64, seed: u64) -> (DataMatrix, LabelVector) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (t0, t1) = SWISS_ROLL_T_RANGE;
    let mut values = Array2::zeros((n.max(1), 3));
    let mut t_all = Vec::with_capacity(n.max(1));
    for mut row in values.rows_mut() {
        let t = t0 + (t1 - t0) * rng.random::<f64>();
        let h = SWISS_ROLL_HEIGHT * rng.random::<f64>();
        row[0] = t * t.cos();
        row[1] = h;
        row[2] = t * t.sin();
        if noise > 0.0 {
            for v in row.iter_mut() {
                let e: f64 = rng.sample(StandardNormal);
                *v += noise * e;
            }
        }
        t_all.push(t);
    }
    (
        DataMatrix::new(values).expect("finite by construction"),
        LabelVector::numerical(&t_all),
    )
}

/// Isotropic Gaussian blobs, `n_per_center` points around each center.
pub fn gen_blobs(
    n_per_center: usize,
    centers: &[Vec<f64>],
    std: f64,
    seed: u64,
) -> (DataMatrix, LabelVector) {
    let d = centers.first().map_or(1, Vec::len);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = n_per_center * centers.len();
    let mut values = Array2::zeros((n, d));
    let mut labels = Vec::with_capacity(n);
    for (c, center) in centers.iter().enumerate() {
        for p in 0..n_per_center {
            let i = c * n_per_center + p;
            for j in 0..d {
                let e: f64 = rng.sample(StandardNormal);
                values[[i, j]] = center[j] + std * e;
            }
            labels.push(c);
        }
    }
    (
        DataMatrix::new(values).expect("finite by construction"),
        LabelVector::categorical_from_indices(&labels),
    )
}

/// `n_classes` blobs in `dim` dimensions with centers drawn uniformly from a
/// cube of side `spread`, unit within-blob standard deviation.
pub fn gen_gaussian_blobs(
    n_per_class: usize,
    n_classes: usize,
    dim: usize,
    spread: f64,
    seed: u64,
) -> (DataMatrix, LabelVector) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_b10b);
    let centers: Vec<Vec<f64>> = (0..n_classes)
        .map(|_| {
            (0..dim)
                .map(|_| spread * (rng.random::<f64>() - 0.5))
                .collect()
        })
        .collect();
    gen_blobs(n_per_class, &centers, 1.0, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_is_finite() {
        let (x, y) = gen_swiss_roll(1, 0.0, 0);
        assert_eq!(x.n_samples(), 1);
        assert_eq!(x.n_features(), 3);
        assert!(x.values().iter().all(|v| v.is_finite()));
        assert_eq!(y.len(), 1);
    }

    #[test]
    fn deterministic_under_seed() {
        let (a, la) = gen_swiss_roll(1000, 0.1, 42);
        let (b, lb) = gen_swiss_roll(1000, 0.1, 42);
        assert_eq!(a, b);
        assert_eq!(la, lb);
        let (c, _) = gen_swiss_roll(1000, 0.1, 43);
        assert_ne!(a, c);
    }

    #[test]
    fn radii_match_parametrization() {
        let (x, t) = gen_swiss_roll(1000, 0.0, 5);
        let (t0, t1) = SWISS_ROLL_T_RANGE;
        for i in 0..1000 {
            let r = x.values()[[i, 0]].hypot(x.values()[[i, 2]]);
            let ti = t.value(i).unwrap();
            assert!(r >= t0 - 1e-12 && r <= t1 + 1e-12);
            // noise-free: radius equals the unrolled coordinate
            assert!((r - ti).abs() < 1e-9);
            assert!((0.0..=SWISS_ROLL_HEIGHT).contains(&x.values()[[i, 1]]));
        }
    }

    #[test]
    fn blobs_shape_and_labels() {
        let (x, l) = gen_gaussian_blobs(20, 5, 4, 30.0, 1);
        assert_eq!(x.n_samples(), 100);
        assert_eq!(x.n_features(), 4);
        assert_eq!(l.n_classes(), 5);
    }
}
