//! Embedding initialization and the ADAM loop over the force field.

use ndarray::{Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{CamelError, Result};
use crate::force_field::ForceSystem;
use crate::knn::NeighborGraph;
use crate::linalg::Rows;

/// Standard deviation of initial coordinates.
pub const INIT_STD: f64 = 0.01;
/// Feature count above which PCA switches to a randomized sketch.
pub const PCA_EXACT_MAX_DIM: usize = 512;
/// Mean absolute coordinate that aborts a run.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitMode {
    Pca,
    Random,
    Interpolation,
}

impl std::str::FromStr for InitMode {
    type Err = CamelError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pca" => Ok(Self::Pca),
            "random" => Ok(Self::Random),
            "interpolation" => Ok(Self::Interpolation),
            other => Err(CamelError::InvalidParameter(format!(
                "unknown init mode '{other}'"
            ))),
        }
    }
}

impl std::fmt::Display for InitMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Pca => "pca",
            Self::Random => "random",
            Self::Interpolation => "interpolation",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimConfig {
    pub max_iter: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub init: InitMode,
    pub seed: u64,
    /// Redraw distant samples every this many iterations; `None` keeps the
    /// initial draw for the whole run.
    pub resample_every: Option<usize>,
    /// Recompute the optimized-space curvature every this many iterations.
    pub curvature_every: usize,
}

impl Default for OptimConfig {
    fn default() -> Self {
        Self {
            max_iter: 400,
            lr: 1.0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-7,
            init: InitMode::Pca,
            seed: 0,
            resample_every: None,
            curvature_every: 1,
        }
    }
}

impl OptimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(CamelError::InvalidParameter(msg));
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad(format!("lr must be > 0, got {}", self.lr));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(b > 0.0 && b < 1.0) {
                return bad(format!("{name} must lie in (0, 1), got {b}"));
            }
        }
        if !(self.eps > 0.0) {
            return bad(format!("eps must be > 0, got {}", self.eps));
        }
        if self.curvature_every == 0 {
            return bad("curvature_every must be >= 1".into());
        }
        if self.resample_every == Some(0) {
            return bad("resample_every must be >= 1".into());
        }
        Ok(())
    }
}

/// Coordinates plus ADAM moments; resumable.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimState {
    pub y: Array2<f64>,
    pub adam_m: Array2<f64>,
    pub adam_v: Array2<f64>,
    pub iter: usize,
    pub config: OptimConfig,
}

impl OptimState {
    pub fn new(y: Array2<f64>, config: OptimConfig) -> Self {
        let shape = y.raw_dim();
        Self {
            y: y.as_standard_layout().into_owned(),
            adam_m: Array2::zeros(shape),
            adam_v: Array2::zeros(shape),
            iter: 0,
            config,
        }
    }
}

/// Per-iteration summary passed to progress hooks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterStats {
    pub iter: usize,
    /// Mean Euclidean norm of the field over moving points.
    pub mean_grad: f64,
}

/// Per-iteration progress callback.
pub type ProgressHook<'a> = &'a mut dyn FnMut(&IterStats);
/// Force-term callback: iteration and the three flat `N x d` terms.
pub type TraceHook<'a> = &'a mut dyn FnMut(usize, &[Vec<f64>; 3]);
/// Distant-sample redraw callback.
pub type ResampleHook<'a> = &'a mut dyn FnMut(usize, &mut ForceSystem) -> Result<()>;

/// Optional callbacks during [`run`].
#[derive(Default)]
pub struct RunHooks<'a> {
    pub progress: Option<ProgressHook<'a>>,
    /// Receives the attractive, curvature and repulsive terms (flat `N x d`).
    pub trace: Option<TraceHook<'a>>,
    /// Called with the iteration index when distant samples are due for a
    /// redraw; must update the system in place.
    pub resample: Option<ResampleHook<'a>>,
}

/// Initial low-dimensional coordinates.
pub fn init_embedding(
    x: ArrayView2<'_, f64>,
    d: usize,
    mode: InitMode,
    seed: u64,
) -> Result<Array2<f64>> {
    let n = x.nrows();
    match mode {
        InitMode::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok(Array2::from_shape_fn((n, d), |_| {
                INIT_STD * rng.sample::<f64, _>(StandardNormal)
            }))
        }
        InitMode::Pca => {
            if d > x.ncols() {
                return Err(CamelError::InvalidParameter(format!(
                    "PCA init needs d <= D, got d = {d}, D = {}",
                    x.ncols()
                )));
            }
            let scores = pca_scores(x, d, seed);
            Ok(scale_columns(scores, INIT_STD))
        }
        InitMode::Interpolation => Err(CamelError::InvalidParameter(
            "interpolation init needs a query graph, see init_interpolation".into(),
        )),
    }
}

fn scale_columns(mut m: Array2<f64>, target_std: f64) -> Array2<f64> {
    for mut col in m.columns_mut() {
        let mean = col.mean().unwrap_or(0.0);
        let sd = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / col.len().max(1) as f64;
        let sd = sd.sqrt();
        col.mapv_inplace(|v| {
            if sd > 0.0 {
                (v - mean) / sd * target_std
            } else {
                0.0
            }
        });
    }
    m
}

/// Orients each column of `axes` so its largest-magnitude entry is positive.
fn fix_signs(axes: &mut Array2<f64>) {
    for mut col in axes.columns_mut() {
        let pivot = col
            .iter()
            .copied()
            .fold(0.0f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
        if pivot < 0.0 {
            col.mapv_inplace(|v| -v);
        }
    }
}

/// Principal axes (`D x d`, orthonormal columns, deterministic signs).
pub fn principal_axes(x: ArrayView2<'_, f64>, d: usize, seed: u64) -> Array2<f64> {
    let mean = x.mean_axis(Axis(0)).expect("non-empty input");
    let xc = &x - &mean;
    let dim = x.ncols();
    let mut axes = if dim <= PCA_EXACT_MAX_DIM {
        let cov = xc.t().dot(&xc) / (x.nrows().max(2) - 1) as f64;
        let mat = nalgebra::DMatrix::from_fn(dim, dim, |i, j| cov[[i, j]]);
        let eig = nalgebra::SymmetricEigen::new(mat);
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|a, b| eig.eigenvalues[*b].total_cmp(&eig.eigenvalues[*a]));
        Array2::from_shape_fn((dim, d), |(r, c)| eig.eigenvectors[(r, order[c])])
    } else {
        randomized_axes(&xc, d, seed)
    };
    fix_signs(&mut axes);
    axes
}

/// Top-`d` axes from a randomized range finder with power iterations.
fn randomized_axes(xc: &Array2<f64>, d: usize, seed: u64) -> Array2<f64> {
    let dim = xc.ncols();
    let width = (d + 10).min(dim);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let omega = Array2::from_shape_fn((dim, width), |_| rng.sample::<f64, _>(StandardNormal));
    let orth = |m: Array2<f64>| -> Array2<f64> {
        let mat = nalgebra::DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[[i, j]]);
        let q = mat.qr().q();
        Array2::from_shape_fn((q.nrows(), q.ncols()), |(i, j)| q[(i, j)])
    };
    let mut q = orth(xc.dot(&omega));
    for _ in 0..4 {
        let z = orth(xc.t().dot(&q));
        q = orth(xc.dot(&z));
    }
    let b = q.t().dot(xc);
    let mat = nalgebra::DMatrix::from_fn(b.nrows(), b.ncols(), |i, j| b[[i, j]]);
    let svd = mat.svd(false, true);
    let vt = svd.v_t.expect("requested right singular vectors");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|a, b| svd.singular_values[*b].total_cmp(&svd.singular_values[*a]));
    Array2::from_shape_fn((dim, d), |(r, c)| vt[(order[c], r)])
}

/// Projections of the centered data onto the top-`d` principal axes.
pub fn pca_scores(x: ArrayView2<'_, f64>, d: usize, seed: u64) -> Array2<f64> {
    let axes = principal_axes(x, d, seed);
    let mean = x.mean_axis(Axis(0)).expect("non-empty input");
    (&x - &mean).dot(&axes)
}

/// Each query placed at the mean of its reference neighbors' coordinates.
pub fn init_interpolation(
    queries: &NeighborGraph,
    reference: ArrayView2<'_, f64>,
) -> Result<Array2<f64>> {
    let k = queries.k();
    if k == 0 {
        return Err(CamelError::InvalidParameter(
            "queries have empty neighbor lists".into(),
        ));
    }
    let d = reference.ncols();
    let mut out = Array2::zeros((queries.n_points(), d));
    for (i, mut row) in out.rows_mut().into_iter().enumerate() {
        for &j in queries.neighbors(i) {
            if j >= reference.nrows() {
                return Err(CamelError::Dimension(format!(
                    "neighbor {j} outside reference set"
                )));
            }
            row += &reference.row(j);
        }
        row /= k as f64;
    }
    Ok(out)
}

/// Runs ADAM along the field of `system` from `state` until
/// `state.config.max_iter` iterations have been taken in total.
pub fn run(
    mut state: OptimState,
    system: &mut ForceSystem,
    mut hooks: RunHooks<'_>,
) -> Result<OptimState> {
    let cfg = state.config;
    cfg.validate()?;
    let (n, d) = state.y.dim();
    if n != system.n_points() {
        return Err(CamelError::Dimension(format!(
            "state has {n} points, system {}",
            system.n_points()
        )));
    }
    crate::dataset::check_finite(state.y.view())?;
    if state.iter >= cfg.max_iter {
        return Ok(state);
    }
    let moving: Vec<usize> = (0..n).filter(|i| !system.frozen()[*i]).collect();
    let mut ws = system.workspace(state.y.view());
    let mut field = vec![0.0; n * d];
    let mut parts = [Vec::new(), Vec::new(), Vec::new()];
    let mut first = true;
    while state.iter < cfg.max_iter {
        let it = state.iter;
        if let (Some(every), Some(resample)) = (cfg.resample_every, hooks.resample.as_mut()) {
            if it > 0 && it.is_multiple_of(every) {
                resample(it, system)?;
            }
        }
        {
            let rows = Rows::new(state.y.as_slice().expect("standard layout"), d);
            if first || it.is_multiple_of(cfg.curvature_every) {
                system.update_curvature(rows, &mut ws);
                first = false;
            }
            let want_parts = hooks.trace.is_some();
            system.field_into(rows, &ws, &mut field, want_parts.then_some(&mut parts));
        }
        if let Some(trace) = hooks.trace.as_mut() {
            trace(it, &parts);
        }

        let t = (it + 1) as i32;
        let bc1 = 1.0 - cfg.beta1.powi(t);
        let bc2 = 1.0 - cfg.beta2.powi(t);
        let y = state.y.as_slice_mut().expect("standard layout");
        let am = state.adam_m.as_slice_mut().expect("standard layout");
        let av = state.adam_v.as_slice_mut().expect("standard layout");
        let mut grad_norm_sum = 0.0;
        for &i in &moving {
            let mut sq = 0.0;
            for c in i * d..(i + 1) * d {
                let g = field[c];
                sq += g * g;
                am[c] = cfg.beta1 * am[c] + (1.0 - cfg.beta1) * g;
                av[c] = cfg.beta2 * av[c] + (1.0 - cfg.beta2) * g * g;
                let m_hat = am[c] / bc1;
                let v_hat = av[c] / bc2;
                y[c] += cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
            }
            grad_norm_sum += sq.sqrt();
        }
        state.iter += 1;

        let mean_abs = y.iter().map(|v| v.abs()).sum::<f64>() / y.len().max(1) as f64;
        if !(mean_abs <= DIVERGENCE_LIMIT) {
            return Err(CamelError::Divergence {
                iter: state.iter,
                mean_abs,
            });
        }
        if let Some(progress) = hooks.progress.as_mut() {
            progress(&IterStats {
                iter: state.iter,
                mean_grad: grad_norm_sum / moving.len().max(1) as f64,
            });
        }
    }
    Ok(state)
}

/// Field norm per point at `y` for `system` (diagnostics).
pub fn field_norms(y: ArrayView2<'_, f64>, system: &ForceSystem) -> Result<Vec<f64>> {
    let g = crate::force_field::gradient(y, system, false)?.grads;
    Ok(g.rows().into_iter().map(|r| r.dot(&r).sqrt()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::force_field::ForceParams;
    use crate::knn::{build_knn, sample_distant, KnnMode, PairSampling};
    use ndarray::array;

    fn gaussian(n: usize, d: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((n, d), |_| rng.sample::<f64, _>(StandardNormal))
    }

    /// Covariance eigenvectors from a cyclic Jacobi sweep, independent of the
    /// production path.
    fn jacobi_axes(x: &Array2<f64>, d: usize) -> Array2<f64> {
        let mean = x.mean_axis(Axis(0)).unwrap();
        let xc = x - &mean;
        let p = x.ncols();
        let mut a = xc.t().dot(&xc);
        let mut v = Array2::<f64>::eye(p);
        for _ in 0..100 {
            for i in 0..p {
                for j in i + 1..p {
                    if a[[i, j]].abs() < 1e-15 {
                        continue;
                    }
                    let theta = 0.5 * (2.0 * a[[i, j]]).atan2(a[[j, j]] - a[[i, i]]);
                    let (c, s) = (theta.cos(), theta.sin());
                    for r in 0..p {
                        let (ari, arj) = (a[[r, i]], a[[r, j]]);
                        a[[r, i]] = c * ari - s * arj;
                        a[[r, j]] = s * ari + c * arj;
                    }
                    for r in 0..p {
                        let (air, ajr) = (a[[i, r]], a[[j, r]]);
                        a[[i, r]] = c * air - s * ajr;
                        a[[j, r]] = s * air + c * ajr;
                    }
                    for r in 0..p {
                        let (vri, vrj) = (v[[r, i]], v[[r, j]]);
                        v[[r, i]] = c * vri - s * vrj;
                        v[[r, j]] = s * vri + c * vrj;
                    }
                }
            }
        }
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|x, y| a[[*y, *y]].total_cmp(&a[[*x, *x]]));
        Array2::from_shape_fn((p, d), |(r, c)| v[[r, order[c]]])
    }

    #[test]
    fn pca_matches_jacobi_oracle_up_to_sign() {
        let x = gaussian(100, 10, 5) * &ndarray::Array1::from_iter((1..=10).map(|v| v as f64));
        let got = pca_scores(x.view(), 2, 0);
        let axes = jacobi_axes(&x, 2);
        let mean = x.mean_axis(Axis(0)).unwrap();
        let expect = (&x - &mean).dot(&axes);
        for c in 0..2 {
            let sign = if got[[0, c]] * expect[[0, c]] < 0.0 {
                -1.0
            } else {
                1.0
            };
            for r in 0..100 {
                assert!((got[[r, c]] - sign * expect[[r, c]]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn randomized_pca_matches_exact_on_low_rank_data() {
        let basis = gaussian(3, 600, 1);
        let coef = gaussian(200, 3, 2) * &ndarray::array![10.0, 5.0, 2.0];
        let x = coef.dot(&basis);
        let exact = {
            let mean = x.mean_axis(Axis(0)).unwrap();
            let xc = &x - &mean;
            let cov = xc.t().dot(&xc);
            let eig =
                nalgebra::SymmetricEigen::new(nalgebra::DMatrix::from_fn(600, 600, |i, j| {
                    cov[[i, j]]
                }));
            let mut order: Vec<usize> = (0..600).collect();
            order.sort_by(|a, b| eig.eigenvalues[*b].total_cmp(&eig.eigenvalues[*a]));
            Array2::from_shape_fn((600, 2), |(r, c)| eig.eigenvectors[(r, order[c])])
        };
        let approx = principal_axes(x.view(), 2, 3);
        for c in 0..2 {
            let dot: f64 = (0..600).map(|r| exact[[r, c]] * approx[[r, c]]).sum();
            assert!((dot.abs() - 1.0).abs() < 1e-8, "axis {c}: {dot}");
        }
    }

    #[test]
    fn pca_init_of_planar_data_is_scaled_rotation() {
        let x = array![[0.0, 0.0], [2.0, 1.0], [4.0, 2.1], [1.0, -1.0], [3.0, 0.4]];
        let y = init_embedding(x.view(), 2, InitMode::Pca, 0).unwrap();
        for col in y.columns() {
            let sd = (col.iter().map(|v| v * v).sum::<f64>() / 5.0).sqrt();
            assert!((sd - INIT_STD).abs() < 1e-15);
        }
        assert!(init_embedding(x.view(), 3, InitMode::Pca, 0).is_err());
    }

    #[test]
    fn random_init_is_seeded() {
        let x = gaussian(10, 3, 0);
        let a = init_embedding(x.view(), 2, InitMode::Random, 4).unwrap();
        let b = init_embedding(x.view(), 2, InitMode::Random, 4).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, init_embedding(x.view(), 2, InitMode::Random, 5).unwrap());
    }

    #[test]
    fn interpolation_is_neighbor_mean() {
        let refs = array![[0.0, 0.0], [2.0, 0.0], [10.0, 10.0]];
        let q = array![[1.0, 0.1]];
        let g = crate::knn::knn_of_queries(q.view(), refs.view(), 2, KnnMode::Exact, 0).unwrap();
        assert_eq!(
            init_interpolation(&g, refs.view()).unwrap(),
            array![[1.0, 0.0]]
        );
        let g1 = crate::knn::knn_of_queries(q.view(), refs.view(), 1, KnnMode::Exact, 0).unwrap();
        assert_eq!(
            init_interpolation(&g1, refs.view()).unwrap(),
            array![[0.0, 0.0]]
        );
    }

    #[test]
    fn interpolation_k5_matches_direct_mean() {
        let refs = gaussian(50, 4, 1);
        let q = gaussian(7, 4, 2);
        let g = crate::knn::knn_of_queries(q.view(), refs.view(), 5, KnnMode::Exact, 0).unwrap();
        let got = init_interpolation(&g, refs.view()).unwrap();
        for i in 0..7 {
            for c in 0..4 {
                let mut acc = 0.0;
                for &j in g.neighbors(i) {
                    acc += refs[[j, c]];
                }
                assert_eq!(got[[i, c]], acc / 5.0);
            }
        }
    }

    fn system_for(
        x: &Array2<f64>,
        k: usize,
        m: usize,
        params: ForceParams,
        frozen: Option<&[bool]>,
    ) -> ForceSystem {
        let g = build_knn(x.view(), k, KnnMode::Exact, 0).unwrap();
        let s = if m == 0 {
            PairSampling::empty()
        } else {
            sample_distant(&g, m, 1).unwrap()
        };
        ForceSystem::new(x.view(), &g, &s, params, frozen).unwrap()
    }

    #[test]
    fn zero_iterations_is_identity() {
        let x = gaussian(20, 2, 0);
        let mut sys = system_for(&x, 3, 5, ForceParams::default(), None);
        let cfg = OptimConfig {
            max_iter: 0,
            ..OptimConfig::default()
        };
        let out = run(
            OptimState::new(x.clone(), cfg),
            &mut sys,
            RunHooks::default(),
        )
        .unwrap();
        assert_eq!(out.y, x);
    }

    #[test]
    fn single_attractive_edge_closes_distance() {
        let x = array![[0.0, 0.0], [5.0, 0.0]];
        let params = ForceParams {
            w_cr: 0.0,
            ..ForceParams::default()
        };
        let mut sys = system_for(&x, 1, 0, params, None);
        let mut gaps = Vec::new();
        let mut y = x.clone();
        for step in 1..=5 {
            let cfg = OptimConfig {
                max_iter: step,
                lr: 0.1,
                ..OptimConfig::default()
            };
            let mut st = OptimState::new(y.clone(), cfg);
            st.iter = step - 1;
            st = run(st, &mut sys, RunHooks::default()).unwrap();
            y = st.y;
            gaps.push((y[[1, 0]] - y[[0, 0]]).abs());
        }
        assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
    }

    #[test]
    fn all_frozen_is_identity() {
        let x = gaussian(30, 2, 3);
        let frozen = vec![true; 30];
        let mut sys = system_for(&x, 4, 5, ForceParams::default(), Some(&frozen));
        let cfg = OptimConfig {
            max_iter: 25,
            ..OptimConfig::default()
        };
        let out = run(
            OptimState::new(x.clone(), cfg),
            &mut sys,
            RunHooks::default(),
        )
        .unwrap();
        assert_eq!(out.y, x);
    }

    #[test]
    fn two_clusters_separate() {
        let (x, labels) = crate::dataset::gen_gaussian_blobs(100, 2, 5, 8.0, 0);
        let x = x.into_inner();
        let mut sys = system_for(&x, 10, 20, ForceParams::default(), None);
        let y0 = init_embedding(x.view(), 2, InitMode::Random, 0).unwrap();
        let cfg = OptimConfig {
            max_iter: 200,
            ..OptimConfig::default()
        };
        let y = run(OptimState::new(y0, cfg), &mut sys, RunHooks::default())
            .unwrap()
            .y;
        let cls = labels.class_indices();
        let (mut within, mut nw, mut between, mut nb) = (0.0, 0, 0.0, 0);
        for i in 0..200 {
            for j in i + 1..200 {
                let dd = ((y[[i, 0]] - y[[j, 0]]).powi(2) + (y[[i, 1]] - y[[j, 1]]).powi(2)).sqrt();
                if cls[i] == cls[j] {
                    within += dd;
                    nw += 1;
                } else {
                    between += dd;
                    nb += 1;
                }
            }
        }
        assert!(within / (nw as f64) < between / (nb as f64));
    }

    #[test]
    fn runs_are_deterministic() {
        let x = gaussian(80, 4, 9);
        let go = || {
            let mut sys = system_for(&x, 5, 10, ForceParams::default(), None);
            let y0 = init_embedding(x.view(), 2, InitMode::Pca, 0).unwrap();
            let cfg = OptimConfig {
                max_iter: 50,
                ..OptimConfig::default()
            };
            run(OptimState::new(y0, cfg), &mut sys, RunHooks::default())
                .unwrap()
                .y
        };
        assert_eq!(go(), go());
    }

    #[test]
    fn progress_reports_every_iteration() {
        let x = gaussian(20, 2, 0);
        let mut sys = system_for(&x, 3, 5, ForceParams::default(), None);
        let mut seen = Vec::new();
        let mut hook = |s: &IterStats| seen.push(s.iter);
        let hooks = RunHooks {
            progress: Some(&mut hook),
            ..RunHooks::default()
        };
        let cfg = OptimConfig {
            max_iter: 7,
            ..OptimConfig::default()
        };
        run(OptimState::new(x.clone(), cfg), &mut sys, hooks).unwrap();
        assert_eq!(seen, (1..=7).collect::<Vec<_>>());
    }

    #[test]
    fn invalid_config_rejected() {
        let cfg = OptimConfig {
            beta1: 1.0,
            ..OptimConfig::default()
        };
        assert!(cfg.validate().is_err());
        assert!("spectral".parse::<InitMode>().is_err());
    }
}
