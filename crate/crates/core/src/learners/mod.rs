//! The five learning modes: unsupervised, supervised, metric (projecting new
//! points into a frozen embedding), semi-supervised and inverse.

mod bundle;
mod semi;

pub use bundle::{load_model, save_model, BUNDLE_MAGIC, BUNDLE_VERSION};
pub use semi::{impute_labels, SemiConfig};

use ndarray::{concatenate, s, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::curvature::{camel_curvature, EdgeCurvature};
use crate::dataset::{
    encode_label_blocks, encode_labels, DataMatrix, LabelKind, LabelVector, Preprocessor,
    MAX_LABEL_WEIGHT,
};
use crate::error::{CamelError, Result};
use crate::force_field::{ForceParams, ForceSystem};
use crate::knn::{
    build_knn, knn_of_queries, sample_distant, sample_distant_from_reference, KnnMode,
    NeighborGraph, PairSampling, DEFAULT_K, DEFAULT_M,
};
use crate::optimizer::{
    init_embedding, init_interpolation, run, InitMode, IterStats, OptimConfig, OptimState,
    RunHooks, INIT_STD,
};

/// Pairs sampled to balance label distances against feature distances.
pub const DEFAULT_LABEL_SAMPLE: usize = 1000;

/// Settings shared by all modes.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FitConfig {
    pub dim: usize,
    pub k: usize,
    pub m: usize,
    pub knn_mode: KnnMode,
    pub force: ForceParams,
    pub optim: OptimConfig,
    pub label_sample_size: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            dim: 2,
            k: DEFAULT_K,
            m: DEFAULT_M,
            knn_mode: KnnMode::default(),
            force: ForceParams::default(),
            optim: OptimConfig::default(),
            label_sample_size: DEFAULT_LABEL_SAMPLE,
        }
    }
}

impl FitConfig {
    fn seed(&self, stream: u64) -> u64 {
        self.optim
            .seed
            .wrapping_add(stream.wrapping_mul(0x9e37_79b9_7f4a_7c15))
    }

    pub(crate) fn knn_seed(&self) -> u64 {
        self.seed(0)
    }

    pub(crate) fn sampling_seed(&self) -> u64 {
        self.seed(1)
    }

    fn init_seed(&self) -> u64 {
        self.seed(2)
    }

    fn label_seed(&self) -> u64 {
        self.seed(3)
    }

    fn query_seed(&self) -> u64 {
        self.seed(4)
    }

    fn resample_seed(&self, iter: usize) -> u64 {
        self.seed(1000 + iter as u64)
    }

    /// Every derived seed by purpose, as recorded in run manifests.
    pub fn seed_streams(&self) -> Vec<(&'static str, u64)> {
        vec![
            ("knn", self.knn_seed()),
            ("sampling", self.sampling_seed()),
            ("init", self.init_seed()),
            ("labels", self.label_seed()),
            ("query", self.query_seed()),
        ]
    }

    /// Largest usable `m` for `n` points.
    fn m_for(&self, n: usize) -> usize {
        self.m.min(n.saturating_sub(self.k + 1))
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(CamelError::InvalidParameter(
                "embedding dimension must be >= 1".into(),
            ));
        }
        if self.k == 0 {
            return Err(CamelError::InvalidParameter("k must be >= 1".into()));
        }
        self.force.validate()?;
        self.optim.validate()
    }
}

/// What the labels contributed to a supervised model.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LabelInfo {
    pub kind: LabelKind,
    pub n_classes: usize,
    /// Weight after clamping and, for semi-supervised fits, credibility.
    pub w_label: f64,
    pub scale: f64,
    /// Credibility factor of a semi-supervised fit.
    pub credibility: Option<f64>,
}

/// A fitted embedding with everything needed to project new points and to
/// invert embedding locations back into feature space.
#[derive(Debug, Clone, PartialEq)]
pub struct CamelModel {
    pub(crate) preprocessor: Preprocessor,
    pub(crate) train_x: DataMatrix,
    pub(crate) train_y: Array2<f64>,
    pub(crate) graph: NeighborGraph,
    pub(crate) c_high: EdgeCurvature,
    pub(crate) config: FitConfig,
    pub(crate) label_info: Option<LabelInfo>,
}

impl CamelModel {
    pub fn embedding(&self) -> &Array2<f64> {
        &self.train_y
    }

    /// Preprocessed training features.
    pub fn train_features(&self) -> &DataMatrix {
        &self.train_x
    }

    pub fn preprocessor(&self) -> &Preprocessor {
        &self.preprocessor
    }

    pub fn graph(&self) -> &NeighborGraph {
        &self.graph
    }

    pub fn high_curvature(&self) -> &EdgeCurvature {
        &self.c_high
    }

    pub fn config(&self) -> &FitConfig {
        &self.config
    }

    pub fn label_info(&self) -> Option<&LabelInfo> {
        self.label_info.as_ref()
    }

    pub fn n_samples(&self) -> usize {
        self.train_x.n_samples()
    }

    pub fn n_features(&self) -> usize {
        self.train_x.n_features()
    }

    pub fn dim(&self) -> usize {
        self.train_y.ncols()
    }
}

/// Neighbor lists of `space` re-expressed over the label-free features, so
/// distances, centroids and curvature ignore any label columns.
fn graph_over(
    space: ArrayView2<'_, f64>,
    xp: &DataMatrix,
    cfg: &FitConfig,
) -> Result<NeighborGraph> {
    let g = build_knn(space, cfg.k, cfg.knn_mode, cfg.knn_seed())?;
    NeighborGraph::from_lists(xp.view(), xp.view(), &g.lists())
}

fn redraw_hook<'a>(
    graph: &'a NeighborGraph,
    reference: ArrayView2<'a, f64>,
    m: usize,
    cfg: FitConfig,
) -> impl FnMut(usize, &mut ForceSystem) -> Result<()> + 'a {
    move |iter, system| {
        let s = sample_distant(graph, m, cfg.resample_seed(iter))?;
        system.resample(reference, &s)
    }
}

/// Common tail of the unsupervised and supervised modes.
fn fit_core(
    preprocessor: Preprocessor,
    xp: DataMatrix,
    graph: NeighborGraph,
    cfg: &FitConfig,
    label_info: Option<LabelInfo>,
    hooks: RunHooks<'_>,
) -> Result<CamelModel> {
    let n = xp.n_samples();
    let m = cfg.m_for(n);
    if m < cfg.m {
        log::warn!(
            "only {n} points: using m = {m} distant samples instead of {}",
            cfg.m
        );
    }
    let sampling = sample_distant(&graph, m, cfg.sampling_seed())?;
    let init = match cfg.optim.init {
        InitMode::Pca if cfg.dim <= xp.n_features() => InitMode::Pca,
        InitMode::Pca => {
            log::warn!("PCA init needs dim <= features; falling back to random init");
            InitMode::Random
        }
        InitMode::Interpolation => {
            return Err(CamelError::InvalidParameter(
                "interpolation init applies to new points only".into(),
            ))
        }
        other => other,
    };
    let y0 = init_embedding(xp.view(), cfg.dim, init, cfg.init_seed())?;
    let c_high = camel_curvature(xp.view(), &graph);
    let mut system =
        ForceSystem::with_target(xp.view(), &graph, &sampling, &c_high, cfg.force, None)?;
    let state = {
        let mut redraw = redraw_hook(&graph, xp.view(), m, *cfg);
        let RunHooks {
            progress, trace, ..
        } = hooks;
        let hooks = RunHooks {
            progress: progress.map(|p| p as &mut dyn FnMut(&IterStats)),
            trace: trace.map(|t| t as &mut dyn FnMut(usize, &[Vec<f64>; 3])),
            resample: Some(&mut redraw),
        };
        run(OptimState::new(y0, cfg.optim), &mut system, hooks)?
    };
    drop(system);
    Ok(CamelModel {
        preprocessor,
        train_x: xp,
        train_y: state.y,
        graph,
        c_high,
        config: *cfg,
        label_info,
    })
}

/// Unsupervised embedding of `x`.
pub fn fit_unsupervised(x: &DataMatrix, cfg: &FitConfig) -> Result<CamelModel> {
    fit_unsupervised_with(x, cfg, RunHooks::default())
}

pub fn fit_unsupervised_with(
    x: &DataMatrix,
    cfg: &FitConfig,
    hooks: RunHooks<'_>,
) -> Result<CamelModel> {
    cfg.validate()?;
    let (xp, pre) = crate::dataset::preprocess(x)?;
    let graph = graph_over(xp.view(), &xp, cfg)?;
    fit_core(pre, xp, graph, cfg, None, hooks)
}

/// Supervised embedding: neighbors are searched over features concatenated
/// with scaled label encodings, then the labels are dropped.
pub fn fit_supervised(
    x: &DataMatrix,
    labels: &LabelVector,
    w_label: f64,
    cfg: &FitConfig,
) -> Result<CamelModel> {
    fit_supervised_with(x, labels, w_label, cfg, RunHooks::default())
}

pub fn fit_supervised_with(
    x: &DataMatrix,
    labels: &LabelVector,
    w_label: f64,
    cfg: &FitConfig,
    hooks: RunHooks<'_>,
) -> Result<CamelModel> {
    if !labels.all_present() {
        return Err(CamelError::Labels(
            "some labels are missing; use the semi-supervised mode".into(),
        ));
    }
    fit_labeled(x, labels, w_label, None, cfg, hooks)
}

fn fit_labeled(
    x: &DataMatrix,
    labels: &LabelVector,
    w_label: f64,
    credibility: Option<f64>,
    cfg: &FitConfig,
    hooks: RunHooks<'_>,
) -> Result<CamelModel> {
    cfg.validate()?;
    if labels.len() != x.n_samples() {
        return Err(CamelError::Dimension(format!(
            "{} labels for {} samples",
            labels.len(),
            x.n_samples()
        )));
    }
    let (xp, pre) = crate::dataset::preprocess(x)?;
    let enc = encode_labels(
        labels,
        &xp,
        w_label,
        cfg.label_sample_size,
        cfg.label_seed(),
    )?;
    let augmented = concatenate(Axis(1), &[xp.view(), enc.scaled().view()])
        .map_err(|e| CamelError::Dimension(e.to_string()))?;
    let graph = graph_over(augmented.view(), &xp, cfg)?;
    let info = LabelInfo {
        kind: labels.kind(),
        n_classes: labels.n_classes(),
        w_label: w_label.min(MAX_LABEL_WEIGHT),
        scale: enc.scale,
        credibility,
    };
    fit_core(pre, xp, graph, cfg, Some(info), hooks)
}

/// Supervised embedding with several label blocks (for instance one
/// categorical and one numerical), each balanced independently.
pub fn fit_supervised_blocks(
    x: &DataMatrix,
    blocks: &[LabelVector],
    w_label: f64,
    cfg: &FitConfig,
) -> Result<CamelModel> {
    cfg.validate()?;
    if blocks
        .iter()
        .any(|b| !b.all_present() || b.len() != x.n_samples())
    {
        return Err(CamelError::Labels(
            "every label block needs a label for every sample".into(),
        ));
    }
    let (xp, pre) = crate::dataset::preprocess(x)?;
    let scaled = encode_label_blocks(
        blocks,
        &xp,
        w_label,
        cfg.label_sample_size,
        cfg.label_seed(),
    )?;
    let augmented = concatenate(Axis(1), &[xp.view(), scaled.view()])
        .map_err(|e| CamelError::Dimension(e.to_string()))?;
    let graph = graph_over(augmented.view(), &xp, cfg)?;
    fit_core(pre, xp, graph, cfg, None, RunHooks::default())
}

/// Semi-supervised embedding: missing labels are imputed from labeled
/// neighbors, then the supervised mode runs with the label weight scaled by
/// the credibility of the labeled fraction.
pub fn fit_semisupervised(
    x: &DataMatrix,
    labels: &LabelVector,
    semi: &SemiConfig,
    cfg: &FitConfig,
) -> Result<CamelModel> {
    fit_semisupervised_with(x, labels, semi, cfg, RunHooks::default())
}

pub fn fit_semisupervised_with(
    x: &DataMatrix,
    labels: &LabelVector,
    semi: &SemiConfig,
    cfg: &FitConfig,
    hooks: RunHooks<'_>,
) -> Result<CamelModel> {
    if labels.n_present() == 0 {
        return Err(CamelError::Labels(
            "semi-supervised fitting needs at least one labeled sample".into(),
        ));
    }
    let (xp, _) = crate::dataset::preprocess(x)?;
    let filled = impute_labels(&xp, labels, cfg.k, cfg.knn_mode, cfg.knn_seed())?;
    let ratio = labels.n_present() as f64 / labels.len() as f64;
    let credibility = semi.credibility(ratio);
    fit_labeled(
        x,
        &filled,
        credibility * semi.w_label,
        Some(credibility),
        cfg,
        hooks,
    )
}

/// Builds the combined system of frozen training points followed by free
/// query points. `space` holds the coordinates the graph lives in,
/// `optimized` those being moved.
struct Combined {
    graph: NeighborGraph,
    sampling: PairSampling,
    frozen: Vec<bool>,
}

fn combine(
    train_graph: &NeighborGraph,
    train_m: usize,
    query_graph: &NeighborGraph,
    n_train: usize,
    cfg: &FitConfig,
) -> Result<Combined> {
    let q = query_graph.n_points();
    let m = train_m.min(n_train.saturating_sub(cfg.k));
    let train_sampling = sample_distant(train_graph, m, cfg.sampling_seed())?;
    let query_sampling = sample_distant_from_reference(query_graph, n_train, m, cfg.query_seed())?;
    let sampling = if m == 0 {
        PairSampling::empty()
    } else {
        train_sampling.stacked(&query_sampling)?
    };
    let mut frozen = vec![true; n_train];
    frozen.extend(std::iter::repeat_n(false, q));
    Ok(Combined {
        graph: train_graph.stacked(query_graph)?,
        sampling,
        frozen,
    })
}

fn stack(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    concatenate(Axis(0), &[a, b]).map_err(|e| CamelError::Dimension(e.to_string()))
}

impl CamelModel {
    /// Projects new samples into the frozen training embedding.
    pub fn transform(&self, x_new: &DataMatrix) -> Result<Array2<f64>> {
        self.transform_with(x_new, &self.config.optim, RunHooks::default())
    }

    pub fn transform_with(
        &self,
        x_new: &DataMatrix,
        optim: &OptimConfig,
        hooks: RunHooks<'_>,
    ) -> Result<Array2<f64>> {
        if x_new.n_features() != self.n_features() {
            return Err(CamelError::Dimension(format!(
                "model expects {} features, got {}",
                self.n_features(),
                x_new.n_features()
            )));
        }
        let q = x_new.n_samples();
        if q == 0 {
            return Ok(Array2::zeros((0, self.dim())));
        }
        let cfg = FitConfig {
            optim: *optim,
            ..self.config
        };
        cfg.validate()?;
        let xq = self.preprocessor.transform(x_new)?;
        let n = self.n_samples();
        let k = cfg.k.min(n);
        if k != self.graph.k() {
            return Err(CamelError::InvalidParameter(
                "model k exceeds training size".into(),
            ));
        }
        let qg = knn_of_queries(
            xq.view(),
            self.train_x.view(),
            k,
            cfg.knn_mode,
            cfg.query_seed(),
        )?;
        let comb = combine(&self.graph, cfg.m, &qg, n, &cfg)?;
        let reference = stack(self.train_x.view(), xq.view())?;
        let mut system = ForceSystem::new(
            reference.view(),
            &comb.graph,
            &comb.sampling,
            cfg.force,
            Some(&comb.frozen),
        )?;
        let yq = match optim.init {
            InitMode::Random => random_near(&self.train_y, q, cfg.init_seed()),
            _ => init_interpolation(&qg, self.train_y.view())?,
        };
        let y0 = stack(self.train_y.view(), yq.view())?;
        let state = run(OptimState::new(y0, cfg.optim), &mut system, hooks)?;
        Ok(state.y.slice(s![n.., ..]).to_owned())
    }

    /// Reconstructs feature vectors for embedding locations `y_new` by
    /// running the force field in feature space with the training features
    /// frozen. Returned rows are in the original (unpreprocessed) units.
    pub fn inverse_transform(
        &self,
        y_new: ArrayView2<'_, f64>,
        optim: &OptimConfig,
    ) -> Result<Array2<f64>> {
        self.inverse_transform_with(y_new, optim, RunHooks::default())
    }

    pub fn inverse_transform_with(
        &self,
        y_new: ArrayView2<'_, f64>,
        optim: &OptimConfig,
        hooks: RunHooks<'_>,
    ) -> Result<Array2<f64>> {
        if y_new.ncols() != self.dim() {
            return Err(CamelError::Dimension(format!(
                "model embedding has {} dimensions, got {}",
                self.dim(),
                y_new.ncols()
            )));
        }
        crate::dataset::check_finite(y_new)?;
        let q = y_new.nrows();
        if q == 0 {
            return Ok(Array2::zeros((0, self.n_features())));
        }
        let cfg = FitConfig {
            optim: *optim,
            ..self.config
        };
        cfg.validate()?;
        let n = self.n_samples();
        let k = cfg.k.min(n - 1);
        // roles swapped: the graph lives in the embedding, features move
        let train_graph = build_knn(self.train_y.view(), k, cfg.knn_mode, cfg.knn_seed())?;
        let qg = knn_of_queries(
            y_new,
            self.train_y.view(),
            k,
            cfg.knn_mode,
            cfg.query_seed(),
        )?;
        let comb = combine(&train_graph, cfg.m, &qg, n, &cfg)?;
        let reference = stack(self.train_y.view(), y_new)?;
        let mut system = ForceSystem::new(
            reference.view(),
            &comb.graph,
            &comb.sampling,
            cfg.force,
            Some(&comb.frozen),
        )?;
        let xq0 = match optim.init {
            InitMode::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.init_seed());
                Array2::from_shape_fn((q, self.n_features()), |_| {
                    INIT_STD * rng.sample::<f64, _>(StandardNormal)
                })
            }
            _ => init_interpolation(&qg, self.train_x.view())?,
        };
        let x0 = stack(self.train_x.view(), xq0.view())?;
        let state = run(OptimState::new(x0, cfg.optim), &mut system, hooks)?;
        Ok(self
            .preprocessor
            .inverse_transform(state.y.slice(s![n.., ..])))
    }
}

/// Gaussian draws of standard deviation [`INIT_STD`] around the centre of
/// the training embedding.
fn random_near(train_y: &Array2<f64>, q: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centre = train_y.mean_axis(Axis(0)).expect("non-empty training set");
    Array2::from_shape_fn((q, train_y.ncols()), |(_, c)| {
        centre[c] + INIT_STD * rng.sample::<f64, _>(StandardNormal)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{gen_gaussian_blobs, gen_swiss_roll};

    fn quick(max_iter: usize) -> FitConfig {
        let mut cfg = FitConfig::default();
        cfg.optim.max_iter = max_iter;
        cfg
    }

    fn diameter(y: &Array2<f64>) -> f64 {
        let mut best = 0.0f64;
        for a in y.rows() {
            for b in y.rows() {
                best = best.max(crate::linalg::dist(
                    a.as_slice().unwrap(),
                    b.as_slice().unwrap(),
                ));
            }
        }
        best
    }

    #[test]
    fn unsupervised_is_deterministic() {
        let (x, _) = gen_gaussian_blobs(40, 3, 5, 8.0, 2);
        let a = fit_unsupervised(&x, &quick(60)).unwrap();
        let b = fit_unsupervised(&x, &quick(60)).unwrap();
        assert_eq!(a.embedding(), b.embedding());
        assert!(a.embedding().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn zero_label_weight_reproduces_unsupervised() {
        let (x, labels) = gen_gaussian_blobs(40, 3, 5, 8.0, 3);
        let cfg = quick(60);
        let plain = fit_unsupervised(&x, &cfg).unwrap();
        let sup = fit_supervised(&x, &labels, 0.0, &cfg).unwrap();
        assert_eq!(plain.embedding(), sup.embedding());
        assert_eq!(sup.label_info().unwrap().scale, 0.0);
    }

    #[test]
    fn supervised_rejects_missing_labels() {
        let (x, labels) = gen_gaussian_blobs(20, 2, 3, 8.0, 4);
        let mut mask = vec![true; 40];
        mask[3] = false;
        let partial = labels.with_mask(&mask).unwrap();
        assert!(matches!(
            fit_supervised(&x, &partial, 0.5, &quick(5)),
            Err(CamelError::Labels(_))
        ));
    }

    #[test]
    fn semisupervised_records_credibility() {
        let (x, labels) = gen_gaussian_blobs(30, 3, 4, 8.0, 5);
        let mask: Vec<bool> = (0..90).map(|i| i % 3 == 0).collect();
        let partial = labels.with_mask(&mask).unwrap();
        let semi = SemiConfig::default();
        let model = fit_semisupervised(&x, &partial, &semi, &quick(30)).unwrap();
        let info = model.label_info().unwrap();
        let expected = semi.credibility(1.0 / 3.0);
        assert!((info.credibility.unwrap() - expected).abs() < 1e-15);
        assert!((info.w_label - expected * semi.w_label).abs() < 1e-15);
    }

    #[test]
    fn transform_freezes_training_and_anchors_duplicates() {
        let (x, _) = gen_swiss_roll(400, 0.0, 6);
        let model = fit_unsupervised(&x, &quick(150)).unwrap();
        let before = model.embedding().clone();
        let picks: Vec<usize> = (0..400).step_by(9).collect();
        let yq = model.transform(&x.select_rows(&picks)).unwrap();
        assert_eq!(model.embedding(), &before);
        let mut gaps: Vec<f64> = picks
            .iter()
            .enumerate()
            .map(|(r, &p)| {
                crate::linalg::dist(
                    yq.row(r).as_slice().unwrap(),
                    before.row(p).as_slice().unwrap(),
                )
            })
            .collect();
        gaps.sort_by(f64::total_cmp);
        // a duplicate sits among its anchor's neighbors, so the typical gap
        // is a small fraction of the layout
        let median = gaps[gaps.len() / 2];
        assert!(median <= 0.05 * diameter(&before), "median gap {median}");
    }

    #[test]
    fn transform_of_nothing_is_empty() {
        let (x, _) = gen_gaussian_blobs(20, 2, 3, 8.0, 7);
        let model = fit_unsupervised(&x, &quick(5)).unwrap();
        let empty = DataMatrix::new_allow_empty(Array2::zeros((0, 3))).unwrap();
        assert_eq!(model.transform(&empty).unwrap().dim(), (0, 2));
        let wrong = DataMatrix::new(Array2::zeros((2, 4))).unwrap();
        assert!(matches!(
            model.transform(&wrong),
            Err(CamelError::Dimension(_))
        ));
    }

    #[test]
    fn inverse_at_training_locations_is_close() {
        let (x, _) = gen_gaussian_blobs(50, 3, 6, 10.0, 8);
        let model = fit_unsupervised(&x, &quick(150)).unwrap();
        let picks = [1usize, 60, 140];
        let y = model.embedding().select(Axis(0), &picks);
        let back = model
            .inverse_transform(y.view(), &model.config().optim)
            .unwrap();
        let orig = x.select_rows(&picks);
        let scale: f64 = x.values().iter().map(|v| v.abs()).sum::<f64>() / x.values().len() as f64;
        for r in 0..picks.len() {
            let err: f64 = (&back.row(r) - &orig.row(r))
                .iter()
                .map(|v| v.abs())
                .sum::<f64>()
                / 6.0;
            assert!(err < 0.5 * scale, "row {r}: error {err}, scale {scale}");
        }
    }
}
