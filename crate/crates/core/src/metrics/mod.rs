//! Embedding quality metrics: co-ranking scores, neighbor-list scores,
//! classifier accuracies, sampled global scores, centroid scores, curvature
//! similarity and the OPTICS cluster ratio.

mod classify;
mod global;
mod local;
mod optics;
mod ranking;

pub use classify::{knn_classify, svm_classify, SVM_EPOCHS, SVM_LAMBDA};
pub use global::{
    average_ranks, centroid_dist, centroid_knn, class_centroids, spearman, spearman_corr,
    triplet_score,
};
pub use local::{
    curv_simi, curv_simi_score, mean_curvatures, nnwr, nnwr_from_graphs, npp, npp_from_graphs,
};
pub use optics::{
    cluster_ratio_score, default_min_samples, optics_cluster_count, optics_ordering, xi_clusters,
    xi_labels, OpticsOrdering, DEFAULT_XI,
};
pub use ranking::{coranking, CoRankingMatrix, NeighborhoodScores};

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use ndarray::{ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::dataset::{subsample_indices, LabelKind, LabelVector};
use crate::error::{CamelError, Result};

/// Largest point count evaluated exactly; larger inputs are subsampled.
pub const MAX_EXACT_POINTS: usize = 10_000;
/// Neighbors used by the kNN vote.
pub const KNN_CLASSIFY_K: usize = 5;
/// Cross-validation folds of both classifiers.
pub const CV_FOLDS: usize = 5;
/// Nearest centroids compared per class.
pub const CENTROID_K: usize = 3;

/// The fourteen scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Metric {
    Trust,
    Conti,
    Lcmc,
    Auc,
    KnnClassify,
    SvmClassify,
    Npp,
    Triplet,
    SpearCorr,
    CenKnn,
    CenDist,
    CurvSimi,
    Nnwr,
    ClusterRatio,
}

impl Metric {
    pub const ALL: [Metric; 14] = [
        Metric::Trust,
        Metric::Conti,
        Metric::Lcmc,
        Metric::Auc,
        Metric::KnnClassify,
        Metric::SvmClassify,
        Metric::Npp,
        Metric::Triplet,
        Metric::SpearCorr,
        Metric::CenKnn,
        Metric::CenDist,
        Metric::CurvSimi,
        Metric::Nnwr,
        Metric::ClusterRatio,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Trust => "trust",
            Metric::Conti => "conti",
            Metric::Lcmc => "lcmc",
            Metric::Auc => "auc",
            Metric::KnnClassify => "knn_classify",
            Metric::SvmClassify => "svm_classify",
            Metric::Npp => "npp",
            Metric::Triplet => "triplet",
            Metric::SpearCorr => "spear_corr",
            Metric::CenKnn => "cen_knn",
            Metric::CenDist => "cen_dist",
            Metric::CurvSimi => "curv_simi",
            Metric::Nnwr => "nnwr",
            Metric::ClusterRatio => "cluster_ratio",
        }
    }

    /// Whether the metric needs categorical labels.
    pub fn needs_classes(self) -> bool {
        matches!(
            self,
            Metric::KnnClassify | Metric::SvmClassify | Metric::CenKnn | Metric::CenDist
        )
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = CamelError;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == key)
            .ok_or_else(|| CamelError::InvalidParameter(format!("unknown metric '{s}'")))
    }
}

/// Settings of a metric run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricConfig {
    pub k: usize,
    pub seed: u64,
    pub metrics: Vec<Metric>,
    pub max_points: usize,
    pub xi: f64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            k: 10,
            seed: 0,
            metrics: Metric::ALL.to_vec(),
            max_points: MAX_EXACT_POINTS,
            xi: DEFAULT_XI,
        }
    }
}

/// Parameters actually used, for the record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportParams {
    pub k: usize,
    pub seed: u64,
    pub n_points: usize,
    pub n_evaluated: usize,
    pub n_triplets: usize,
    pub n_pairs: usize,
    pub optics_min_samples: usize,
    pub xi: f64,
}

/// Intermediate quantities worth keeping next to the scores.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportArtifacts {
    pub clusters_hd: Option<usize>,
    pub clusters_ld: Option<usize>,
    pub curvature_hd: Option<f64>,
    pub curvature_ld: Option<f64>,
    /// Requested metrics that could not be computed, with the reason.
    pub skipped: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub scores: BTreeMap<String, f64>,
    pub params: ReportParams,
    pub artifacts: ReportArtifacts,
}

impl MetricReport {
    pub fn get(&self, m: Metric) -> Option<f64> {
        self.scores.get(m.name()).copied()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Aligned two-column table in canonical metric order.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        for m in Metric::ALL {
            if let Some(v) = self.get(m) {
                out.push_str(&format!("{:<14} {:>8.4}\n", m.name(), v));
            }
        }
        out
    }
}

/// Runs the selected metrics on `x` (high-dimensional) and `y` (embedding).
///
/// Labels are optional: class-based metrics need categorical labels, the
/// cluster ratio uses the number of classes (one for numerical labels or no
/// labels).
pub fn evaluate(
    x: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
    labels: Option<&LabelVector>,
    cfg: &MetricConfig,
) -> Result<MetricReport> {
    if x.nrows() != y.nrows() {
        return Err(CamelError::Dimension(format!(
            "{} high-dimensional rows against {} embedding rows",
            x.nrows(),
            y.nrows()
        )));
    }
    if let Some(l) = labels {
        if l.len() != x.nrows() {
            return Err(CamelError::Dimension(format!(
                "{} labels for {} rows",
                l.len(),
                x.nrows()
            )));
        }
    }
    let n_points = x.nrows();
    let keep = subsample_indices(n_points, cfg.max_points, cfg.seed);
    let (xs, ys) = (x.select(Axis(0), &keep), y.select(Axis(0), &keep));
    let labels = labels.map(|l| l.select(&keep));
    let n = keep.len();
    if cfg.k == 0 || cfg.k + 2 > n {
        return Err(CamelError::InvalidParameter(format!(
            "metric k = {} needs at least k + 2 points, got {n}",
            cfg.k
        )));
    }
    let classes: Option<Vec<usize>> = labels
        .as_ref()
        .filter(|l| l.kind() == LabelKind::Categorical && l.all_present())
        .map(LabelVector::class_indices);
    let min_samples = default_min_samples(n);
    let params = ReportParams {
        k: cfg.k,
        seed: cfg.seed,
        n_points,
        n_evaluated: n,
        n_triplets: 5 * n,
        n_pairs: 5 * n,
        optics_min_samples: min_samples,
        xi: cfg.xi,
    };
    let mut report = MetricReport {
        scores: BTreeMap::new(),
        params,
        artifacts: ReportArtifacts::default(),
    };
    let want = |m: Metric| cfg.metrics.contains(&m);
    let (xv, yv) = (xs.view(), ys.view());

    if [Metric::Trust, Metric::Conti, Metric::Lcmc, Metric::Auc]
        .into_iter()
        .any(want)
    {
        let s = NeighborhoodScores::compute(xv, yv, cfg.k)?;
        for (m, v) in [
            (Metric::Trust, s.trust),
            (Metric::Conti, s.conti),
            (Metric::Lcmc, s.lcmc),
            (Metric::Auc, s.auc),
        ] {
            if want(m) {
                report.scores.insert(m.name().into(), v);
            }
        }
    }
    if [Metric::Npp, Metric::Nnwr, Metric::CurvSimi]
        .into_iter()
        .any(want)
    {
        let (hd, ld) = local::graphs(xv, yv, cfg.k)?;
        if want(Metric::Npp) {
            report
                .scores
                .insert(Metric::Npp.name().into(), npp_from_graphs(&hd, &ld));
        }
        if want(Metric::Nnwr) {
            report
                .scores
                .insert(Metric::Nnwr.name().into(), nnwr_from_graphs(&hd, &ld));
        }
        if want(Metric::CurvSimi) {
            let (a, b) = mean_curvatures(xv, yv, &hd, &ld);
            report.artifacts.curvature_hd = Some(a);
            report.artifacts.curvature_ld = Some(b);
            report
                .scores
                .insert(Metric::CurvSimi.name().into(), curv_simi_score(a, b));
        }
    }
    if want(Metric::Triplet) {
        report.scores.insert(
            Metric::Triplet.name().into(),
            triplet_score(xv, yv, 5 * n, cfg.seed)?,
        );
    }
    if want(Metric::SpearCorr) {
        report.scores.insert(
            Metric::SpearCorr.name().into(),
            spearman_corr(xv, yv, 5 * n, cfg.seed)?,
        );
    }
    for m in Metric::ALL
        .into_iter()
        .filter(|m| m.needs_classes() && want(*m))
    {
        let Some(c) = classes.as_ref() else {
            report
                .artifacts
                .skipped
                .insert(m.name().into(), "needs complete categorical labels".into());
            continue;
        };
        let n_classes = c.iter().max().map_or(0, |v| v + 1);
        let value = match m {
            Metric::KnnClassify => Some(knn_classify(yv, c, KNN_CLASSIFY_K, CV_FOLDS, cfg.seed)?),
            Metric::SvmClassify => Some(svm_classify(yv, c, CV_FOLDS, cfg.seed)?),
            Metric::CenKnn if n_classes >= 2 => {
                Some(centroid_knn(xv, yv, c, CENTROID_K.min(n_classes - 1))?)
            }
            Metric::CenDist if n_classes >= 2 => Some(centroid_dist(xv, yv, c)?),
            _ => None,
        };
        match value {
            Some(v) => {
                report.scores.insert(m.name().into(), v);
            }
            None => {
                report
                    .artifacts
                    .skipped
                    .insert(m.name().into(), "needs at least two classes".into());
            }
        }
    }
    if want(Metric::ClusterRatio) {
        let hd = match &labels {
            Some(l) if l.kind() == LabelKind::Categorical => l.n_classes().max(1),
            _ => 1,
        };
        let ld = optics_cluster_count(yv, min_samples, cfg.xi)?;
        report.artifacts.clusters_hd = Some(hd);
        report.artifacts.clusters_ld = Some(ld);
        report.scores.insert(
            Metric::ClusterRatio.name().into(),
            cluster_ratio_score(hd, ld),
        );
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::gen_gaussian_blobs;

    #[test]
    fn metric_names_round_trip() {
        for m in Metric::ALL {
            assert_eq!(m.name().parse::<Metric>().unwrap(), m);
        }
        assert_eq!("Curv-Simi".parse::<Metric>().unwrap(), Metric::CurvSimi);
        assert!("nope".parse::<Metric>().is_err());
    }

    #[test]
    fn self_evaluation_is_perfect() {
        let (x, labels) = gen_gaussian_blobs(30, 3, 4, 6.0, 1);
        let r = evaluate(x.view(), x.view(), Some(&labels), &MetricConfig::default()).unwrap();
        for m in [
            Metric::Trust,
            Metric::Conti,
            Metric::Auc,
            Metric::Npp,
            Metric::Triplet,
            Metric::SpearCorr,
            Metric::Nnwr,
            Metric::CurvSimi,
            Metric::CenKnn,
            Metric::CenDist,
        ] {
            assert!(
                (r.get(m).unwrap() - 1.0).abs() < 1e-9,
                "{m}: {:?}",
                r.get(m)
            );
        }
        assert!((r.get(Metric::Lcmc).unwrap() - (1.0 - 10.0 / 89.0)).abs() < 1e-12);
        assert_eq!(r.scores.len(), 14);
    }

    #[test]
    fn class_metrics_skipped_without_labels() {
        let (x, _) = gen_gaussian_blobs(20, 2, 3, 5.0, 2);
        let r = evaluate(x.view(), x.view(), None, &MetricConfig::default()).unwrap();
        assert!(r.get(Metric::KnnClassify).is_none());
        assert!(r.artifacts.skipped.contains_key("knn_classify"));
        assert_eq!(r.artifacts.clusters_hd, Some(1));
    }

    #[test]
    fn report_serializes() {
        let (x, labels) = gen_gaussian_blobs(15, 2, 3, 5.0, 3);
        let cfg = MetricConfig {
            metrics: vec![Metric::Trust, Metric::Npp],
            ..Default::default()
        };
        let r = evaluate(x.view(), x.view(), Some(&labels), &cfg).unwrap();
        let back: MetricReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
        assert!(r.to_table().contains("trust"));
    }
}
