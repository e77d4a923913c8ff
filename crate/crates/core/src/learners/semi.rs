//! Label imputation and the imputation credibility gate.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dataset::{DataMatrix, LabelKind, LabelVector};
use crate::error::{CamelError, Result};
use crate::knn::{knn_of_queries, KnnMode};

/// Settings of the semi-supervised mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SemiConfig {
    pub w_label: f64,
    /// Label ratio at which credibility is one half.
    pub credibility_center: f64,
    /// Steepness of the credibility transition.
    pub credibility_sharpness: f64,
}

impl Default for SemiConfig {
    fn default() -> Self {
        Self {
            w_label: 0.5,
            credibility_center: 0.05,
            credibility_sharpness: 100.0,
        }
    }
}

impl SemiConfig {
    /// `1/2 + atan(sharpness * (ratio - center)) / pi`, in `(0, 1)`.
    pub fn credibility(&self, label_ratio: f64) -> f64 {
        0.5 + (self.credibility_sharpness * (label_ratio - self.credibility_center)).atan() / PI
    }

    /// Label weight actually used for a given labeled fraction.
    pub fn effective_weight(&self, label_ratio: f64) -> f64 {
        self.credibility(label_ratio) * self.w_label
    }
}

/// Fills every missing label from the labeled samples nearest to it in `x`:
/// the neighbor mean for numerical labels, the most frequent neighbor class
/// (ties to the smallest class index) for categorical labels.
pub fn impute_labels(
    x: &DataMatrix,
    labels: &LabelVector,
    k: usize,
    mode: KnnMode,
    seed: u64,
) -> Result<LabelVector> {
    if labels.len() != x.n_samples() {
        return Err(CamelError::Dimension(format!(
            "{} labels for {} samples",
            labels.len(),
            x.n_samples()
        )));
    }
    let labeled: Vec<usize> = (0..labels.len()).filter(|&i| labels.mask()[i]).collect();
    let missing: Vec<usize> = (0..labels.len()).filter(|&i| !labels.mask()[i]).collect();
    if labeled.is_empty() {
        return Err(CamelError::Labels(
            "semi-supervised fitting needs at least one labeled sample".into(),
        ));
    }
    if missing.is_empty() {
        return Ok(labels.clone());
    }
    let refs = x.values().select(ndarray::Axis(0), &labeled);
    let queries = x.values().select(ndarray::Axis(0), &missing);
    let kk = k.min(labeled.len()).max(1);
    let graph = knn_of_queries(queries.view(), refs.view(), kk, mode, seed)?;
    let filled: Vec<(usize, f64)> = missing
        .iter()
        .enumerate()
        .map(|(q, &i)| {
            let neigh = graph.neighbors(q);
            let value = match labels.kind() {
                LabelKind::Numerical => {
                    neigh
                        .iter()
                        .map(|&r| labels.value(labeled[r]).expect("labeled"))
                        .sum::<f64>()
                        / neigh.len() as f64
                }
                LabelKind::Categorical => {
                    let mut votes = vec![0usize; labels.n_classes().max(1)];
                    for &r in neigh {
                        votes[labels.class_of(labeled[r]).expect("labeled")] += 1;
                    }
                    // first maximum is the smallest class index among ties
                    let best = votes
                        .iter()
                        .enumerate()
                        .fold(
                            (0usize, 0usize),
                            |acc, (c, &v)| if v > acc.1 { (c, v) } else { acc },
                        );
                    best.0 as f64
                }
            };
            (i, value)
        })
        .collect();
    Ok(labels.with_filled(&filled))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn credibility_is_half_at_center() {
        let s = SemiConfig::default();
        assert_eq!(s.credibility(0.05), 0.5);
    }

    #[test]
    fn credibility_at_full_labels() {
        let s = SemiConfig::default();
        let expect = 0.5 + 95f64.atan() / PI;
        assert!((s.credibility(1.0) - expect).abs() < 1e-15);
        assert!((s.credibility(1.0) - 0.99665).abs() < 1e-5);
    }

    #[test]
    fn credibility_small_ratio_is_small_and_monotone() {
        let s = SemiConfig::default();
        assert!(s.credibility(0.0) < 0.07);
        let xs: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
        assert!(xs
            .windows(2)
            .all(|w| s.credibility(w[1]) >= s.credibility(w[0])));
    }

    #[test]
    fn numeric_imputation_is_neighbor_mean() {
        let x = DataMatrix::new(array![[0.0], [1.0], [10.0], [0.4]]).unwrap();
        let labels = LabelVector::numerical_partial(&[Some(2.0), Some(4.0), Some(100.0), None]);
        let out = impute_labels(&x, &labels, 2, KnnMode::Exact, 0).unwrap();
        assert_eq!(out.value(3), Some(3.0));
        assert!(out.all_present());
    }

    #[test]
    fn categorical_tie_goes_to_smallest_class() {
        let x = DataMatrix::new(array![[-1.0], [1.0], [0.0]]).unwrap();
        let labels = LabelVector::categorical(&[Some("b"), Some("a"), None]);
        let out = impute_labels(&x, &labels, 2, KnnMode::Exact, 0).unwrap();
        // classes sorted: a = 0, b = 1; one vote each
        assert_eq!(out.class_of(2), Some(0));
    }

    #[test]
    fn no_labels_is_an_error() {
        let x = DataMatrix::new(array![[0.0], [1.0]]).unwrap();
        let labels = LabelVector::numerical_partial(&[None, None]);
        assert!(impute_labels(&x, &labels, 1, KnnMode::Exact, 0).is_err());
    }
}
