use ndarray::{concatenate, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::DataMatrix;
use crate::error::{CamelError, Result};

/// Largest label weight actually used; `w_label = 1` would need an infinite scale.
pub const MAX_LABEL_WEIGHT: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelKind {
    Categorical,
    Numerical,
}

/// Per-sample labels with a presence mask.
///
/// Categorical labels are stored as indices into a sorted class list, so the
/// smallest class index is also the smallest class name.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelVector {
    kind: LabelKind,
    values: Vec<f64>,
    mask: Vec<bool>,
    classes: Vec<String>,
}

impl LabelVector {
    pub fn categorical<S: AsRef<str>>(labels: &[Option<S>]) -> Self {
        let mut classes: Vec<String> = labels
            .iter()
            .flatten()
            .map(|s| s.as_ref().to_string())
            .collect();
        let numeric = classes.iter().all(|c| c.parse::<f64>().is_ok());
        if numeric {
            classes.sort_by(|a, b| {
                a.parse::<f64>()
                    .unwrap()
                    .total_cmp(&b.parse::<f64>().unwrap())
            });
        } else {
            classes.sort();
        }
        classes.dedup();
        let mut values = Vec::with_capacity(labels.len());
        let mut mask = Vec::with_capacity(labels.len());
        for l in labels {
            match l {
                Some(s) => {
                    let idx = classes.iter().position(|c| c == s.as_ref()).unwrap();
                    values.push(idx as f64);
                    mask.push(true);
                }
                None => {
                    values.push(0.0);
                    mask.push(false);
                }
            }
        }
        Self {
            kind: LabelKind::Categorical,
            values,
            mask,
            classes,
        }
    }

    pub fn categorical_from_indices(labels: &[usize]) -> Self {
        let names: Vec<Option<String>> = labels.iter().map(|l| Some(l.to_string())).collect();
        Self::categorical(&names)
    }

    pub fn numerical(values: &[f64]) -> Self {
        Self {
            kind: LabelKind::Numerical,
            values: values.to_vec(),
            mask: values.iter().map(|v| v.is_finite()).collect(),
            classes: Vec::new(),
        }
    }

    pub fn numerical_partial(values: &[Option<f64>]) -> Self {
        Self {
            kind: LabelKind::Numerical,
            values: values.iter().map(|v| v.unwrap_or(0.0)).collect(),
            mask: values
                .iter()
                .map(|v| v.is_some_and(f64::is_finite))
                .collect(),
            classes: Vec::new(),
        }
    }

    /// Hides labels where `mask` is false (labels already missing stay missing).
    pub fn with_mask(mut self, mask: &[bool]) -> Result<Self> {
        if mask.len() != self.len() {
            return Err(CamelError::Dimension(format!(
                "mask has {} entries, labels have {}",
                mask.len(),
                self.len()
            )));
        }
        for (m, keep) in self.mask.iter_mut().zip(mask) {
            *m &= *keep;
        }
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn kind(&self) -> LabelKind {
        self.kind
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn n_present(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }

    pub fn all_present(&self) -> bool {
        self.mask.iter().all(|m| *m)
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn class_of(&self, i: usize) -> Option<usize> {
        (self.kind == LabelKind::Categorical && self.mask[i]).then(|| self.values[i] as usize)
    }

    pub fn value(&self, i: usize) -> Option<f64> {
        self.mask[i].then(|| self.values[i])
    }

    /// Class index per sample; missing samples map to `usize::MAX`.
    pub fn class_indices(&self) -> Vec<usize> {
        (0..self.len())
            .map(|i| self.class_of(i).unwrap_or(usize::MAX))
            .collect()
    }

    pub fn select(&self, indices: &[usize]) -> LabelVector {
        LabelVector {
            kind: self.kind,
            values: indices.iter().map(|&i| self.values[i]).collect(),
            mask: indices.iter().map(|&i| self.mask[i]).collect(),
            classes: self.classes.clone(),
        }
    }

    /// Returns a copy with sample `i` set to `value` (a class index for
    /// categorical labels) and marked present.
    pub fn with_filled(&self, filled: &[(usize, f64)]) -> LabelVector {
        let mut out = self.clone();
        for &(i, v) in filled {
            out.values[i] = v;
            out.mask[i] = true;
        }
        out
    }

    /// One-hot rows for categorical labels, a single column for numerical
    /// labels. Missing samples encode as zeros.
    pub fn encode(&self) -> Array2<f64> {
        match self.kind {
            LabelKind::Categorical => {
                let mut m = Array2::zeros((self.len(), self.n_classes().max(1)));
                for i in 0..self.len() {
                    if let Some(c) = self.class_of(i) {
                        m[[i, c]] = 1.0;
                    }
                }
                m
            }
            LabelKind::Numerical => {
                let mut m = Array2::zeros((self.len(), 1));
                for i in 0..self.len() {
                    if self.mask[i] {
                        m[[i, 0]] = self.values[i];
                    }
                }
                m
            }
        }
    }
}

/// Encoded label block and the factor that balances it against feature distances.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedLabels {
    pub matrix: Array2<f64>,
    pub scale: f64,
}

impl EncodedLabels {
    pub fn scaled(&self) -> Array2<f64> {
        &self.matrix * self.scale
    }
}

pub(crate) fn checked_label_weight(w_label: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&w_label) {
        return Err(CamelError::InvalidParameter(format!(
            "label weight must lie in [0, 1], got {w_label}"
        )));
    }
    if w_label > MAX_LABEL_WEIGHT {
        log::warn!("label weight {w_label} clamped to {MAX_LABEL_WEIGHT}");
        return Ok(MAX_LABEL_WEIGHT);
    }
    Ok(w_label)
}

/// Pairs among `present` used for mean-distance estimation: every pair when
/// there are at most `sample_size` of them, otherwise `sample_size` random ones.
fn distance_pairs(present: &[usize], sample_size: usize, seed: u64) -> Vec<(usize, usize)> {
    let p = present.len();
    let total = p * p.saturating_sub(1) / 2;
    if total <= sample_size {
        let mut out = Vec::with_capacity(total);
        for a in 0..p {
            for b in a + 1..p {
                out.push((present[a], present[b]));
            }
        }
        return out;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..sample_size)
        .map(|_| {
            let a = rng.random_range(0..p);
            let mut b = rng.random_range(0..p - 1);
            if b >= a {
                b += 1;
            }
            (present[a], present[b])
        })
        .collect()
}

fn row_dist(m: &Array2<f64>, i: usize, j: usize) -> f64 {
    m.row(i)
        .iter()
        .zip(m.row(j).iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// Encodes labels and computes the label scale
/// `w/(1-w) * mean feature distance / mean label distance`, both means taken
/// over the same sampled pairs of labeled samples.
pub fn encode_labels(
    labels: &LabelVector,
    x: &DataMatrix,
    w_label: f64,
    sample_size: usize,
    seed: u64,
) -> Result<EncodedLabels> {
    if labels.len() != x.n_samples() {
        return Err(CamelError::Dimension(format!(
            "{} labels for {} samples",
            labels.len(),
            x.n_samples()
        )));
    }
    let w = checked_label_weight(w_label)?;
    let present: Vec<usize> = (0..labels.len()).filter(|&i| labels.mask()[i]).collect();
    if present.is_empty() {
        return Err(CamelError::Labels("no label present".into()));
    }
    let matrix = labels.encode();
    if w == 0.0 || present.len() < 2 {
        return Ok(EncodedLabels { matrix, scale: 0.0 });
    }
    let pairs = distance_pairs(&present, sample_size.max(1), seed);
    let xv = x.values();
    let (mut dx, mut dl) = (0.0, 0.0);
    for &(i, j) in &pairs {
        dx += row_dist(xv, i, j);
        dl += row_dist(&matrix, i, j);
    }
    if dl <= 0.0 {
        log::warn!("all sampled label pairs coincide; label block carries no distance");
        return Ok(EncodedLabels { matrix, scale: 0.0 });
    }
    let scale = w / (1.0 - w) * (dx / dl);
    Ok(EncodedLabels { matrix, scale })
}

/// Concatenates several independently scaled label blocks (mixed categorical
/// and numerical labels).
pub fn encode_label_blocks(
    blocks: &[LabelVector],
    x: &DataMatrix,
    w_label: f64,
    sample_size: usize,
    seed: u64,
) -> Result<Array2<f64>> {
    let encoded = blocks
        .iter()
        .enumerate()
        .map(|(b, l)| encode_labels(l, x, w_label, sample_size, seed.wrapping_add(b as u64)))
        .collect::<Result<Vec<_>>>()?;
    let scaled: Vec<Array2<f64>> = encoded.iter().map(EncodedLabels::scaled).collect();
    let views: Vec<_> = scaled.iter().map(|m| m.view()).collect();
    if views.is_empty() {
        return Ok(Array2::zeros((x.n_samples(), 0)));
    }
    Ok(concatenate(Axis(1), &views).expect("same row count"))
}
