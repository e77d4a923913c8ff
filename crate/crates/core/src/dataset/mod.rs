//! Data ingestion, preprocessing, label encoding and synthetic generators.

mod io;
mod labels;
mod synthetic;

pub use io::{
    load_idx_images, load_idx_labels, load_labels_csv, load_mask_csv, load_matrix, read_binary_f32,
    write_binary_f32, write_matrix_csv, MatrixFormat, BINARY_MAGIC, BINARY_VERSION,
};
pub use labels::{
    encode_label_blocks, encode_labels, EncodedLabels, LabelKind, LabelVector, MAX_LABEL_WEIGHT,
};
pub use synthetic::{gen_blobs, gen_gaussian_blobs, gen_swiss_roll, SWISS_ROLL_T_RANGE};

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CamelError, Result};

/// Dense row-major sample matrix, `n_samples x n_features`, all entries finite.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: Array2<f64>,
}

impl DataMatrix {
    /// Wraps `values`, rejecting empty shapes and non-finite entries.
    pub fn new(values: Array2<f64>) -> Result<Self> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(CamelError::Dimension(format!(
                "matrix must be non-empty, got {}x{}",
                values.nrows(),
                values.ncols()
            )));
        }
        check_finite(values.view())?;
        Ok(Self {
            values: into_standard(values),
        })
    }

    /// Like [`DataMatrix::new`] but allows zero rows (an empty query batch).
    pub fn new_allow_empty(values: Array2<f64>) -> Result<Self> {
        if values.ncols() == 0 {
            return Err(CamelError::Dimension(
                "matrix must have at least one column".into(),
            ));
        }
        check_finite(values.view())?;
        Ok(Self {
            values: into_standard(values),
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        let mut flat = Vec::with_capacity(rows.len() * d);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(CamelError::Dimension(format!(
                    "row {r} has {} columns, expected {d}",
                    row.len()
                )));
            }
            flat.extend_from_slice(row);
        }
        let values = Array2::from_shape_vec((rows.len(), d), flat)
            .map_err(|e| CamelError::Dimension(e.to_string()))?;
        Self::new(values)
    }

    pub fn n_samples(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.values.row(i)
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.values
    }

    /// Rows selected by `indices`, in that order.
    pub fn select_rows(&self, indices: &[usize]) -> DataMatrix {
        DataMatrix {
            values: self.values.select(Axis(0), indices),
        }
    }
}

fn into_standard(values: Array2<f64>) -> Array2<f64> {
    if values.is_standard_layout() {
        values
    } else {
        values.as_standard_layout().into_owned()
    }
}

pub(crate) fn check_finite(values: ArrayView2<'_, f64>) -> Result<()> {
    for ((row, col), v) in values.indexed_iter() {
        if !v.is_finite() {
            return Err(CamelError::NonFinite { row, col });
        }
    }
    Ok(())
}

/// Centering and global scaling fitted on training data.
///
/// Each feature is centered on its own mean; the whole matrix is then divided
/// by one matrix-wide standard deviation so relative feature scales survive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preprocessor {
    pub mean: Vec<f64>,
    pub scale: f64,
}

impl Preprocessor {
    pub fn fit(x: &DataMatrix) -> Result<Self> {
        if x.n_samples() < 2 {
            return Err(CamelError::Degenerate(
                "preprocessing needs at least two samples".into(),
            ));
        }
        let mean: Array1<f64> = x.values.mean_axis(Axis(0)).expect("non-empty");
        let n = (x.n_samples() * x.n_features()) as f64;
        let ss: f64 = x
            .values
            .rows()
            .into_iter()
            .map(|row| {
                row.iter()
                    .zip(mean.iter())
                    .map(|(v, m)| (v - m) * (v - m))
                    .sum::<f64>()
            })
            .sum();
        let scale = (ss / n).sqrt();
        if !(scale > 0.0) {
            return Err(CamelError::Degenerate(
                "all samples are identical (zero variance)".into(),
            ));
        }
        Ok(Self {
            mean: mean.to_vec(),
            scale,
        })
    }

    pub fn transform(&self, x: &DataMatrix) -> Result<DataMatrix> {
        if x.n_features() != self.mean.len() {
            return Err(CamelError::Dimension(format!(
                "expected {} features, got {}",
                self.mean.len(),
                x.n_features()
            )));
        }
        let mean = ArrayView1::from(&self.mean[..]);
        let values = (&x.values - &mean) / self.scale;
        Ok(DataMatrix {
            values: into_standard(values),
        })
    }

    pub fn inverse_transform(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        let mean = ArrayView1::from(&self.mean[..]);
        &x * self.scale + mean
    }
}

/// Fits a [`Preprocessor`] on `x` and applies it.
pub fn preprocess(x: &DataMatrix) -> Result<(DataMatrix, Preprocessor)> {
    let p = Preprocessor::fit(x)?;
    let out = p.transform(x)?;
    Ok((out, p))
}

/// Uniform subsample without replacement down to `cap` rows. Returns the
/// sorted row indices kept; all rows when `n <= cap`.
pub fn subsample_indices(n: usize, cap: usize, seed: u64) -> Vec<usize> {
    if n <= cap {
        return (0..n).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = sample(&mut rng, n, cap).into_vec();
    idx.sort_unstable();
    idx
}
