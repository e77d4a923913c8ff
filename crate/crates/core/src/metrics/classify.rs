//! Cross-validated classifiers scored on embedding coordinates: a kNN vote
//! and a linear one-vs-rest hinge-loss classifier.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{CamelError, Result};
use crate::linalg::{sq_dist, Rows};

/// Regularization strength of the linear classifier.
pub const SVM_LAMBDA: f64 = 1e-2;
/// Full-batch subgradient epochs of the linear classifier.
pub const SVM_EPOCHS: usize = 300;

/// Fold index of every sample after a seeded shuffle.
fn fold_assignment(n: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fold = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        fold[i] = pos % folds;
    }
    fold
}

fn validate(y: &ArrayView2<'_, f64>, classes: &[usize], folds: usize) -> Result<usize> {
    if y.nrows() != classes.len() {
        return Err(CamelError::Dimension(format!(
            "{} labels for {} points",
            classes.len(),
            y.nrows()
        )));
    }
    if folds < 2 {
        return Err(CamelError::InvalidParameter(
            "cross-validation needs at least 2 folds".into(),
        ));
    }
    Ok(folds.min(y.nrows()))
}

fn n_distinct(classes: &[usize]) -> usize {
    let mut c = classes.to_vec();
    c.sort_unstable();
    c.dedup();
    c.len()
}

/// Cross-validated accuracy of a `k`-nearest-neighbor majority vote. Vote
/// ties go to the tied class holding the nearest neighbor.
pub fn knn_classify(
    y: ArrayView2<'_, f64>,
    classes: &[usize],
    k: usize,
    folds: usize,
    seed: u64,
) -> Result<f64> {
    let folds = validate(&y, classes, folds)?;
    let n = y.nrows();
    if n_distinct(classes) <= 1 {
        return Ok(1.0);
    }
    let n_classes = classes.iter().max().map_or(0, |m| m + 1);
    let fold = fold_assignment(n, folds, seed);
    let ys = y.as_standard_layout();
    let rows = Rows::from_view(ys.view());
    let correct: usize = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut cands: Vec<(f64, usize)> = (0..n)
                .filter(|&j| fold[j] != fold[i])
                .map(|j| (sq_dist(rows.get(i), rows.get(j)), j))
                .collect();
            let kk = k.min(cands.len());
            if kk == 0 {
                return 0;
            }
            cands.select_nth_unstable_by(kk - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            cands.truncate(kk);
            cands.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            let mut votes = vec![0usize; n_classes];
            for &(_, j) in &cands {
                votes[classes[j]] += 1;
            }
            let best = *votes.iter().max().expect("classes");
            let pred = cands
                .iter()
                .map(|&(_, j)| classes[j])
                .find(|&c| votes[c] == best)
                .expect("voter");
            usize::from(pred == classes[i])
        })
        .sum();
    Ok(correct as f64 / n as f64)
}

/// Linear one-vs-rest classifier trained by full-batch subgradient descent
/// on the regularized hinge loss, with iterate averaging over the second
/// half of the run. Features are standardized on the training fold and a
/// constant feature carries the bias.
struct LinearOvr {
    mean: Array1<f64>,
    std: Array1<f64>,
    weights: Array2<f64>,
}

impl LinearOvr {
    fn features(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        let z = (&x - &self.mean) / &self.std;
        let ones = Array2::ones((x.nrows(), 1));
        ndarray::concatenate(Axis(1), &[z.view(), ones.view()]).expect("same rows")
    }

    fn fit(x: ArrayView2<'_, f64>, classes: &[usize], n_classes: usize) -> Self {
        let mean = x.mean_axis(Axis(0)).expect("non-empty");
        let std = x
            .std_axis(Axis(0), 0.0)
            .mapv(|s| if s > 0.0 { s } else { 1.0 });
        let mut model = Self {
            mean,
            std,
            weights: Array2::zeros((n_classes, x.ncols() + 1)),
        };
        let f = model.features(x);
        let n = f.nrows() as f64;
        for c in 0..n_classes {
            let target: Array1<f64> = classes
                .iter()
                .map(|&l| if l == c { 1.0 } else { -1.0 })
                .collect();
            let mut w = Array1::<f64>::zeros(f.ncols());
            let mut avg = Array1::<f64>::zeros(f.ncols());
            let mut n_avg = 0.0;
            for t in 1..=SVM_EPOCHS {
                let eta = 1.0 / (SVM_LAMBDA * (t as f64 + 10.0));
                let margins = f.dot(&w) * &target;
                let mut g = &w * SVM_LAMBDA;
                for (i, &m) in margins.iter().enumerate() {
                    if m < 1.0 {
                        g.scaled_add(-target[i] / n, &f.row(i));
                    }
                }
                w.scaled_add(-eta, &g);
                if t > SVM_EPOCHS / 2 {
                    avg += &w;
                    n_avg += 1.0;
                }
            }
            model.weights.row_mut(c).assign(&(avg / n_avg));
        }
        model
    }

    fn predict(&self, x: ArrayView2<'_, f64>) -> Vec<usize> {
        let scores = self.features(x).dot(&self.weights.t());
        scores
            .rows()
            .into_iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |best, (c, &s)| {
                        if s > best.1 {
                            (c, s)
                        } else {
                            best
                        }
                    })
                    .0
            })
            .collect()
    }
}

/// Cross-validated accuracy of the linear one-vs-rest classifier.
pub fn svm_classify(
    y: ArrayView2<'_, f64>,
    classes: &[usize],
    folds: usize,
    seed: u64,
) -> Result<f64> {
    let folds = validate(&y, classes, folds)?;
    let n = y.nrows();
    if n_distinct(classes) <= 1 {
        return Ok(1.0);
    }
    let n_classes = classes.iter().max().map_or(0, |m| m + 1);
    let fold = fold_assignment(n, folds, seed);
    let correct: usize = (0..folds)
        .into_par_iter()
        .map(|f| {
            let train: Vec<usize> = (0..n).filter(|&i| fold[i] != f).collect();
            let test: Vec<usize> = (0..n).filter(|&i| fold[i] == f).collect();
            let labels: Vec<usize> = train.iter().map(|&i| classes[i]).collect();
            let model = LinearOvr::fit(y.select(Axis(0), &train).view(), &labels, n_classes);
            let pred = model.predict(y.select(Axis(0), &test).view());
            test.iter()
                .zip(pred)
                .filter(|(&i, p)| classes[i] == *p)
                .count()
        })
        .sum();
    Ok(correct as f64 / n as f64)
}
