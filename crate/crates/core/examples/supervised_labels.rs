//! Supervised embedding of overlapping Gaussian blobs: the label weight
//! pulls classes apart, and a zero weight reproduces the unsupervised layout.
//!
//! ```bash
//! cargo run --release --example supervised_labels
//! ```

use camel::dataset::gen_gaussian_blobs;
use camel::learners::{fit_supervised, fit_unsupervised, FitConfig};
use camel::metrics::{evaluate, Metric, MetricConfig};

fn main() -> camel::Result<()> {
    let (x, labels) = gen_gaussian_blobs(150, 4, 20, 0.5, 3);
    let cfg = FitConfig::default();
    let metrics = MetricConfig {
        metrics: vec![Metric::KnnClassify, Metric::CenDist, Metric::Trust],
        ..MetricConfig::default()
    };

    let plain = fit_unsupervised(&x, &cfg)?;
    for w in [0.0, 0.5, 0.9] {
        let model = fit_supervised(&x, &labels, w, &cfg)?;
        let report = evaluate(x.view(), model.embedding().view(), Some(&labels), &metrics)?;
        let info = model.label_info().expect("supervised model");
        println!(
            "w_label {w:.1}  scale {:>7.3}  same as unsupervised: {:<5}  knn_classify {:.3}  trust {:.3}",
            info.scale,
            model.embedding() == plain.embedding(),
            report.get(Metric::KnnClassify).unwrap_or(f64::NAN),
            report.get(Metric::Trust).unwrap_or(f64::NAN),
        );
    }
    Ok(())
}
