//! Varies the number of distant samples per point with and without the
//! weight modification and measures how far each layout moves from the
//! default one (Procrustes disparity) along with its trustworthiness.
//!
//! ```bash
//! cargo run --release --example negative_sampling
//! ```

use camel::dataset::gen_swiss_roll;
use camel::learners::{fit_unsupervised, FitConfig};
use camel::linalg::procrustes_disparity;
use camel::metrics::{evaluate, Metric, MetricConfig};

fn main() -> camel::Result<()> {
    let (x, _) = gen_swiss_roll(1000, 0.0, 6);
    let base = fit_unsupervised(&x, &FitConfig::default())?;
    let metrics = MetricConfig {
        metrics: vec![Metric::Trust],
        ..MetricConfig::default()
    };
    for weight_mod in [true, false] {
        for m in [5, 15, 30, 60] {
            let mut cfg = FitConfig {
                m,
                ..FitConfig::default()
            };
            cfg.force.weight_mod = weight_mod;
            let model = fit_unsupervised(&x, &cfg)?;
            let report = evaluate(x.view(), model.embedding().view(), None, &metrics)?;
            println!(
                "weight mod {:<5}  m {m:>2}  disparity to default {:.4}  trust {:.3}",
                weight_mod,
                procrustes_disparity(base.embedding().view(), model.embedding().view()),
                report.get(Metric::Trust).unwrap_or(f64::NAN)
            );
        }
    }
    Ok(())
}
