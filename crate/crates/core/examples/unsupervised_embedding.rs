//! Embeds a Swiss roll in two dimensions and prints the neighborhood scores.
//!
//! ```bash
//! cargo run --release --example unsupervised_embedding -- 1500
//! ```

use camel::dataset::gen_swiss_roll;
use camel::learners::{fit_unsupervised, FitConfig};
use camel::metrics::{evaluate, Metric, MetricConfig};

fn main() -> camel::Result<()> {
    let n: usize = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(1000);
    let (x, _) = gen_swiss_roll(n, 0.0, 0);

    let cfg = FitConfig::default();
    let model = fit_unsupervised(&x, &cfg)?;
    let y = model.embedding();
    println!(
        "embedded {} points from {}-D into {}-D",
        y.nrows(),
        x.n_features(),
        y.ncols()
    );

    let metrics = MetricConfig {
        metrics: vec![
            Metric::Trust,
            Metric::Conti,
            Metric::Npp,
            Metric::Nnwr,
            Metric::CurvSimi,
        ],
        ..MetricConfig::default()
    };
    let report = evaluate(x.view(), y.view(), None, &metrics)?;
    print!("{}", report.to_table());
    if let (Some(hd), Some(ld)) = (report.artifacts.curvature_hd, report.artifacts.curvature_ld) {
        println!("mean edge curvature: {hd:.3} in the data, {ld:.3} in the embedding");
    }
    Ok(())
}
