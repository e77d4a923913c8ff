//! Runs the full metric suite on a labeled embedding and prints the table
//! and the JSON report.
//!
//! ```bash
//! cargo run --release --example metric_report
//! ```

use camel::dataset::gen_gaussian_blobs;
use camel::learners::{fit_unsupervised, FitConfig};
use camel::metrics::{evaluate, MetricConfig};

fn main() -> camel::Result<()> {
    let (x, labels) = gen_gaussian_blobs(120, 5, 10, 20.0, 4);
    let model = fit_unsupervised(&x, &FitConfig::default())?;
    let report = evaluate(
        x.view(),
        model.embedding().view(),
        Some(&labels),
        &MetricConfig::default(),
    )?;
    print!("{}", report.to_table());
    println!(
        "clusters: {:?} in the data, {:?} in the embedding",
        report.artifacts.clusters_hd, report.artifacts.clusters_ld
    );
    println!("{}", report.to_json());
    Ok(())
}
