//! Metric learning: fits a model on part of a Swiss roll, then projects the
//! held-out points into the frozen embedding.
//!
//! ```bash
//! cargo run --release --example project_new_points
//! ```

use camel::dataset::gen_swiss_roll;
use camel::learners::{fit_unsupervised, FitConfig};
use camel::metrics::{evaluate, Metric, MetricConfig};
use ndarray::{concatenate, Axis};

fn main() -> camel::Result<()> {
    let (x, _) = gen_swiss_roll(1500, 0.0, 5);
    let train: Vec<usize> = (0..1500).filter(|i| i % 3 != 0).collect();
    let test: Vec<usize> = (0..1500).filter(|i| i % 3 == 0).collect();
    let (x_train, x_test) = (x.select_rows(&train), x.select_rows(&test));

    let model = fit_unsupervised(&x_train, &FitConfig::default())?;
    let before = model.embedding().clone();
    let y_test = model.transform(&x_test)?;
    assert_eq!(model.embedding(), &before, "training points never move");
    println!("projected {} new points", y_test.nrows());

    let x_all = concatenate(Axis(0), &[x_train.view(), x_test.view()]).expect("same width");
    let y_all = concatenate(Axis(0), &[before.view(), y_test.view()]).expect("same width");
    let cfg = MetricConfig {
        metrics: vec![Metric::Trust, Metric::Conti, Metric::Npp],
        ..MetricConfig::default()
    };
    print!(
        "{}",
        evaluate(x_all.view(), y_all.view(), None, &cfg)?.to_table()
    );
    Ok(())
}
