//! Inverse learning: maps embedding locations back to feature space, first
//! at training locations (where the answer is known) and then on a grid.
//!
//! ```bash
//! cargo run --release --example inverse_reconstruction
//! ```

use camel::dataset::gen_gaussian_blobs;
use camel::learners::{fit_unsupervised, FitConfig};
use camel::optimizer::InitMode;
use ndarray::Axis;

fn main() -> camel::Result<()> {
    let (x, _) = gen_gaussian_blobs(100, 3, 8, 8.0, 2);
    let model = fit_unsupervised(&x, &FitConfig::default())?;

    let picks = [0usize, 120, 250];
    let at = model.embedding().select(Axis(0), &picks);
    for init in [InitMode::Interpolation, InitMode::Random] {
        let mut optim = model.config().optim;
        optim.init = init;
        let back = model.inverse_transform(at.view(), &optim)?;
        let truth = x.select_rows(&picks);
        let err = (&back - truth.values())
            .mapv(f64::abs)
            .mean()
            .unwrap_or(f64::NAN);
        println!("{init:<13} init: mean absolute reconstruction error {err:.4}");
    }

    let (lo, hi) = model
        .embedding()
        .column(0)
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
            (a.min(v), b.max(v))
        });
    let line = ndarray::Array2::from_shape_fn((5, 2), |(r, c)| {
        if c == 0 {
            lo + (hi - lo) * r as f64 / 4.0
        } else {
            0.0
        }
    });
    let recon = model.inverse_transform(line.view(), &model.config().optim)?;
    for (p, r) in line.rows().into_iter().zip(recon.rows()) {
        println!(
            "y = ({:>7.2}, {:>5.2}) -> first features {:?}",
            p[0],
            p[1],
            &r.to_vec()[..3]
        );
    }
    Ok(())
}
