//! Splits the force field into its attractive, curvature and repulsive
//! parts at the initial layout and at the fitted layout.
//!
//! ```bash
//! cargo run --release --example force_decomposition
//! ```

use camel::dataset::{gen_swiss_roll, preprocess};
use camel::force_field::{gradient, ForceParams, ForceSystem};
use camel::knn::{build_knn, sample_distant, KnnMode};
use camel::learners::{fit_unsupervised, FitConfig};
use camel::optimizer::{init_embedding, InitMode};
use ndarray::Array2;

fn mean_row_norm(a: &Array2<f64>) -> f64 {
    a.rows().into_iter().map(|r| r.dot(&r).sqrt()).sum::<f64>() / a.nrows() as f64
}

fn main() -> camel::Result<()> {
    let (x, _) = gen_swiss_roll(800, 0.0, 9);
    let cfg = FitConfig::default();
    let (xp, _) = preprocess(&x)?;
    let graph = build_knn(xp.view(), cfg.k, KnnMode::Exact, 0)?;
    let sampling = sample_distant(&graph, cfg.m, 1)?;

    for (label, params) in [
        ("default", ForceParams::default()),
        (
            "no curvature",
            ForceParams {
                w_cr: 0.0,
                ..ForceParams::default()
            },
        ),
    ] {
        let system = ForceSystem::new(xp.view(), &graph, &sampling, params, None)?;
        let start = init_embedding(xp.view(), 2, InitMode::Pca, 2)?;
        let fitted = fit_unsupervised(
            &x,
            &FitConfig {
                force: params,
                ..cfg
            },
        )?;
        println!("{label}: mean per-point force magnitude");
        for (stage, y) in [("initial", &start), ("fitted", fitted.embedding())] {
            let f = gradient(y.view(), &system, true)?;
            let part = |p: &Option<Array2<f64>>| p.as_ref().map_or(f64::NAN, mean_row_norm);
            println!(
                "  {stage:<8} attractive {:.3e}  curvature {:.3e}  repulsive {:.3e}  total {:.3e}",
                part(&f.attractive),
                part(&f.curvature),
                part(&f.repulsive),
                mean_row_norm(&f.grads)
            );
        }
    }
    Ok(())
}
