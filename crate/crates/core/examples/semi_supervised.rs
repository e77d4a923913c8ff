//! Semi-supervised embedding: hides most labels, imputes them from labeled
//! neighbors and scales the label weight by the credibility of the labeled
//! fraction.
//!
//! ```bash
//! cargo run --release --example semi_supervised
//! ```

use camel::dataset::gen_gaussian_blobs;
use camel::learners::{fit_semisupervised, impute_labels, FitConfig, SemiConfig};

fn main() -> camel::Result<()> {
    let (x, labels) = gen_gaussian_blobs(200, 3, 10, 5.0, 11);
    let n = labels.len();
    let cfg = FitConfig::default();
    let semi = SemiConfig::default();

    for ratio in [0.01f64, 0.05, 0.2] {
        let every = (1.0 / ratio).round() as usize;
        let mask: Vec<bool> = (0..n).map(|i| i % every == 0).collect();
        let partial = labels.clone().with_mask(&mask)?;
        let filled = impute_labels(&x, &partial, cfg.k, cfg.knn_mode, 0)?;
        let agree = (0..n)
            .filter(|&i| filled.class_of(i) == labels.class_of(i))
            .count();
        let model = fit_semisupervised(&x, &partial, &semi, &cfg)?;
        let info = model.label_info().expect("label info");
        println!(
            "labeled {:>5.1}%  credibility {:.3}  effective w {:.3}  imputation accuracy {:.3}",
            100.0 * partial.n_present() as f64 / n as f64,
            info.credibility.unwrap_or(f64::NAN),
            info.w_label,
            agree as f64 / n as f64
        );
    }
    Ok(())
}
