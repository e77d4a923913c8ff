//! Exact versus random-projection-forest neighbor search: build time and
//! recall of the approximate graph.
//!
//! ```bash
//! cargo run --release --example neighbor_search
//! ```

use std::time::Instant;

use camel::dataset::gen_gaussian_blobs;
use camel::knn::{build_knn, recall, KnnMode};

fn main() -> camel::Result<()> {
    for n_per_class in [400, 1600] {
        let (x, _) = gen_gaussian_blobs(n_per_class, 5, 50, 10.0, 8);
        let t = Instant::now();
        let exact = build_knn(x.view(), 10, KnnMode::Exact, 0)?;
        let t_exact = t.elapsed();
        let t = Instant::now();
        let approx = build_knn(x.view(), 10, KnnMode::Approx, 0)?;
        let t_approx = t.elapsed();
        println!(
            "n {:>5}  exact {:>8.1?}  approx {:>8.1?}  recall {:.3}",
            x.n_samples(),
            t_exact,
            t_approx,
            recall(&approx, &exact)
        );
    }
    Ok(())
}
