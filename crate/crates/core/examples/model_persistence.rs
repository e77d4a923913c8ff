//! Saves a fitted model, loads it back and checks that projections of new
//! points agree between the two copies.
//!
//! ```bash
//! cargo run --release --example model_persistence
//! ```

use camel::dataset::gen_swiss_roll;
use camel::learners::{fit_unsupervised, load_model, save_model, FitConfig};

fn main() -> camel::Result<()> {
    let (x, _) = gen_swiss_roll(600, 0.0, 1);
    let (x_new, _) = gen_swiss_roll(50, 0.0, 2);
    let model = fit_unsupervised(&x, &FitConfig::default())?;

    let path = std::env::temp_dir().join("camel-example.model");
    save_model(&model, &path)?;
    let bytes = std::fs::metadata(&path).map(|m| m.len()).unwrap_or(0);
    let loaded = load_model(&path)?;

    println!("bundle {} ({bytes} bytes)", path.display());
    println!(
        "embedding identical after reload: {}",
        loaded.embedding() == model.embedding()
    );
    println!(
        "configuration identical: {}",
        loaded.config() == model.config()
    );
    let a = model.transform(&x_new)?;
    let b = loaded.transform(&x_new)?;
    println!("projection of 50 new points identical: {}", a == b);
    std::fs::remove_file(&path).ok();
    Ok(())
}
