//! `fit`, `transform`, `semifit` and `inverse`.

use std::path::{Path, PathBuf};

use clap::Args;
use ndarray::{concatenate, Array2, Axis};

use super::manifest::RunManifest;
use super::options::{
    default_prefix, load_features, load_labels, with_suffix, FitOptions, InputFormat, InputOptions,
};
use super::{progress_logger, ForceTrace};
use crate::dataset::{load_mask_csv, write_matrix_csv, DataMatrix, LabelVector};
use crate::error::{CamelError, Result};
use crate::learners::{
    fit_semisupervised_with, fit_supervised_blocks, fit_supervised_with, fit_unsupervised_with,
    load_model, save_model, CamelModel, FitConfig, SemiConfig,
};
use crate::optimizer::{InitMode, RunHooks};

/// Label weight used when labels are given without `--label-weight`.
pub const DEFAULT_LABEL_WEIGHT: f64 = 0.5;
const PROGRESS_EVERY: usize = 50;

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: InputOptions,
    /// Label file (one per line, or IDX labels); repeat for several label blocks
    #[arg(long, value_name = "FILE")]
    pub labels: Vec<PathBuf>,
    /// Label weight in [0, 1); requires --labels
    #[arg(long = "label-weight")]
    pub label_weight: Option<f64>,
    /// Treat numeric labels as classes
    #[arg(long)]
    pub categorical: bool,
    /// Label CSV files start with a header line
    #[arg(long = "labels-header")]
    pub labels_header: bool,
    /// Output prefix (default: input path without extension)
    #[arg(long, short = 'o', value_name = "PREFIX")]
    pub output: Option<PathBuf>,
    /// Write dim0..dim{d-1} column names into the embedding CSV
    #[arg(long)]
    pub header: bool,
    #[command(flatten)]
    pub opts: FitOptions,
}

#[derive(Debug, Args)]
pub struct SemifitArgs {
    #[command(flatten)]
    pub input: InputOptions,
    /// Labels; empty, NA or ? entries are missing
    #[arg(long, value_name = "FILE")]
    pub labels: PathBuf,
    /// One 0/1 per sample; 0 hides that sample's label
    #[arg(long, value_name = "FILE")]
    pub mask: Option<PathBuf>,
    /// Label weight in [0, 1)
    #[arg(long = "label-weight", default_value_t = DEFAULT_LABEL_WEIGHT)]
    pub label_weight: f64,
    /// Labeled fraction at which the credibility factor is one half
    #[arg(long = "credibility-center", default_value_t = 0.05)]
    pub credibility_center: f64,
    /// Steepness of the credibility factor
    #[arg(long = "credibility-sharpness", default_value_t = 100.0)]
    pub credibility_sharpness: f64,
    /// Treat numeric labels as classes
    #[arg(long)]
    pub categorical: bool,
    /// Label CSV files start with a header line
    #[arg(long = "labels-header")]
    pub labels_header: bool,
    /// Output prefix (default: input path without extension)
    #[arg(long, short = 'o', value_name = "PREFIX")]
    pub output: Option<PathBuf>,
    /// Write dim0..dim{d-1} column names into the CSV output
    #[arg(long)]
    pub header: bool,
    #[command(flatten)]
    pub opts: FitOptions,
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    /// Model bundle written by fit or semifit
    #[arg(long, short = 'm', value_name = "FILE")]
    pub model: PathBuf,
    #[command(flatten)]
    pub input: InputOptions,
    /// Embedding CSV to write (default: <input>.transform.csv)
    #[arg(long, short = 'o', value_name = "FILE")]
    pub output: Option<PathBuf>,
    /// Prepend the training embedding to the output
    #[arg(long = "include-train")]
    pub include_train: bool,
    /// Write dim0..dim{d-1} column names into the CSV output
    #[arg(long)]
    pub header: bool,
    /// ADAM iterations (default: the model's)
    #[arg(long)]
    pub iters: Option<usize>,
    /// ADAM step size (default: the model's)
    #[arg(long)]
    pub lr: Option<f64>,
    /// random or interpolation (default)
    #[arg(long)]
    pub init: Option<String>,
    /// Seed of the query initialization (default: the model's)
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write per-iteration force magnitudes to this CSV
    #[arg(long = "trace-forces", value_name = "FILE")]
    pub trace_forces: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InverseArgs {
    /// Model bundle written by fit or semifit
    #[arg(long, short = 'm', value_name = "FILE")]
    pub model: PathBuf,
    /// Embedding-space points (CSV, one per row)
    #[arg(long, short = 'i', value_name = "FILE", conflicts_with = "grid")]
    pub input: Option<PathBuf>,
    /// The input CSV starts with a header line
    #[arg(long = "input-header")]
    pub input_header: bool,
    /// Regular GX x GY lattice over the training embedding's bounding box
    #[arg(long, value_name = "GX,GY")]
    pub grid: Option<String>,
    /// Reconstructed features CSV (default: <model>.inverse.csv)
    #[arg(long, short = 'o', value_name = "FILE")]
    pub output: Option<PathBuf>,
    /// Write dim0..dim{d-1} column names into the CSV output
    #[arg(long)]
    pub header: bool,
    /// ADAM iterations (default: the model's)
    #[arg(long)]
    pub iters: Option<usize>,
    /// ADAM step size (default: the model's)
    #[arg(long)]
    pub lr: Option<f64>,
    /// interpolation (default) or random
    #[arg(long)]
    pub init: Option<String>,
    /// Seed of the query initialization (default: the model's)
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write per-iteration force magnitudes to this CSV
    #[arg(long = "trace-forces", value_name = "FILE")]
    pub trace_forces: Option<PathBuf>,
}

/// Runs `f` with progress logging and, when `trace` is set, force tracing
/// written to that file afterwards.
fn with_hooks<T>(
    max_iter: usize,
    dim: usize,
    trace: Option<&PathBuf>,
    f: impl FnOnce(RunHooks<'_>) -> Result<T>,
) -> Result<T> {
    let mut progress = progress_logger(max_iter, PROGRESS_EVERY);
    let mut tracer = ForceTrace::new(dim);
    let out = {
        let mut record = |it: usize, parts: &[Vec<f64>; 3]| tracer.record(it, parts);
        let hooks = RunHooks {
            progress: Some(&mut progress),
            trace: if trace.is_some() {
                Some(&mut record)
            } else {
                None
            },
            resample: None,
        };
        f(hooks)?
    };
    if let Some(path) = trace {
        tracer.write(path)?;
    }
    Ok(out)
}

fn load_label_files(
    paths: &[PathBuf],
    header: bool,
    categorical: bool,
    n: usize,
) -> Result<Vec<LabelVector>> {
    paths
        .iter()
        .map(|p| {
            let l = load_labels(p, header, categorical)?;
            if l.len() != n {
                return Err(CamelError::Dimension(format!(
                    "{} has {} labels for {n} samples",
                    p.display(),
                    l.len()
                )));
            }
            Ok(l)
        })
        .collect()
}

/// Writes the embedding, bundle and manifest of a fitted model.
fn write_fit_outputs(
    model: &CamelModel,
    prefix: &Path,
    header: bool,
    manifest: &mut RunManifest,
) -> Result<()> {
    let emb = with_suffix(prefix, ".embedding.csv");
    let bundle = with_suffix(prefix, ".model");
    let man = with_suffix(prefix, ".manifest.json");
    manifest.time("write", || -> Result<()> {
        write_matrix_csv(&emb, model.embedding().view(), header)?;
        save_model(model, &bundle)
    })?;
    manifest.outputs.extend([emb.clone(), bundle, man.clone()]);
    manifest.write(&man)?;
    log::info!("wrote {}", emb.display());
    Ok(())
}

pub fn fit(a: &FitArgs) -> Result<()> {
    if a.label_weight.is_some() && a.labels.is_empty() {
        return Err(CamelError::InvalidParameter(
            "--label-weight needs --labels".into(),
        ));
    }
    let cfg = a.opts.resolve()?;
    let mut manifest = RunManifest::new("fit");
    manifest.set_fit_config(&cfg);
    let x = manifest.time("load", || a.input.load())?;
    manifest.add_input(
        "features",
        &a.input.input,
        Some((x.n_samples(), x.n_features())),
    )?;
    let labels = load_label_files(&a.labels, a.labels_header, a.categorical, x.n_samples())?;
    for p in &a.labels {
        manifest.add_input("labels", p, None)?;
    }
    let w = a.label_weight.unwrap_or(DEFAULT_LABEL_WEIGHT);
    let model = manifest.time("fit", || match labels.len() {
        0 => with_hooks(
            cfg.optim.max_iter,
            cfg.dim,
            a.opts.trace_forces.as_ref(),
            |h| fit_unsupervised_with(&x, &cfg, h),
        ),
        1 => with_hooks(
            cfg.optim.max_iter,
            cfg.dim,
            a.opts.trace_forces.as_ref(),
            |h| fit_supervised_with(&x, &labels[0], w, &cfg, h),
        ),
        _ => {
            if a.opts.trace_forces.is_some() {
                log::warn!("--trace-forces is not recorded for multi-block label fits");
            }
            fit_supervised_blocks(&x, &labels, w, &cfg)
        }
    })?;
    if !labels.is_empty() {
        manifest.note("label_weight", w);
        manifest.note("label_info", model.label_info());
    }
    let prefix = a
        .output
        .clone()
        .unwrap_or_else(|| default_prefix(&a.input.input));
    write_fit_outputs(&model, &prefix, a.header, &mut manifest)
}

pub fn semifit(a: &SemifitArgs) -> Result<()> {
    let cfg = a.opts.resolve()?;
    let mut manifest = RunManifest::new("semifit");
    manifest.set_fit_config(&cfg);
    let x = manifest.time("load", || a.input.load())?;
    manifest.add_input(
        "features",
        &a.input.input,
        Some((x.n_samples(), x.n_features())),
    )?;
    let mut labels = load_label_files(
        std::slice::from_ref(&a.labels),
        a.labels_header,
        a.categorical,
        x.n_samples(),
    )?
    .remove(0);
    manifest.add_input("labels", &a.labels, None)?;
    if let Some(mask_path) = &a.mask {
        let mask = load_mask_csv(mask_path)?;
        labels = labels.with_mask(&mask)?;
        manifest.add_input("mask", mask_path, None)?;
    }
    let semi = SemiConfig {
        w_label: a.label_weight,
        credibility_center: a.credibility_center,
        credibility_sharpness: a.credibility_sharpness,
    };
    let model = manifest.time("fit", || {
        with_hooks(
            cfg.optim.max_iter,
            cfg.dim,
            a.opts.trace_forces.as_ref(),
            |h| fit_semisupervised_with(&x, &labels, &semi, &cfg, h),
        )
    })?;
    manifest.note(
        "labeled_fraction",
        labels.n_present() as f64 / labels.len() as f64,
    );
    manifest.note("semi", semi);
    manifest.note("label_info", model.label_info());
    let prefix = a
        .output
        .clone()
        .unwrap_or_else(|| default_prefix(&a.input.input));
    write_fit_outputs(&model, &prefix, a.header, &mut manifest)
}

/// The model's optimizer settings with per-command overrides; query
/// points default to interpolation init.
fn query_config(
    model: &CamelModel,
    iters: Option<usize>,
    lr: Option<f64>,
    init: Option<&str>,
    seed: Option<u64>,
) -> Result<FitConfig> {
    let mut cfg = *model.config();
    cfg.optim.init = match init {
        Some(s) => s.parse()?,
        None => InitMode::Interpolation,
    };
    if cfg.optim.init == InitMode::Pca {
        return Err(CamelError::InvalidParameter(
            "new points use interpolation or random init".into(),
        ));
    }
    if let Some(it) = iters {
        cfg.optim.max_iter = it;
    }
    if let Some(lr) = lr {
        cfg.optim.lr = lr;
    }
    if let Some(s) = seed {
        cfg.optim.seed = s;
    }
    cfg.optim.validate()?;
    Ok(cfg)
}

fn manifest_path(output: &Path) -> PathBuf {
    output.with_extension("manifest.json")
}

pub fn transform(a: &TransformArgs) -> Result<()> {
    let mut manifest = RunManifest::new("transform");
    let model = manifest.time("load model", || load_model(&a.model))?;
    manifest.add_input("model", &a.model, None)?;
    let cfg = query_config(&model, a.iters, a.lr, a.init.as_deref(), a.seed)?;
    manifest.set_fit_config(&cfg);
    let x = manifest.time("load", || a.input.load())?;
    manifest.add_input(
        "features",
        &a.input.input,
        Some((x.n_samples(), x.n_features())),
    )?;
    let yq = manifest.time("transform", || {
        with_hooks(
            cfg.optim.max_iter,
            model.dim(),
            a.trace_forces.as_ref(),
            |h| model.transform_with(&x, &cfg.optim, h),
        )
    })?;
    let out_y = if a.include_train {
        concatenate(Axis(0), &[model.embedding().view(), yq.view()])
            .map_err(|e| CamelError::Dimension(e.to_string()))?
    } else {
        yq
    };
    let output = a
        .output
        .clone()
        .unwrap_or_else(|| with_suffix(&default_prefix(&a.input.input), ".transform.csv"));
    manifest.time("write", || {
        write_matrix_csv(&output, out_y.view(), a.header)
    })?;
    manifest.note("include_train", a.include_train);
    let man = manifest_path(&output);
    manifest.outputs.extend([output.clone(), man.clone()]);
    manifest.write(&man)?;
    log::info!("wrote {}", output.display());
    Ok(())
}

/// `gx * gy` points on a regular lattice spanning the bounding box of a
/// 2-D embedding, x varying fastest.
pub fn embedding_grid(y: &Array2<f64>, gx: usize, gy: usize) -> Result<Array2<f64>> {
    if y.ncols() != 2 {
        return Err(CamelError::InvalidParameter(format!(
            "--grid needs a 2-D embedding, the model has {} dimensions",
            y.ncols()
        )));
    }
    if gx == 0 || gy == 0 {
        return Err(CamelError::InvalidParameter(
            "grid sides must be >= 1".into(),
        ));
    }
    let lo_hi = |c: usize| {
        y.column(c)
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    };
    let (x0, x1) = lo_hi(0);
    let (y0, y1) = lo_hi(1);
    let at = |lo: f64, hi: f64, i: usize, g: usize| {
        if g == 1 {
            0.5 * (lo + hi)
        } else {
            lo + (hi - lo) * i as f64 / (g - 1) as f64
        }
    };
    Ok(Array2::from_shape_fn((gx * gy, 2), |(r, c)| {
        if c == 0 {
            at(x0, x1, r % gx, gx)
        } else {
            at(y0, y1, r / gx, gy)
        }
    }))
}

fn parse_grid(spec: &str) -> Result<(usize, usize)> {
    let bad = || CamelError::InvalidParameter(format!("--grid expects GX,GY, got {spec:?}"));
    let (a, b) = spec.split_once(',').ok_or_else(bad)?;
    Ok((
        a.trim().parse().map_err(|_| bad())?,
        b.trim().parse().map_err(|_| bad())?,
    ))
}

pub fn inverse(a: &InverseArgs) -> Result<()> {
    let mut manifest = RunManifest::new("inverse");
    let model = manifest.time("load model", || load_model(&a.model))?;
    manifest.add_input("model", &a.model, None)?;
    let cfg = query_config(&model, a.iters, a.lr, a.init.as_deref(), a.seed)?;
    manifest.set_fit_config(&cfg);
    let output = a
        .output
        .clone()
        .unwrap_or_else(|| with_suffix(&default_prefix(&a.model), ".inverse.csv"));
    let queries: Array2<f64> = match (&a.input, &a.grid) {
        (Some(path), None) => {
            let q: DataMatrix = load_features(path, Some(InputFormat::Csv), a.input_header)?;
            manifest.add_input(
                "embedding points",
                path,
                Some((q.n_samples(), q.n_features())),
            )?;
            q.into_inner()
        }
        (None, Some(spec)) => {
            let (gx, gy) = parse_grid(spec)?;
            let g = embedding_grid(model.embedding(), gx, gy)?;
            let grid_path = with_suffix(&default_prefix(&output), ".grid.csv");
            write_matrix_csv(&grid_path, g.view(), a.header)?;
            manifest.note("grid", [gx, gy]);
            manifest.outputs.push(grid_path);
            g
        }
        _ => {
            return Err(CamelError::InvalidParameter(
                "inverse needs --input or --grid".into(),
            ))
        }
    };
    let x = manifest.time("inverse", || {
        with_hooks(
            cfg.optim.max_iter,
            model.n_features(),
            a.trace_forces.as_ref(),
            |h| model.inverse_transform_with(queries.view(), &cfg.optim, h),
        )
    })?;
    manifest.time("write", || write_matrix_csv(&output, x.view(), a.header))?;
    let man = manifest_path(&output);
    manifest.outputs.extend([output.clone(), man.clone()]);
    manifest.write(&man)?;
    log::info!(
        "wrote {} reconstructions to {}",
        x.nrows(),
        output.display()
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn grid_spans_the_bounding_box() {
        let y = array![[0.0, -1.0], [4.0, 1.0], [2.0, 0.0]];
        let g = embedding_grid(&y, 3, 2).unwrap();
        assert_eq!(
            g,
            array![
                [0.0, -1.0],
                [2.0, -1.0],
                [4.0, -1.0],
                [0.0, 1.0],
                [2.0, 1.0],
                [4.0, 1.0]
            ]
        );
        assert!(embedding_grid(&array![[0.0], [1.0]], 2, 2).is_err());
        assert_eq!(parse_grid("10, 10").unwrap(), (10, 10));
        assert!(parse_grid("10x10").is_err());
    }
}
