//! Shared flags, the `key = value` configuration file and input loading.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Args;

use crate::dataset::{
    load_idx_images, load_idx_labels, load_labels_csv, load_matrix, DataMatrix, LabelVector,
    MatrixFormat,
};
use crate::error::{CamelError, Result};
use crate::knn::{KnnMode, DEFAULT_EXACT_CUTOVER};
use crate::learners::FitConfig;
use crate::optimizer::InitMode;

/// Keys accepted by [`apply_setting`], the configuration file and `--sweep`.
pub const SETTING_KEYS: [&str; 20] = [
    "dim",
    "neighbors",
    "negatives",
    "knn",
    "w-nn",
    "w-cr",
    "w-dp",
    "sigma-nn",
    "sigma-dp",
    "alpha",
    "weight-mod",
    "iters",
    "lr",
    "beta1",
    "beta2",
    "eps",
    "init",
    "seed",
    "resample-every",
    "curvature-every",
];

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| CamelError::InvalidParameter(format!("bad value {value:?} for {key}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        _ => Err(CamelError::InvalidParameter(format!(
            "bad value {value:?} for {key}"
        ))),
    }
}

pub fn parse_knn_mode(value: &str) -> Result<KnnMode> {
    match value.trim() {
        "exact" => Ok(KnnMode::Exact),
        "approx" => Ok(KnnMode::Approx),
        "auto" => Ok(KnnMode::Auto {
            cutover: DEFAULT_EXACT_CUTOVER,
        }),
        other => Err(CamelError::InvalidParameter(format!(
            "unknown knn mode {other:?} (exact, approx or auto)"
        ))),
    }
}

/// Sets one named parameter. Underscores in `key` are read as dashes.
pub fn apply_setting(cfg: &mut FitConfig, key: &str, value: &str) -> Result<()> {
    let key = key.trim().replace('_', "-");
    let v = value.trim();
    match key.as_str() {
        "dim" => cfg.dim = parse(&key, v)?,
        "neighbors" => cfg.k = parse(&key, v)?,
        "negatives" => cfg.m = parse(&key, v)?,
        "knn" => cfg.knn_mode = parse_knn_mode(v)?,
        "w-nn" => cfg.force.w_nn = parse(&key, v)?,
        "w-cr" => cfg.force.w_cr = parse(&key, v)?,
        "w-dp" => cfg.force.w_dp = parse(&key, v)?,
        "sigma-nn" => cfg.force.sigma_nn = parse(&key, v)?,
        "sigma-dp" => cfg.force.sigma_dp = parse(&key, v)?,
        "alpha" => cfg.force.alpha = parse(&key, v)?,
        "weight-mod" => cfg.force.weight_mod = parse_bool(&key, v)?,
        "iters" => cfg.optim.max_iter = parse(&key, v)?,
        "lr" => cfg.optim.lr = parse(&key, v)?,
        "beta1" => cfg.optim.beta1 = parse(&key, v)?,
        "beta2" => cfg.optim.beta2 = parse(&key, v)?,
        "eps" => cfg.optim.eps = parse(&key, v)?,
        "init" => cfg.optim.init = v.parse::<InitMode>()?,
        "seed" => cfg.optim.seed = parse(&key, v)?,
        "resample-every" => {
            cfg.optim.resample_every = match v {
                "never" | "0" => None,
                _ => Some(parse(&key, v)?),
            }
        }
        "curvature-every" => cfg.optim.curvature_every = parse(&key, v)?,
        _ => {
            return Err(CamelError::InvalidParameter(format!(
                "unknown setting {key:?}; known: {}",
                SETTING_KEYS.join(", ")
            )))
        }
    }
    Ok(())
}

/// Reads a `key = value` file; blank lines and `#` comments are ignored.
pub fn read_config_file(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path).map_err(|e| CamelError::io(path, e))?;
    let mut out = Vec::new();
    for (row, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| CamelError::Parse {
            row,
            msg: format!("expected key = value, got {line:?}"),
        })?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Model and optimizer flags. Unset flags fall back to the configuration
/// file, then to the library defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct FitOptions {
    /// `key = value` file of default settings (flags take precedence)
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Embedding dimension
    #[arg(long)]
    pub dim: Option<usize>,
    /// Neighbors per point (k)
    #[arg(long)]
    pub neighbors: Option<usize>,
    /// Distant samples per point (m)
    #[arg(long)]
    pub negatives: Option<usize>,
    /// Neighbor search: exact, approx or auto
    #[arg(long)]
    pub knn: Option<String>,
    /// Base weight of the neighbor attraction
    #[arg(long = "w-nn")]
    pub w_nn: Option<f64>,
    /// Base weight of the curvature term
    #[arg(long = "w-cr")]
    pub w_cr: Option<f64>,
    /// Base weight of the distant-point repulsion
    #[arg(long = "w-dp")]
    pub w_dp: Option<f64>,
    /// Kernel scale for neighbors
    #[arg(long = "sigma-nn")]
    pub sigma_nn: Option<f64>,
    /// Kernel scale for distant points
    #[arg(long = "sigma-dp")]
    pub sigma_dp: Option<f64>,
    /// Kernel tail index
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Disable the distance-aware weight modification and k/m scaling
    #[arg(long = "no-weight-mod")]
    pub no_weight_mod: bool,
    /// ADAM iterations
    #[arg(long)]
    pub iters: Option<usize>,
    /// ADAM step size
    #[arg(long)]
    pub lr: Option<f64>,
    /// pca, random or interpolation
    #[arg(long)]
    pub init: Option<String>,
    /// Base seed of every random stream
    #[arg(long)]
    pub seed: Option<u64>,
    /// Redraw distant samples every N iterations
    #[arg(long = "resample-every", value_name = "N")]
    pub resample_every: Option<usize>,
    /// Recompute embedding curvature every N iterations
    #[arg(long = "curvature-every", value_name = "N")]
    pub curvature_every: Option<usize>,
    /// Write per-iteration force magnitudes to this CSV
    #[arg(long = "trace-forces", value_name = "FILE")]
    pub trace_forces: Option<PathBuf>,
}

impl FitOptions {
    fn flag_settings(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        let mut put = |k: &'static str, v: Option<String>| {
            if let Some(v) = v {
                out.push((k, v));
            }
        };
        put("dim", self.dim.map(|v| v.to_string()));
        put("neighbors", self.neighbors.map(|v| v.to_string()));
        put("negatives", self.negatives.map(|v| v.to_string()));
        put("knn", self.knn.clone());
        put("w-nn", self.w_nn.map(|v| v.to_string()));
        put("w-cr", self.w_cr.map(|v| v.to_string()));
        put("w-dp", self.w_dp.map(|v| v.to_string()));
        put("sigma-nn", self.sigma_nn.map(|v| v.to_string()));
        put("sigma-dp", self.sigma_dp.map(|v| v.to_string()));
        put("alpha", self.alpha.map(|v| v.to_string()));
        put(
            "weight-mod",
            self.no_weight_mod.then(|| "false".to_string()),
        );
        put("iters", self.iters.map(|v| v.to_string()));
        put("lr", self.lr.map(|v| v.to_string()));
        put("init", self.init.clone());
        put("seed", self.seed.map(|v| v.to_string()));
        put("resample-every", self.resample_every.map(|v| v.to_string()));
        put(
            "curvature-every",
            self.curvature_every.map(|v| v.to_string()),
        );
        out
    }

    /// Library defaults, then the configuration file, then explicit flags.
    pub fn resolve(&self) -> Result<FitConfig> {
        let mut cfg = FitConfig::default();
        if let Some(path) = &self.config {
            for (k, v) in read_config_file(path)? {
                apply_setting(&mut cfg, &k, &v)?;
            }
        }
        for (k, v) in self.flag_settings() {
            apply_setting(&mut cfg, k, &v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// How to read a feature matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum InputFormat {
    Csv,
    Bin,
    Idx,
}

/// Format implied by a file name: IDX for `*idx3*` names, binary for
/// `.bin` / `.f32`, CSV otherwise.
pub fn infer_format(path: &Path) -> InputFormat {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().to_ascii_lowercase())
        .unwrap_or_default();
    if name.contains("idx3") || name.ends_with(".idx") {
        InputFormat::Idx
    } else if name.ends_with(".bin") || name.ends_with(".f32") {
        InputFormat::Bin
    } else {
        InputFormat::Csv
    }
}

pub fn load_features(path: &Path, format: Option<InputFormat>, header: bool) -> Result<DataMatrix> {
    match format.unwrap_or_else(|| infer_format(path)) {
        InputFormat::Csv => load_matrix(path, MatrixFormat::Csv { header }),
        InputFormat::Bin => load_matrix(path, MatrixFormat::BinaryF32),
        InputFormat::Idx => load_idx_images(path),
    }
}

/// Labels from a one-column CSV, or from an IDX label file when the name
/// contains `idx1`.
pub fn load_labels(path: &Path, header: bool, categorical: bool) -> Result<LabelVector> {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().to_ascii_lowercase())
        .unwrap_or_default();
    if name.contains("idx1") {
        load_idx_labels(path)
    } else {
        load_labels_csv(path, header, categorical)
    }
}

/// Input matrix flags shared by the data-consuming commands.
#[derive(Debug, Clone, Args)]
pub struct InputOptions {
    /// Feature matrix (CSV, binary f32 or IDX images)
    #[arg(long, short = 'i', value_name = "FILE")]
    pub input: PathBuf,
    /// Override the format inferred from the file name
    #[arg(long, value_enum)]
    pub format: Option<InputFormat>,
    /// The input CSV starts with a header line
    #[arg(long = "input-header")]
    pub input_header: bool,
}

impl InputOptions {
    pub fn load(&self) -> Result<DataMatrix> {
        load_features(&self.input, self.format, self.input_header)
    }
}

/// `path` without its last extension (`a/b.csv` becomes `a/b`).
pub fn default_prefix(path: &Path) -> PathBuf {
    path.with_extension("")
}

/// `prefix` with `suffix` appended to the file name.
pub fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Parses `key=v1,v2,...`.
pub fn parse_sweep(spec: &str) -> Result<(String, Vec<String>)> {
    let (k, vs) = spec.split_once('=').ok_or_else(|| {
        CamelError::InvalidParameter(format!("sweep must look like key=v1,v2: {spec:?}"))
    })?;
    let values: Vec<String> = vs
        .split(',')
        .map(|v| v.trim().to_string())
        .filter(|v| !v.is_empty())
        .collect();
    if values.is_empty() {
        return Err(CamelError::InvalidParameter(format!(
            "sweep {k:?} has no values"
        )));
    }
    // reject unknown keys before any work starts
    apply_setting(&mut FitConfig::default(), k, &values[0])?;
    Ok((k.trim().replace('_', "-"), values))
}

/// The resolved settings as `key -> value` text, for manifests.
pub fn describe(cfg: &FitConfig) -> BTreeMap<String, String> {
    let knn = match cfg.knn_mode {
        KnnMode::Exact => "exact".to_string(),
        KnnMode::Approx => "approx".to_string(),
        KnnMode::Auto { cutover } => format!("auto (exact up to {cutover})"),
    };
    let pairs: [(&str, String); 20] = [
        ("dim", cfg.dim.to_string()),
        ("neighbors", cfg.k.to_string()),
        ("negatives", cfg.m.to_string()),
        ("knn", knn),
        ("w-nn", cfg.force.w_nn.to_string()),
        ("w-cr", cfg.force.w_cr.to_string()),
        ("w-dp", cfg.force.w_dp.to_string()),
        ("sigma-nn", cfg.force.sigma_nn.to_string()),
        ("sigma-dp", cfg.force.sigma_dp.to_string()),
        ("alpha", cfg.force.alpha.to_string()),
        ("weight-mod", cfg.force.weight_mod.to_string()),
        ("iters", cfg.optim.max_iter.to_string()),
        ("lr", cfg.optim.lr.to_string()),
        ("beta1", cfg.optim.beta1.to_string()),
        ("beta2", cfg.optim.beta2.to_string()),
        ("eps", cfg.optim.eps.to_string()),
        ("init", cfg.optim.init.to_string()),
        ("seed", cfg.optim.seed.to_string()),
        (
            "resample-every",
            cfg.optim
                .resample_every
                .map_or("never".to_string(), |v| v.to_string()),
        ),
        ("curvature-every", cfg.optim.curvature_every.to_string()),
    ];
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}
