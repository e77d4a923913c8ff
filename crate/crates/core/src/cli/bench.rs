//! `bench`: fit every dataset over several seeds (optionally sweeping one
//! setting) and score each embedding.

use std::path::{Path, PathBuf};

use clap::Args;

use super::evaluate::{aggregate, batch_table, Aggregate};
use super::manifest::RunManifest;
use super::options::{apply_setting, load_features, load_labels, parse_sweep, FitOptions};
use crate::dataset::{
    gen_gaussian_blobs, gen_swiss_roll, subsample_indices, write_matrix_csv, DataMatrix,
    LabelVector,
};
use crate::error::{CamelError, Result};
use crate::learners::fit_unsupervised;
use crate::metrics::{evaluate, Metric, MetricConfig, MetricReport, MAX_EXACT_POINTS};

pub const DEFAULT_SWISS_ROLL_N: usize = 2000;
pub const DEFAULT_BLOBS_N: usize = 2000;
const BLOB_CLASSES: usize = 5;
const BLOB_DIM: usize = 10;
const BLOB_SPREAD: f64 = 20.0;

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// swiss-roll[:N], blobs[:N], mnist:IMAGES,LABELS or csv:DATA[,LABELS]; repeatable
    #[arg(long, value_name = "SPEC", default_value = "swiss-roll")]
    pub dataset: Vec<String>,
    /// Seeds per configuration (consecutive from --seed)
    #[arg(long, default_value_t = 5)]
    pub seeds: usize,
    /// Larger datasets are randomly subsampled to this many rows
    #[arg(long, default_value_t = MAX_EXACT_POINTS)]
    pub cap: usize,
    /// One run per value of a setting, e.g. w_cr=0,0.001,0.01,0.2
    #[arg(long, value_name = "KEY=V1,V2,...")]
    pub sweep: Option<String>,
    /// Comma-separated metric names (default: all)
    #[arg(long, value_delimiter = ',')]
    pub metrics: Vec<Metric>,
    /// Directory for embeddings and reports
    #[arg(long = "out-dir", short = 'o', default_value = "bench")]
    pub out_dir: PathBuf,
    /// Write column names into the embedding CSVs
    #[arg(long)]
    pub header: bool,
    #[command(flatten)]
    pub opts: FitOptions,
}

/// A dataset named on the command line.
#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSpec {
    SwissRoll(usize),
    Blobs(usize),
    Mnist {
        images: PathBuf,
        labels: PathBuf,
    },
    Csv {
        data: PathBuf,
        labels: Option<PathBuf>,
    },
}

impl DatasetSpec {
    pub fn parse(spec: &str) -> Result<Self> {
        let bad = |why: &str| CamelError::InvalidParameter(format!("dataset {spec:?}: {why}"));
        let (kind, rest) = spec.split_once(':').unwrap_or((spec, ""));
        let count = |default: usize| -> Result<usize> {
            if rest.is_empty() {
                Ok(default)
            } else {
                rest.parse().map_err(|_| bad("expected a point count"))
            }
        };
        match kind {
            "swiss-roll" => Ok(Self::SwissRoll(count(DEFAULT_SWISS_ROLL_N)?)),
            "blobs" => Ok(Self::Blobs(count(DEFAULT_BLOBS_N)?)),
            "mnist" => {
                let (i, l) = rest
                    .split_once(',')
                    .ok_or_else(|| bad("expected mnist:IMAGES,LABELS"))?;
                Ok(Self::Mnist {
                    images: i.into(),
                    labels: l.into(),
                })
            }
            "csv" if !rest.is_empty() => {
                let (d, l) = match rest.split_once(',') {
                    Some((d, l)) => (d, Some(PathBuf::from(l))),
                    None => (rest, None),
                };
                Ok(Self::Csv {
                    data: d.into(),
                    labels: l,
                })
            }
            _ => Err(bad("unknown kind (swiss-roll, blobs, mnist, csv)")),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Self::SwissRoll(n) => format!("swiss-roll-{n}"),
            Self::Blobs(n) => format!("blobs-{n}"),
            Self::Mnist { .. } => "mnist".to_string(),
            Self::Csv { data, .. } => data
                .file_stem()
                .map_or("csv".into(), |s| s.to_string_lossy().into_owned()),
        }
    }

    fn files(&self) -> Vec<&Path> {
        match self {
            Self::Mnist { images, labels } => vec![images, labels],
            Self::Csv { data, labels } => std::iter::once(data.as_path())
                .chain(labels.as_deref())
                .collect(),
            _ => Vec::new(),
        }
    }

    /// Loads or generates the data; generated sets use `seed`.
    pub fn load(&self, seed: u64) -> Result<(DataMatrix, Option<LabelVector>)> {
        match self {
            Self::SwissRoll(n) => {
                let (x, t) = gen_swiss_roll(*n, 0.0, seed);
                Ok((x, Some(t)))
            }
            Self::Blobs(n) => {
                let (x, l) = gen_gaussian_blobs(
                    n.div_ceil(BLOB_CLASSES),
                    BLOB_CLASSES,
                    BLOB_DIM,
                    BLOB_SPREAD,
                    seed,
                );
                Ok((x, Some(l)))
            }
            Self::Mnist { images, labels } => Ok((
                load_features(images, None, false)?,
                Some(load_labels(labels, false, true)?),
            )),
            Self::Csv { data, labels } => {
                let x = load_features(data, None, false)?;
                let l = labels
                    .as_ref()
                    .map(|p| load_labels(p, false, false))
                    .transpose()?;
                Ok((x, l))
            }
        }
    }
}

struct Setting {
    tag: String,
    key_value: Option<(String, String)>,
}

fn settings(sweep: Option<&str>) -> Result<Vec<Setting>> {
    match sweep {
        None => Ok(vec![Setting {
            tag: "default".into(),
            key_value: None,
        }]),
        Some(s) => {
            let (k, vs) = parse_sweep(s)?;
            Ok(vs
                .into_iter()
                .map(|v| Setting {
                    tag: format!("{k}={v}"),
                    key_value: Some((k.clone(), v)),
                })
                .collect())
        }
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| CamelError::io(path, e))
}

pub fn bench(a: &BenchArgs) -> Result<()> {
    if a.seeds == 0 {
        return Err(CamelError::InvalidParameter("--seeds must be >= 1".into()));
    }
    let specs: Vec<DatasetSpec> = a
        .dataset
        .iter()
        .map(|s| DatasetSpec::parse(s))
        .collect::<Result<_>>()?;
    let base = a.opts.resolve()?;
    let runs = settings(a.sweep.as_deref())?;
    std::fs::create_dir_all(&a.out_dir).map_err(|e| CamelError::io(&a.out_dir, e))?;
    let mut manifest = RunManifest::new("bench");
    manifest.set_fit_config(&base);
    let metric_cfg = MetricConfig {
        metrics: if a.metrics.is_empty() {
            Metric::ALL.to_vec()
        } else {
            a.metrics.clone()
        },
        seed: base.optim.seed,
        ..MetricConfig::default()
    };
    let mut summary = String::from("dataset,setting,metric,mean,std\n");
    let mut done = 0;
    for spec in &specs {
        let name = spec.name();
        if let Some(missing) = spec.files().into_iter().find(|p| !p.exists()) {
            log::warn!("skipping {name}: {} not found", missing.display());
            continue;
        }
        for p in spec.files() {
            manifest.add_input(&name, p, None)?;
        }
        let (x_all, labels_all) =
            manifest.time(&format!("{name}: load"), || spec.load(base.optim.seed))?;
        let available = x_all.n_samples();
        let idx = subsample_indices(available, a.cap, base.optim.seed);
        let (x, labels) = if idx.len() < x_all.n_samples() {
            log::info!("{name}: using {} of {} rows", idx.len(), x_all.n_samples());
            (x_all.select_rows(&idx), labels_all.map(|l| l.select(&idx)))
        } else {
            (x_all, labels_all)
        };
        manifest.note(
            &format!("{name}: rows"),
            serde_json::json!({ "available": available, "used": x.n_samples() }),
        );
        let dir = a.out_dir.join(&name);
        std::fs::create_dir_all(&dir).map_err(|e| CamelError::io(&dir, e))?;
        let mut tables = String::new();
        let mut json_runs = Vec::new();
        for setting in &runs {
            let mut reports: Vec<MetricReport> = Vec::new();
            let mut run_names = Vec::new();
            for s in 0..a.seeds {
                let mut cfg = base;
                if let Some((k, v)) = &setting.key_value {
                    apply_setting(&mut cfg, k, v)?;
                }
                cfg.optim.seed = base.optim.seed + s as u64;
                cfg.validate()?;
                let label = format!(
                    "{}seed{}",
                    if runs.len() > 1 {
                        format!("{}.", setting.tag)
                    } else {
                        String::new()
                    },
                    cfg.optim.seed
                );
                log::info!("{name} {label}");
                let model = manifest.time(&format!("{name} {label}: fit"), || {
                    fit_unsupervised(&x, &cfg)
                })?;
                let emb = dir.join(format!("{label}.embedding.csv"));
                write_matrix_csv(&emb, model.embedding().view(), a.header)?;
                manifest.outputs.push(emb);
                let report = manifest.time(&format!("{name} {label}: evaluate"), || {
                    evaluate(
                        x.view(),
                        model.embedding().view(),
                        labels.as_ref(),
                        &metric_cfg,
                    )
                })?;
                reports.push(report);
                run_names.push(label);
            }
            let agg: Aggregate = aggregate(&reports);
            tables.push_str(&format!("# {}\n", setting.tag));
            tables.push_str(&batch_table(&run_names, &reports, &agg));
            tables.push('\n');
            for m in Metric::ALL {
                if let (Some(mu), Some(sd)) = (agg.mean.get(m.name()), agg.std.get(m.name())) {
                    summary.push_str(&format!("{name},{},{},{mu},{sd}\n", setting.tag, m.name()));
                }
            }
            json_runs.push(serde_json::json!({
                "setting": setting.tag,
                "runs": run_names.iter().zip(&reports).map(|(n, r)| serde_json::json!({ "run": n, "report": r })).collect::<Vec<_>>(),
                "mean": agg.mean,
                "std": agg.std,
            }));
        }
        print!("## {name}\n{tables}");
        write_text(&dir.join("metrics.txt"), &tables)?;
        let json = serde_json::to_string_pretty(&json_runs).expect("reports serialize");
        write_text(&dir.join("metrics.json"), &(json + "\n"))?;
        manifest
            .outputs
            .extend([dir.join("metrics.txt"), dir.join("metrics.json")]);
        done += 1;
    }
    if done == 0 {
        return Err(CamelError::Degenerate("every dataset was skipped".into()));
    }
    let summary_path = a.out_dir.join("summary.csv");
    write_text(&summary_path, &summary)?;
    let man = a.out_dir.join("manifest.json");
    manifest.outputs.extend([summary_path, man.clone()]);
    manifest.note("seeds_per_setting", a.seeds);
    manifest.note("cap", a.cap);
    manifest.note("metric_config", &metric_cfg);
    manifest.write(&man)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dataset_specs_parse() {
        assert_eq!(
            DatasetSpec::parse("swiss-roll").unwrap(),
            DatasetSpec::SwissRoll(2000)
        );
        assert_eq!(
            DatasetSpec::parse("blobs:500").unwrap(),
            DatasetSpec::Blobs(500)
        );
        assert_eq!(
            DatasetSpec::parse("csv:a.csv,b.csv").unwrap(),
            DatasetSpec::Csv {
                data: "a.csv".into(),
                labels: Some("b.csv".into())
            }
        );
        assert!(DatasetSpec::parse("mnist:only-images").is_err());
        assert!(DatasetSpec::parse("spiral").is_err());
        assert_eq!(DatasetSpec::parse("csv:dir/x.csv").unwrap().name(), "x");
    }

    #[test]
    fn sweep_expands_to_one_setting_per_value() {
        let s = settings(Some("w_cr=0,0.001,0.01,0.2")).unwrap();
        let tags: Vec<_> = s.iter().map(|s| s.tag.as_str()).collect();
        assert_eq!(tags, ["w-cr=0", "w-cr=0.001", "w-cr=0.01", "w-cr=0.2"]);
        assert_eq!(settings(None).unwrap().len(), 1);
    }
}
