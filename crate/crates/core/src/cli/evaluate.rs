//! `evaluate`: metric reports for one embedding or a batch of them.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use super::manifest::RunManifest;
use super::options::{load_features, load_labels, InputFormat};
use crate::error::{CamelError, Result};
use crate::metrics::{evaluate, Metric, MetricConfig, MetricReport, DEFAULT_XI, MAX_EXACT_POINTS};

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// High-dimensional data
    #[arg(long, value_name = "FILE")]
    pub data: PathBuf,
    /// Override the data format inferred from the file name
    #[arg(long = "data-format", value_enum)]
    pub data_format: Option<InputFormat>,
    #[arg(long = "input-header")]
    pub input_header: bool,
    /// Embedding CSV; repeat for a batch (for example one per seed)
    #[arg(long, value_name = "FILE", required = true)]
    pub embedding: Vec<PathBuf>,
    /// Embedding CSVs start with a header line
    #[arg(long = "embedding-header")]
    pub embedding_header: bool,
    /// Class labels (needed by the classification and centroid metrics)
    #[arg(long, value_name = "FILE")]
    pub labels: Option<PathBuf>,
    /// Read numeric labels as values rather than classes
    #[arg(long = "numeric-labels")]
    pub numeric_labels: bool,
    /// Label CSV files start with a header line
    #[arg(long = "labels-header")]
    pub labels_header: bool,
    /// Comma-separated metric names (default: all)
    #[arg(long, value_delimiter = ',')]
    pub metrics: Vec<Metric>,
    /// Neighborhood size of the rank metrics
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// Seed of the subsampling, triplet draws and cross-validation folds
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Points above this count are subsampled
    #[arg(long = "max-points", default_value_t = MAX_EXACT_POINTS)]
    pub max_points: usize,
    /// Steepness threshold of the cluster extraction
    #[arg(long, default_value_t = DEFAULT_XI)]
    pub xi: f64,
    /// Write the JSON report here
    #[arg(long, value_name = "FILE")]
    pub json: Option<PathBuf>,
    /// Write the text table here (it is always printed)
    #[arg(long, value_name = "FILE")]
    pub table: Option<PathBuf>,
}

/// Mean and sample standard deviation per metric across runs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub mean: BTreeMap<String, f64>,
    pub std: BTreeMap<String, f64>,
}

/// Aggregates the metrics present in every report. With a single run the
/// standard deviation is zero.
pub fn aggregate(reports: &[MetricReport]) -> Aggregate {
    let mut mean = BTreeMap::new();
    let mut std = BTreeMap::new();
    let Some(first) = reports.first() else {
        return Aggregate { mean, std };
    };
    for name in first.scores.keys() {
        let vals: Vec<f64> = reports
            .iter()
            .filter_map(|r| r.scores.get(name).copied())
            .collect();
        if vals.len() != reports.len() {
            continue;
        }
        let n = vals.len() as f64;
        let mu = vals.iter().sum::<f64>() / n;
        let var = if vals.len() > 1 {
            vals.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        mean.insert(name.clone(), mu);
        std.insert(name.clone(), var.sqrt());
    }
    Aggregate { mean, std }
}

/// One row per run plus mean and std rows, metrics as columns.
pub fn batch_table(names: &[String], reports: &[MetricReport], agg: &Aggregate) -> String {
    let metrics: Vec<&'static str> = Metric::ALL
        .iter()
        .map(|m| m.name())
        .filter(|m| agg.mean.contains_key(*m))
        .collect();
    let width = names.iter().map(String::len).chain([4]).max().unwrap_or(4);
    let mut out = format!("{:<width$}", "run");
    for m in &metrics {
        out.push_str(&format!(" {m:>14}"));
    }
    out.push('\n');
    let mut row = |label: &str, get: &dyn Fn(&str) -> Option<f64>| {
        out.push_str(&format!("{label:<width$}"));
        for m in &metrics {
            match get(m) {
                Some(v) => out.push_str(&format!(" {v:>14.4}")),
                None => out.push_str(&format!(" {:>14}", "-")),
            }
        }
        out.push('\n');
    };
    for (name, r) in names.iter().zip(reports) {
        row(name, &|m| r.scores.get(m).copied());
    }
    row("mean", &|m| agg.mean.get(m).copied());
    row("std", &|m| agg.std.get(m).copied());
    out
}

pub fn evaluate_cmd(a: &EvaluateArgs) -> Result<()> {
    let mut manifest = RunManifest::new("evaluate");
    let x = manifest.time("load", || {
        load_features(&a.data, a.data_format, a.input_header)
    })?;
    manifest.add_input("features", &a.data, Some((x.n_samples(), x.n_features())))?;
    let labels = match &a.labels {
        Some(p) => {
            manifest.add_input("labels", p, None)?;
            Some(load_labels(p, a.labels_header, !a.numeric_labels)?)
        }
        None => None,
    };
    let cfg = MetricConfig {
        k: a.k,
        seed: a.seed,
        metrics: if a.metrics.is_empty() {
            Metric::ALL.to_vec()
        } else {
            a.metrics.clone()
        },
        max_points: a.max_points,
        xi: a.xi,
    };
    let mut reports = Vec::with_capacity(a.embedding.len());
    let mut names = Vec::with_capacity(a.embedding.len());
    for path in &a.embedding {
        let y = load_features(path, Some(InputFormat::Csv), a.embedding_header)?;
        manifest.add_input("embedding", path, Some((y.n_samples(), y.n_features())))?;
        if y.n_samples() != x.n_samples() {
            return Err(CamelError::Dimension(format!(
                "{} has {} rows, the data {}",
                path.display(),
                y.n_samples(),
                x.n_samples()
            )));
        }
        let report = manifest.time("evaluate", || {
            evaluate(x.view(), y.view(), labels.as_ref(), &cfg)
        })?;
        for (m, why) in &report.artifacts.skipped {
            log::warn!("{}: {m} skipped ({why})", path.display());
        }
        reports.push(report);
        names.push(path.display().to_string());
    }
    let (table, json) = if reports.len() == 1 {
        (reports[0].to_table(), reports[0].to_json())
    } else {
        let agg = aggregate(&reports);
        let runs: Vec<_> = names
            .iter()
            .zip(&reports)
            .map(|(n, r)| serde_json::json!({ "embedding": n, "report": r }))
            .collect();
        let doc = serde_json::json!({ "runs": runs, "mean": agg.mean, "std": agg.std });
        (
            batch_table(&names, &reports, &agg),
            serde_json::to_string_pretty(&doc).expect("report serializes"),
        )
    };
    print!("{table}");
    if let Some(p) = &a.table {
        std::fs::write(p, &table).map_err(|e| CamelError::io(p, e))?;
        manifest.outputs.push(p.clone());
    }
    if let Some(p) = &a.json {
        std::fs::write(p, json + "\n").map_err(|e| CamelError::io(p, e))?;
        manifest.outputs.push(p.clone());
        let man = p.with_extension("manifest.json");
        manifest.outputs.push(man.clone());
        manifest.note("metric_config", &cfg);
        manifest.write(&man)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{ReportArtifacts, ReportParams};

    fn report(pairs: &[(&str, f64)]) -> MetricReport {
        MetricReport {
            scores: pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            params: ReportParams {
                k: 10,
                seed: 0,
                n_points: 0,
                n_evaluated: 0,
                n_triplets: 0,
                n_pairs: 0,
                optics_min_samples: 5,
                xi: DEFAULT_XI,
            },
            artifacts: ReportArtifacts::default(),
        }
    }

    #[test]
    fn aggregate_matches_hand_values() {
        let rs = [
            report(&[("trust", 0.9), ("npp", 0.5)]),
            report(&[("trust", 0.8), ("npp", 0.7)]),
            report(&[("trust", 1.0)]),
        ];
        let agg = aggregate(&rs);
        assert!((agg.mean["trust"] - 0.9).abs() < 1e-15);
        // sample variance of {0.9, 0.8, 1.0} is 0.01
        assert!((agg.std["trust"] - 0.1).abs() < 1e-12);
        assert!(!agg.mean.contains_key("npp"));
        let table = batch_table(&["a".into(), "b".into(), "c".into()], &rs, &agg);
        assert_eq!(table.lines().count(), 6);
        assert!(table.lines().nth(4).unwrap().starts_with("mean"));
    }

    #[test]
    fn single_run_has_zero_spread() {
        let agg = aggregate(&[report(&[("auc", 0.3)])]);
        assert_eq!(agg.std["auc"], 0.0);
    }
}
