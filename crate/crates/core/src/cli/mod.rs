//! Command-line interface: argument parsing, logging, thread setup and the
//! mapping from errors to exit codes.

mod bench;
mod commands;
mod dev;
mod evaluate;
pub mod manifest;
pub mod options;

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::error::CamelError;
use crate::optimizer::IterStats;

pub use manifest::RunManifest;

/// Exit status for success.
pub const EXIT_OK: i32 = 0;
/// Exit status for bad flags or parameters.
pub const EXIT_USAGE: i32 = 2;
/// Exit status for unreadable, malformed or inconsistent data.
pub const EXIT_DATA: i32 = 3;
/// Exit status when an optimization diverges.
pub const EXIT_DIVERGENCE: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "camel",
    version,
    about = "Curvature-augmented force-field manifold embedding"
)]
pub struct Cli {
    /// Worker threads (default: all cores; 1 gives the reference ordering)
    #[arg(long, global = true, env = "CAMEL_THREADS")]
    pub threads: Option<usize>,
    /// Log line format on standard error
    #[arg(long = "log-format", global = true, value_enum, default_value_t = LogFormat::Text)]
    pub log_format: LogFormat,
    /// Only log warnings and errors
    #[arg(long, short = 'q', global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum LogFormat {
    Text,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit an embedding (supervised when labels are given)
    Fit(commands::FitArgs),
    /// Project new samples into a fitted embedding
    Transform(commands::TransformArgs),
    /// Fit with partially labeled data
    Semifit(commands::SemifitArgs),
    /// Reconstruct feature vectors for embedding locations
    Inverse(commands::InverseArgs),
    /// Score embeddings with the metric suite
    Evaluate(evaluate::EvaluateArgs),
    /// Fit and score several seeds per dataset
    Bench(bench::BenchArgs),
    /// Developer tools
    #[command(hide = true)]
    Dev(dev::DevArgs),
}

/// Exit status for an error.
pub fn exit_code(err: &CamelError) -> i32 {
    match err {
        CamelError::InvalidParameter(_) => EXIT_USAGE,
        CamelError::Divergence { .. } => EXIT_DIVERGENCE,
        _ => EXIT_DATA,
    }
}

fn init_logging(format: LogFormat, quiet: bool) {
    let level = if quiet {
        log::LevelFilter::Warn
    } else {
        log::LevelFilter::Info
    };
    let mut builder = env_logger::Builder::new();
    builder.filter_level(level).parse_env("CAMEL_LOG");
    if format == LogFormat::Json {
        builder.format(|buf, record| {
            let line = serde_json::json!({
                "level": record.level().as_str().to_ascii_lowercase(),
                "target": record.target(),
                "message": record.args().to_string(),
            });
            writeln!(buf, "{line}")
        });
    }
    // a second initialization (tests calling run twice) keeps the first logger
    let _ = builder.try_init();
}

fn init_threads(threads: Option<usize>) -> Result<(), CamelError> {
    if let Some(t) = threads {
        if t == 0 {
            return Err(CamelError::InvalidParameter(
                "--threads must be >= 1".into(),
            ));
        }
        if rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .is_err()
        {
            log::debug!("thread pool already initialized");
        }
    }
    Ok(())
}

/// Parses `args` (program name first) and runs the command; returns the
/// process exit status.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    init_logging(cli.log_format, cli.quiet);
    let result = init_threads(cli.threads).and_then(|()| match cli.command {
        Command::Fit(a) => commands::fit(&a),
        Command::Transform(a) => commands::transform(&a),
        Command::Semifit(a) => commands::semifit(&a),
        Command::Inverse(a) => commands::inverse(&a),
        Command::Evaluate(a) => evaluate::evaluate_cmd(&a),
        Command::Bench(a) => bench::bench(&a),
        Command::Dev(a) => dev::dev(&a),
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            log::error!("{e}");
            exit_code(&e)
        }
    }
}

/// Logs `iter` and the mean field norm every `every` iterations and at the
/// last one.
pub(crate) fn progress_logger(total: usize, every: usize) -> impl FnMut(&IterStats) {
    move |s: &IterStats| {
        if s.iter.is_multiple_of(every) || s.iter == total {
            log::info!(target: "camel::progress", "iter={} mean_grad={:.6e}", s.iter, s.mean_grad);
        }
    }
}

/// Collects per-iteration mean magnitudes of the three force terms.
pub(crate) struct ForceTrace {
    dim: usize,
    rows: Vec<[f64; 4]>,
}

impl ForceTrace {
    pub(crate) fn new(dim: usize) -> Self {
        Self {
            dim,
            rows: Vec::new(),
        }
    }

    pub(crate) fn record(&mut self, iter: usize, parts: &[Vec<f64>; 3]) {
        let mut row = [iter as f64, 0.0, 0.0, 0.0];
        for (slot, part) in row[1..].iter_mut().zip(parts) {
            let n = (part.len() / self.dim).max(1);
            *slot = part
                .chunks(self.dim)
                .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
                .sum::<f64>()
                / n as f64;
        }
        self.rows.push(row);
    }

    pub(crate) fn write(&self, path: &PathBuf) -> crate::Result<()> {
        let mut out = String::from("iter,attractive,curvature,repulsive\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{:e},{:e},{:e}\n",
                r[0] as usize, r[1], r[2], r[3]
            ));
        }
        std::fs::write(path, out).map_err(|e| CamelError::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_by_error_kind() {
        assert_eq!(
            exit_code(&CamelError::InvalidParameter("x".into())),
            EXIT_USAGE
        );
        assert_eq!(
            exit_code(&CamelError::Parse {
                row: 1,
                msg: "x".into()
            }),
            EXIT_DATA
        );
        assert_eq!(
            exit_code(&CamelError::Divergence {
                iter: 3,
                mean_abs: 1e7
            }),
            EXIT_DIVERGENCE
        );
    }

    #[test]
    fn bad_flags_are_usage_errors() {
        assert_eq!(run_cli(["camel", "fit", "--bogus"]), EXIT_USAGE);
        assert_eq!(run_cli(["camel"]), EXIT_USAGE);
        assert_eq!(run_cli(["camel", "--help"]), EXIT_OK);
    }

    #[test]
    fn force_trace_averages_norms() {
        let mut t = ForceTrace::new(2);
        t.record(
            0,
            &[
                vec![3.0, 4.0, 0.0, 0.0],
                vec![0.0; 4],
                vec![1.0, 0.0, 0.0, 1.0],
            ],
        );
        assert_eq!(t.rows[0], [0.0, 2.5, 0.0, 1.0]);
    }
}
