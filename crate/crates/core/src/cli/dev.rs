//! Hidden developer commands for producing test fixtures.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Subcommand};

use super::options::load_features;
use crate::curvature::{camel_curvature, ollivier_ricci_exact, WeightedGraph};
use crate::error::{CamelError, Result};
use crate::knn::{build_knn, KnnMode};

#[derive(Debug, Args)]
pub struct DevArgs {
    #[command(subcommand)]
    pub tool: DevTool,
}

#[derive(Debug, Subcommand)]
pub enum DevTool {
    /// Centroid and exact Ollivier-Ricci curvature of every kNN edge
    Curvature {
        /// Point coordinates (CSV)
        #[arg(long, short = 'i')]
        input: PathBuf,
        #[arg(long, short = 'k', default_value_t = 3)]
        k: usize,
        /// CSV to write (default: standard output)
        #[arg(long, short = 'o')]
        output: Option<PathBuf>,
    },
}

/// One directed edge: `i, j, rank, camel, ollivier`.
pub type CurvatureRow = (usize, usize, usize, f64, f64);

/// Rows for the directed kNN edges of the points; the oracle runs on the
/// symmetrized graph with Euclidean lengths.
pub fn curvature_table(
    points: ndarray::ArrayView2<'_, f64>,
    k: usize,
) -> Result<Vec<CurvatureRow>> {
    let graph = build_knn(points, k, KnnMode::Exact, 0)?;
    let camel = camel_curvature(points, &graph);
    let mut edges = Vec::new();
    for i in 0..graph.n_points() {
        for (&j, &d) in graph.neighbors(i).iter().zip(graph.distances(i)) {
            edges.push((i, j, d));
        }
    }
    let wg = WeightedGraph::from_edges(graph.n_points(), &edges)?;
    let exact = ollivier_ricci_exact(&wg)?;
    let lookup = |i: usize, j: usize| {
        let key = (i.min(j), i.max(j));
        wg.edges()
            .iter()
            .position(|&(a, b, _)| (a, b) == key)
            .map(|e| exact[e])
            .expect("every kNN edge is in the oracle graph")
    };
    let mut rows = Vec::with_capacity(edges.len());
    for i in 0..graph.n_points() {
        for (r, &j) in graph.neighbors(i).iter().enumerate() {
            rows.push((i, j, r, camel.get(i, r), lookup(i, j)));
        }
    }
    Ok(rows)
}

pub fn dev(a: &DevArgs) -> Result<()> {
    match &a.tool {
        DevTool::Curvature { input, k, output } => {
            let x = load_features(input, None, false)?;
            let rows = curvature_table(x.view(), *k)?;
            let mut text = String::from("i,j,rank,camel,ollivier\n");
            for (i, j, r, c, o) in rows {
                text.push_str(&format!("{i},{j},{r},{c},{o}\n"));
            }
            match output {
                Some(p) => std::fs::write(p, text).map_err(|e| CamelError::io(p, e)),
                None => std::io::stdout()
                    .write_all(text.as_bytes())
                    .map_err(|e| CamelError::io("<stdout>", e)),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn square_edges_have_both_curvatures() {
        let pts = array![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [0.5, 2.0]];
        let rows = curvature_table(pts.view(), 2).unwrap();
        assert_eq!(rows.len(), 10);
        assert!(rows.iter().all(|r| r.3 <= 1.0 && r.4.is_finite()));
    }
}
