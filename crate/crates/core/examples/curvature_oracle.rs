//! Compares the centroid curvature with exact Ollivier-Ricci curvature on
//! three hand-built neighborhoods: spread-out, flat and shared neighbors.
//!
//! ```bash
//! cargo run --release --example curvature_oracle
//! ```

use camel::curvature::{camel_curvature, ollivier_ricci_exact, WeightedGraph};
use camel::knn::NeighborGraph;
use camel::linalg::dist;
use ndarray::{array, Array2};

/// Centroid and exact curvature of edge (0, 1). `lists` gives each point's
/// neighbors; the exact oracle uses the symmetrized edges of rows 0 and 1.
fn edge_01(points: &Array2<f64>, lists: &[Vec<usize>]) -> camel::Result<(f64, f64)> {
    let graph = NeighborGraph::from_lists(points.view(), points.view(), lists)?;
    let centroid = camel_curvature(points.view(), &graph).get(0, 0);
    let row = |i: usize| points.row(i).to_vec();
    let edges: Vec<_> = [0usize, 1]
        .iter()
        .flat_map(|&i| lists[i].iter().map(move |&j| (i, j)))
        .map(|(i, j)| (i, j, dist(&row(i), &row(j))))
        .collect();
    let wg = WeightedGraph::from_edges(points.nrows(), &edges)?;
    let exact = ollivier_ricci_exact(&wg)?;
    let e = wg
        .edges()
        .iter()
        .position(|&(a, b, _)| (a, b) == (0, 1))
        .expect("edge 0-1");
    Ok((centroid, exact[e]))
}

fn main() -> camel::Result<()> {
    let spread = array![
        [0.0, 0.0],
        [1.0, 0.0],
        [-2.0, 1.0],
        [-2.0, -1.0],
        [3.0, 1.0],
        [3.0, -1.0]
    ];
    let spread_lists = vec![
        vec![1, 2, 3],
        vec![0, 4, 5],
        vec![0, 3, 1],
        vec![0, 2, 1],
        vec![1, 5, 0],
        vec![1, 4, 0],
    ];

    let chain = array![[1.0, 0.0], [2.0, 0.0], [0.0, 0.0], [3.0, 0.0]];
    let chain_lists = vec![vec![1, 2], vec![0, 3], vec![0, 1], vec![1, 0]];

    let shared = array![[0.0, 0.0], [1.0, 0.0], [0.5, 1.0], [0.5, -1.0]];
    let shared_lists = vec![vec![1, 2, 3], vec![0, 2, 3], vec![0, 1, 3], vec![0, 1, 2]];

    for (name, pts, lists) in [
        ("spread-out neighbors", &spread, &spread_lists),
        ("flat chain", &chain, &chain_lists),
        ("shared neighbors", &shared, &shared_lists),
    ] {
        let (c, o) = edge_01(pts, lists)?;
        println!("{name:<22} centroid {c:>7.3}   ollivier-ricci {o:>7.3}");
    }
    Ok(())
}
