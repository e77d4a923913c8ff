//! Exact Ollivier-Ricci curvature on small weighted graphs.
//!
//! Each node carries a uniform probability mass over its graph neighbors.
//! The Wasserstein-1 distance between the masses of an edge's endpoints is
//! solved exactly as a transportation problem over shortest-path costs. The
//! masses are scaled to integers (`deg_j` units at every neighbor of `i`,
//! `deg_i` units at every neighbor of `j`) and routed by successive shortest
//! augmenting paths, which is exact for integral supplies.

use crate::error::{CamelError, Result};

/// Hard cap on graph size for the oracle.
pub const MAX_ORACLE_NODES: usize = 200;

/// Undirected graph with positive edge lengths.
#[derive(Debug, Clone)]
pub struct WeightedGraph {
    n: usize,
    adj: Vec<Vec<(usize, f64)>>,
    edges: Vec<(usize, usize, f64)>,
}

impl WeightedGraph {
    /// Builds a graph from undirected edges `(a, b, length)`. Repeated edges
    /// keep the first length.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        if n > MAX_ORACLE_NODES {
            return Err(CamelError::GraphTooLarge {
                nodes: n,
                limit: MAX_ORACLE_NODES,
            });
        }
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        let mut kept = Vec::new();
        for &(a, b, w) in edges {
            if a >= n || b >= n || a == b {
                return Err(CamelError::InvalidParameter(format!(
                    "edge ({a}, {b}) invalid for {n} nodes"
                )));
            }
            if !(w > 0.0 && w.is_finite()) {
                return Err(CamelError::InvalidParameter(format!(
                    "edge ({a}, {b}) has non-positive length {w}"
                )));
            }
            if adj[a].iter().any(|(x, _)| *x == b) {
                continue;
            }
            adj[a].push((b, w));
            adj[b].push((a, w));
            kept.push((a.min(b), a.max(b), w));
        }
        Ok(Self {
            n,
            adj,
            edges: kept,
        })
    }

    /// Unit-length complete graph on `n` nodes.
    pub fn complete(n: usize) -> Result<Self> {
        let edges: Vec<_> = (0..n)
            .flat_map(|a| (a + 1..n).map(move |b| (a, b, 1.0)))
            .collect();
        Self::from_edges(n, &edges)
    }

    /// Unit-length path `0 - 1 - ... - (n-1)`.
    pub fn path(n: usize) -> Result<Self> {
        let edges: Vec<_> = (1..n).map(|b| (b - 1, b, 1.0)).collect();
        Self::from_edges(n, &edges)
    }

    pub fn n_nodes(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn neighbors(&self, a: usize) -> impl Iterator<Item = usize> + '_ {
        self.adj[a].iter().map(|(b, _)| *b)
    }

    /// All-pairs shortest-path lengths (Floyd-Warshall).
    pub fn shortest_paths(&self) -> Vec<Vec<f64>> {
        let n = self.n;
        let mut d = vec![vec![f64::INFINITY; n]; n];
        for (a, row) in d.iter_mut().enumerate() {
            row[a] = 0.0;
            for &(b, w) in &self.adj[a] {
                row[b] = row[b].min(w);
            }
        }
        for via in 0..n {
            for a in 0..n {
                let dav = d[a][via];
                if !dav.is_finite() {
                    continue;
                }
                for b in 0..n {
                    let alt = dav + d[via][b];
                    if alt < d[a][b] {
                        d[a][b] = alt;
                    }
                }
            }
        }
        d
    }
}

/// Ollivier-Ricci curvature `1 - W(m_a, m_b) / d(a, b)` of every edge, in the
/// order of [`WeightedGraph::edges`].
pub fn ollivier_ricci_exact(graph: &WeightedGraph) -> Result<Vec<f64>> {
    let sp = graph.shortest_paths();
    let mut out = Vec::with_capacity(graph.edges.len());
    for &(a, b, _) in &graph.edges {
        if sp[a].iter().any(|v| !v.is_finite()) {
            return Err(CamelError::Degenerate(
                "oracle graph is not connected".into(),
            ));
        }
        let na: Vec<usize> = graph.neighbors(a).collect();
        let nb: Vec<usize> = graph.neighbors(b).collect();
        let w = wasserstein_uniform(&na, &nb, &sp);
        out.push(1.0 - w / sp[a][b]);
    }
    Ok(out)
}

/// W1 between the uniform distributions on `src` and `dst` under cost `sp`.
pub fn wasserstein_uniform(src: &[usize], dst: &[usize], sp: &[Vec<f64>]) -> f64 {
    let (p, q) = (src.len(), dst.len());
    let cost: Vec<Vec<f64>> = src
        .iter()
        .map(|&u| dst.iter().map(|&v| sp[u][v]).collect())
        .collect();
    let total = transport(&vec![q as i64; p], &vec![p as i64; q], &cost);
    total / (p * q) as f64
}

struct Edge {
    to: usize,
    cap: i64,
    cost: f64,
}

/// Minimum-cost transport of integral `supply` to `demand` (equal totals)
/// over a complete bipartite graph with costs `cost[s][t]`.
fn transport(supply: &[i64], demand: &[i64], cost: &[Vec<f64>]) -> f64 {
    let (p, q) = (supply.len(), demand.len());
    let source = p + q;
    let sink = source + 1;
    let n = sink + 1;
    let mut edges: Vec<Edge> = Vec::new();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut add = |edges: &mut Vec<Edge>, a: usize, b: usize, cap: i64, c: f64| {
        adj[a].push(edges.len());
        edges.push(Edge {
            to: b,
            cap,
            cost: c,
        });
        adj[b].push(edges.len());
        edges.push(Edge {
            to: a,
            cap: 0,
            cost: -c,
        });
    };
    for (s, &amount) in supply.iter().enumerate() {
        add(&mut edges, source, s, amount, 0.0);
    }
    for (t, &amount) in demand.iter().enumerate() {
        add(&mut edges, p + t, sink, amount, 0.0);
    }
    for s in 0..p {
        for t in 0..q {
            add(&mut edges, s, p + t, i64::MAX / 4, cost[s][t]);
        }
    }
    let mut remaining: i64 = supply.iter().sum();
    let mut total = 0.0;
    while remaining > 0 {
        // Bellman-Ford (queue based) on the residual graph
        let mut dist = vec![f64::INFINITY; n];
        let mut in_queue = vec![false; n];
        let mut prev_edge = vec![usize::MAX; n];
        dist[source] = 0.0;
        let mut queue = std::collections::VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            in_queue[u] = false;
            for &e in &adj[u] {
                let edge = &edges[e];
                if edge.cap > 0 && dist[u] + edge.cost < dist[edge.to] - 1e-12 {
                    dist[edge.to] = dist[u] + edge.cost;
                    prev_edge[edge.to] = e;
                    if !in_queue[edge.to] {
                        in_queue[edge.to] = true;
                        queue.push_back(edge.to);
                    }
                }
            }
        }
        if !dist[sink].is_finite() {
            break;
        }
        let mut push = remaining;
        let mut v = sink;
        while v != source {
            let e = prev_edge[v];
            push = push.min(edges[e].cap);
            v = edges[e ^ 1].to;
        }
        let mut v = sink;
        while v != source {
            let e = prev_edge[v];
            edges[e].cap -= push;
            edges[e ^ 1].cap += push;
            v = edges[e ^ 1].to;
        }
        total += push as f64 * dist[sink];
        remaining -= push;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complete_triangle_has_half_curvature() {
        let g = WeightedGraph::complete(3).unwrap();
        for kappa in ollivier_ricci_exact(&g).unwrap() {
            assert!((kappa - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn path_interior_edge_is_flat() {
        let g = WeightedGraph::path(6).unwrap();
        let kappa = ollivier_ricci_exact(&g).unwrap();
        // interior edges (1,2), (2,3), (3,4)
        for e in 1..4 {
            assert!(kappa[e].abs() < 1e-12, "edge {e}: {}", kappa[e]);
        }
    }

    #[test]
    fn identical_neighbor_masses_give_unit_curvature() {
        // nodes 0 and 1 both see exactly {2, 3}
        let g = WeightedGraph::from_edges(4, &[(0, 2, 1.0), (0, 3, 1.0), (1, 2, 1.0), (1, 3, 1.0)])
            .unwrap();
        let sp = g.shortest_paths();
        let w = wasserstein_uniform(&[2, 3], &[2, 3], &sp);
        assert_eq!(w, 0.0);
        assert_eq!(1.0 - w / sp[0][1], 1.0);
    }

    #[test]
    fn transport_matches_hand_solution() {
        // 2 sources of mass 1/2, 3 sinks of mass 1/3, costs |s - t| on a line
        let sp: Vec<Vec<f64>> = (0..6)
            .map(|a| (0..6).map(|b| (a as f64 - b as f64).abs()).collect())
            .collect();
        // sources {0, 1}, sinks {2, 3, 4}: 0 -> 2 (1/3), 0 -> 3 (1/6),
        // 1 -> 3 (1/6), 1 -> 4 (1/3): 2/3 + 1/2 + 1/3 + 1 = 5/2
        let w = wasserstein_uniform(&[0, 1], &[2, 3, 4], &sp);
        assert!((w - 2.5).abs() < 1e-12, "{w}");
    }

    #[test]
    fn oversized_graph_rejected() {
        assert!(matches!(
            WeightedGraph::path(MAX_ORACLE_NODES + 1),
            Err(CamelError::GraphTooLarge { .. })
        ));
    }
}
