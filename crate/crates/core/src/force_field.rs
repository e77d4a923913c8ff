//! The attractive / curvature / repulsive force field.
//!
//! For point `i` with neighbors `j` and sampled distant points `l`:
//!
//! ```text
//! F_i =  sum_j  w_nn(i,j) * pareto(d_ij^2; sigma_nn) * e_ij
//!      + sum_j  w_cr(i,j) * kappa_ij * e_ij
//!      - sum_l  w_dp(i,l) * pareto(d_il^2; sigma_dp) * e_il
//! ```
//!
//! with `e_ij = (y_j - y_i) / d_ij` and `kappa_ij` the centroid curvature of
//! the edge measured in the space being optimized. The field is a
//! displacement direction: moving `y_i` along `+F_i` contracts neighbor
//! pairs. Forces are gathered per point from that point's own lists, so a
//! frozen point keeps pulling on the points that list it while never moving.
//!
//! With weight modification enabled (the default) the weights depend on
//! distances in the reference space where the graph was built:
//!
//! ```text
//! w_nn = (1 - atan(D_ij / mean_j D_ij - 1) / pi) * w'_nn
//! w_cr = (C_ij - kappa_ij) / kappa_ij * w'_cr
//! w_dp = (1 + atan(D_il / mean D_dp - 1) / pi) * (k / m) * w'_dp
//! ```
//!
//! where `C_ij` is the edge curvature in the reference space. Disabled, every
//! weight is its base value.

use std::f64::consts::PI;

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curvature::{centroids_into, EdgeCurvature, EPS_DIST};
use crate::error::{CamelError, Result};
use crate::knn::{NeighborGraph, PairSampling};
use crate::linalg::{dist, Rows};

/// Below this magnitude of the optimized-space curvature the curvature
/// weight ratio is clamped.
pub const KAPPA_GUARD: f64 = 1e-3;
/// Clamp applied to the curvature weight ratio near flat geometry.
pub const KAPPA_RATIO_CLAMP: f64 = 10.0;

/// Force weights and kernel shapes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForceParams {
    pub w_nn: f64,
    pub w_cr: f64,
    pub w_dp: f64,
    pub sigma_nn: f64,
    pub sigma_dp: f64,
    pub alpha: f64,
    /// Distance-aware weight modification and `k / m` repulsion scaling.
    pub weight_mod: bool,
}

impl Default for ForceParams {
    fn default() -> Self {
        Self {
            w_nn: 1.0,
            w_cr: 0.05,
            w_dp: 1.0,
            sigma_nn: 20.0,
            sigma_dp: 1.0,
            alpha: 2.0,
            weight_mod: true,
        }
    }
}

impl ForceParams {
    pub fn validate(&self) -> Result<()> {
        let nonneg = [
            ("w_nn", self.w_nn),
            ("w_cr", self.w_cr),
            ("w_dp", self.w_dp),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(CamelError::InvalidParameter(format!(
                    "{name} must be >= 0, got {v}"
                )));
            }
        }
        let pos = [
            ("sigma_nn", self.sigma_nn),
            ("sigma_dp", self.sigma_dp),
            ("alpha", self.alpha),
        ];
        for (name, v) in pos {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CamelError::InvalidParameter(format!(
                    "{name} must be > 0, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Heavy-tailed kernel `1 / (1 + d2 / sigma)^alpha`.
#[inline]
pub fn pareto_kernel(d2: f64, sigma: f64, alpha: f64) -> f64 {
    let base = 1.0 + d2 / sigma;
    if alpha == 2.0 {
        1.0 / (base * base)
    } else {
        base.powf(-alpha)
    }
}

/// Neighbor weight bracket `1 - atan(ratio - 1) / pi`.
#[inline]
pub fn neighbor_bracket(d: f64, mean: f64) -> f64 {
    if mean > 0.0 {
        1.0 - ((d / mean) - 1.0).atan() / PI
    } else {
        1.0
    }
}

/// Distant weight bracket `1 + atan(ratio - 1) / pi`.
#[inline]
pub fn distant_bracket(d: f64, mean: f64) -> f64 {
    if mean > 0.0 {
        1.0 + ((d / mean) - 1.0).atan() / PI
    } else {
        1.0
    }
}

/// Curvature weight `(target - kappa) / kappa * w'`, clamped near flat
/// geometry.
#[inline]
pub fn curvature_weight(target: f64, kappa: f64, w_cr: f64) -> f64 {
    let diff = target - kappa;
    if kappa.abs() < KAPPA_GUARD {
        let ratio = if kappa == 0.0 {
            KAPPA_RATIO_CLAMP * diff.signum()
        } else {
            (diff / kappa).clamp(-KAPPA_RATIO_CLAMP, KAPPA_RATIO_CLAMP)
        };
        ratio * w_cr
    } else {
        diff / kappa * w_cr
    }
}

/// Per-edge weights of a system at one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeWeights {
    /// `N x k`
    pub w_nn: Vec<f64>,
    /// `N x k`
    pub w_cr: Vec<f64>,
    /// `N x m`
    pub w_dp: Vec<f64>,
}

/// Everything the field needs besides the current coordinates: neighbor
/// and distant lists, the reference-space distances behind the weight
/// modification, the target curvature and the frozen mask.
#[derive(Debug, Clone)]
pub struct ForceSystem {
    n: usize,
    k: usize,
    m: usize,
    neighbors: Vec<usize>,
    distant: Vec<usize>,
    target: Vec<f64>,
    nn_weight: Vec<f64>,
    dp_weight: Vec<f64>,
    frozen: Vec<bool>,
    params: ForceParams,
    /// Points whose neighbor centroid can move during optimization.
    dynamic_centroids: Vec<usize>,
    /// Points whose own gradient is needed.
    active: Vec<usize>,
}

impl ForceSystem {
    /// Builds a system over `reference`, the fixed space in which `graph`
    /// was built (rows addressed by the graph's indices). The target
    /// curvature is the centroid curvature of `graph` in `reference`.
    pub fn new(
        reference: ArrayView2<'_, f64>,
        graph: &NeighborGraph,
        sampling: &PairSampling,
        params: ForceParams,
        frozen: Option<&[bool]>,
    ) -> Result<Self> {
        let target = crate::curvature::camel_curvature(reference, graph);
        Self::with_target(reference, graph, sampling, &target, params, frozen)
    }

    /// Like [`ForceSystem::new`] with an explicit target curvature.
    pub fn with_target(
        reference: ArrayView2<'_, f64>,
        graph: &NeighborGraph,
        sampling: &PairSampling,
        target: &EdgeCurvature,
        params: ForceParams,
        frozen: Option<&[bool]>,
    ) -> Result<Self> {
        params.validate()?;
        let n = graph.n_points();
        let k = graph.k();
        let m = sampling.m();
        if reference.nrows() != n {
            return Err(CamelError::Dimension(format!(
                "reference space has {} rows, graph has {n} points",
                reference.nrows()
            )));
        }
        if m > 0 && sampling.n_points() != n {
            return Err(CamelError::Dimension(format!(
                "sampling covers {} points, graph {n}",
                sampling.n_points()
            )));
        }
        if target.n_points() != n || target.k() != k {
            return Err(CamelError::Dimension(
                "target curvature does not match graph".into(),
            ));
        }
        let frozen = match frozen {
            Some(f) if f.len() != n => {
                return Err(CamelError::Dimension(format!(
                    "frozen mask has {} entries for {n} points",
                    f.len()
                )))
            }
            Some(f) => f.to_vec(),
            None => vec![false; n],
        };
        let r = reference.as_standard_layout();
        let rows = Rows::from_view(r.view());

        let nn_weight: Vec<f64> = if params.weight_mod {
            (0..n)
                .flat_map(|i| {
                    let mean = graph.mean_neighbor_dist(i);
                    graph
                        .distances(i)
                        .iter()
                        .map(move |d| neighbor_bracket(*d, mean) * params.w_nn)
                        .collect::<Vec<_>>()
                })
                .collect()
        } else {
            vec![params.w_nn; n * k]
        };

        let distant = sampling.all_distant().to_vec();
        let dp_weight: Vec<f64> = if m == 0 {
            Vec::new()
        } else if params.weight_mod {
            let d_dp: Vec<f64> = distant
                .par_iter()
                .enumerate()
                .map(|(e, &l)| dist(rows.get(e / m), rows.get(l)))
                .collect();
            let mean = d_dp.iter().sum::<f64>() / d_dp.len() as f64;
            let ratio = k as f64 / m as f64;
            d_dp.iter()
                .map(|d| distant_bracket(*d, mean) * ratio * params.w_dp)
                .collect()
        } else {
            vec![params.w_dp; n * m]
        };

        let neighbors = graph.all_neighbors().to_vec();
        let active: Vec<usize> = (0..n).filter(|i| !frozen[*i]).collect();
        // centroids change when any neighbor moves; only those of active
        // points and their neighbors are ever read
        let mut needed = vec![false; n];
        for &i in &active {
            needed[i] = true;
            for &j in &neighbors[i * k..(i + 1) * k] {
                needed[j] = true;
            }
        }
        let dynamic_centroids = (0..n)
            .filter(|&i| needed[i] && neighbors[i * k..(i + 1) * k].iter().any(|j| !frozen[*j]))
            .collect();

        Ok(Self {
            n,
            k,
            m,
            neighbors,
            distant,
            target: target.as_flat().to_vec(),
            nn_weight,
            dp_weight,
            frozen,
            params,
            dynamic_centroids,
            active,
        })
    }

    pub fn n_points(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn params(&self) -> &ForceParams {
        &self.params
    }

    pub fn frozen(&self) -> &[bool] {
        &self.frozen
    }

    pub fn target_curvature(&self) -> EdgeCurvature {
        EdgeCurvature::from_flat(self.k, self.target.clone())
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i * self.k..(i + 1) * self.k]
    }

    pub fn distant(&self, i: usize) -> &[usize] {
        &self.distant[i * self.m..(i + 1) * self.m]
    }

    /// Replaces the distant lists (periodic resampling); the distant weight
    /// brackets are recomputed from `reference`.
    pub fn resample(
        &mut self,
        reference: ArrayView2<'_, f64>,
        sampling: &PairSampling,
    ) -> Result<()> {
        if sampling.m() != self.m || (self.m > 0 && sampling.n_points() != self.n) {
            return Err(CamelError::Dimension(
                "resampled lists do not match the system".into(),
            ));
        }
        if self.m == 0 {
            return Ok(());
        }
        self.distant = sampling.all_distant().to_vec();
        if self.params.weight_mod {
            let r = reference.as_standard_layout();
            let rows = Rows::from_view(r.view());
            let m = self.m;
            let d_dp: Vec<f64> = self
                .distant
                .iter()
                .enumerate()
                .map(|(e, &l)| dist(rows.get(e / m), rows.get(l)))
                .collect();
            let mean = d_dp.iter().sum::<f64>() / d_dp.len() as f64;
            let ratio = self.k as f64 / m as f64;
            self.dp_weight = d_dp
                .iter()
                .map(|d| distant_bracket(*d, mean) * ratio * self.params.w_dp)
                .collect();
        }
        Ok(())
    }

    /// Fresh evaluation buffers for coordinates `y`.
    pub fn workspace(&self, y: ArrayView2<'_, f64>) -> Workspace {
        let y = y.as_standard_layout();
        let rows = Rows::from_view(y.view());
        let mut centroids = vec![0.0; self.n * rows.dim()];
        centroids_into(rows, &self.neighbors, self.k, self.n, &mut centroids);
        Workspace {
            dim: rows.dim(),
            centroids,
            kappa: vec![0.0; self.n * self.k],
        }
    }

    /// Refreshes the moving centroids and the optimized-space curvature of
    /// every edge of an active point.
    pub fn update_curvature(&self, y: Rows<'_>, ws: &mut Workspace) {
        let (k, d) = (self.k, ws.dim);
        let neighbors = &self.neighbors;
        let fresh: Vec<(usize, Vec<f64>)> = self
            .dynamic_centroids
            .par_iter()
            .map(|&i| {
                let mut c = vec![0.0; d];
                for &j in &neighbors[i * k..(i + 1) * k] {
                    for (acc, x) in c.iter_mut().zip(y.get(j)) {
                        *acc += x;
                    }
                }
                c.iter_mut().for_each(|v| *v /= k as f64);
                (i, c)
            })
            .collect();
        for (i, c) in fresh {
            ws.centroids[i * d..(i + 1) * d].copy_from_slice(&c);
        }
        let centroids = &ws.centroids;
        let rows: Vec<(usize, Vec<f64>)> = self
            .active
            .par_iter()
            .map(|&i| {
                let ci = &centroids[i * d..(i + 1) * d];
                let yi = y.get(i);
                let row = neighbors[i * k..(i + 1) * k]
                    .iter()
                    .map(|&j| {
                        let dij = dist(yi, y.get(j));
                        if dij < EPS_DIST {
                            0.0
                        } else {
                            1.0 - dist(ci, &centroids[j * d..(j + 1) * d]) / dij
                        }
                    })
                    .collect();
                (i, row)
            })
            .collect();
        for (i, row) in rows {
            ws.kappa[i * k..(i + 1) * k].copy_from_slice(&row);
        }
    }

    /// The three force terms acting on point `i`, written into `att`, `cur`
    /// and `rep` (each of length `d`).
    fn point_terms(
        &self,
        i: usize,
        y: Rows<'_>,
        ws: &Workspace,
        att: &mut [f64],
        cur: &mut [f64],
        rep: &mut [f64],
    ) {
        att.iter_mut()
            .chain(cur.iter_mut())
            .chain(rep.iter_mut())
            .for_each(|v| *v = 0.0);
        if self.frozen[i] {
            return;
        }
        let (k, m, d) = (self.k, self.m, ws.dim);
        let p = self.params;
        let yi = y.get(i);
        for r in 0..k {
            let e = i * k + r;
            let yj = y.get(self.neighbors[e]);
            let d2: f64 = yi.iter().zip(yj).map(|(a, b)| (b - a) * (b - a)).sum();
            let dij = d2.sqrt();
            if dij < EPS_DIST {
                continue;
            }
            let a = self.nn_weight[e] * pareto_kernel(d2, p.sigma_nn, p.alpha) / dij;
            let kappa = ws.kappa[e];
            let c = if p.weight_mod {
                curvature_weight(self.target[e], kappa, p.w_cr) * kappa
            } else {
                p.w_cr * kappa
            } / dij;
            for t in 0..d {
                let u = yj[t] - yi[t];
                att[t] += a * u;
                cur[t] += c * u;
            }
        }
        for s in 0..m {
            let e = i * m + s;
            let yl = y.get(self.distant[e]);
            let d2: f64 = yi.iter().zip(yl).map(|(a, b)| (b - a) * (b - a)).sum();
            let dil = d2.sqrt();
            if dil < EPS_DIST {
                continue;
            }
            let w = self.dp_weight[e] * pareto_kernel(d2, p.sigma_dp, p.alpha) / dil;
            for t in 0..d {
                rep[t] -= w * (yl[t] - yi[t]);
            }
        }
    }

    /// Field at `y` given the optimized-space curvature in `ws` (see
    /// [`ForceSystem::update_curvature`]). Frozen rows are zero. When `parts`
    /// is given, the attractive, curvature and repulsive terms are stored
    /// there as flat `N x d` buffers.
    pub fn field_into(
        &self,
        y: Rows<'_>,
        ws: &Workspace,
        out: &mut [f64],
        parts: Option<&mut [Vec<f64>; 3]>,
    ) {
        let d = ws.dim;
        match parts {
            None => {
                out.par_chunks_mut(d).enumerate().for_each_init(
                    || vec![0.0; 3 * d],
                    |buf, (i, g)| {
                        let (att, rest) = buf.split_at_mut(d);
                        let (cur, rep) = rest.split_at_mut(d);
                        self.point_terms(i, y, ws, att, cur, rep);
                        for t in 0..d {
                            g[t] = att[t] + cur[t] + rep[t];
                        }
                    },
                );
            }
            Some(parts) => {
                for part in parts.iter_mut() {
                    part.clear();
                    part.resize(self.n * d, 0.0);
                }
                let [att, cur, rep] = parts;
                out.par_chunks_mut(d)
                    .zip(att.par_chunks_mut(d))
                    .zip(cur.par_chunks_mut(d))
                    .zip(rep.par_chunks_mut(d))
                    .enumerate()
                    .for_each(|(i, (((g, a), c), r))| {
                        self.point_terms(i, y, ws, a, c, r);
                        for t in 0..d {
                            g[t] = a[t] + c[t] + r[t];
                        }
                    });
            }
        }
    }

    /// Per-edge weights at configuration `y`.
    pub fn edge_weights(&self, y: ArrayView2<'_, f64>) -> EdgeWeights {
        let yc = y.as_standard_layout();
        let rows = Rows::from_view(yc.view());
        let mut ws = self.workspace(yc.view());
        let all = Self {
            active: (0..self.n).collect(),
            ..self.clone()
        };
        all.update_curvature(rows, &mut ws);
        let w_cr = ws
            .kappa
            .iter()
            .zip(&self.target)
            .map(|(kappa, c)| {
                if self.params.weight_mod {
                    curvature_weight(*c, *kappa, self.params.w_cr)
                } else {
                    self.params.w_cr
                }
            })
            .collect();
        EdgeWeights {
            w_nn: self.nn_weight.clone(),
            w_cr,
            w_dp: self.dp_weight.clone(),
        }
    }
}

/// Reusable evaluation buffers tied to one [`ForceSystem`].
#[derive(Debug, Clone)]
pub struct Workspace {
    dim: usize,
    centroids: Vec<f64>,
    kappa: Vec<f64>,
}

impl Workspace {
    /// Optimized-space curvature of the last update, `N x k` (rows of
    /// frozen points are stale).
    pub fn kappa(&self) -> &[f64] {
        &self.kappa
    }
}

/// Field over all points, optionally split into its three terms.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    pub grads: Array2<f64>,
    pub attractive: Option<Array2<f64>>,
    pub curvature: Option<Array2<f64>>,
    pub repulsive: Option<Array2<f64>>,
}

/// Evaluates the field of `system` at `y`, recomputing curvature first.
pub fn gradient(
    y: ArrayView2<'_, f64>,
    system: &ForceSystem,
    decompose: bool,
) -> Result<GradientField> {
    if y.nrows() != system.n_points() {
        return Err(CamelError::Dimension(format!(
            "coordinates have {} rows, system {}",
            y.nrows(),
            system.n_points()
        )));
    }
    crate::dataset::check_finite(y)?;
    let yc = y.as_standard_layout();
    let rows = Rows::from_view(yc.view());
    let mut ws = system.workspace(yc.view());
    system.update_curvature(rows, &mut ws);
    let (n, d) = (y.nrows(), y.ncols());
    let mut out = vec![0.0; n * d];
    let shape = |v: Vec<f64>| Array2::from_shape_vec((n, d), v).expect("n x d buffer");
    if decompose {
        let mut parts = [Vec::new(), Vec::new(), Vec::new()];
        system.field_into(rows, &ws, &mut out, Some(&mut parts));
        let [a, c, r] = parts;
        Ok(GradientField {
            grads: shape(out),
            attractive: Some(shape(a)),
            curvature: Some(shape(c)),
            repulsive: Some(shape(r)),
        })
    } else {
        system.field_into(rows, &ws, &mut out, None);
        Ok(GradientField {
            grads: shape(out),
            attractive: None,
            curvature: None,
            repulsive: None,
        })
    }
}
