//! OPTICS ordering with xi-steep cluster extraction, used to count clusters
//! in an embedding.
//!
//! The extraction follows the common reference formulation: steep down and
//! steep up areas are detected on the reachability plot, each steep up area
//! is matched against the open steep down areas, cluster ends are corrected
//! by predecessor, and the final labels keep only clusters that do not
//! overlap an already labeled (smaller) cluster.

use ndarray::ArrayView2;
use rayon::prelude::*;

use crate::error::{CamelError, Result};
use crate::linalg::{dist, Rows};

pub const DEFAULT_XI: f64 = 0.05;

/// `max(5, N / 200)`.
pub fn default_min_samples(n: usize) -> usize {
    (n / 200).max(5)
}

/// Reachability plot in OPTICS order.
#[derive(Debug, Clone, PartialEq)]
pub struct OpticsOrdering {
    pub ordering: Vec<usize>,
    /// Reachability of each point, indexed by point (infinite for the first
    /// point of each connected run).
    pub reachability: Vec<f64>,
    pub predecessor: Vec<Option<usize>>,
    pub core_distance: Vec<f64>,
}

/// Computes the OPTICS ordering with unbounded radius.
pub fn optics_ordering(y: ArrayView2<'_, f64>, min_samples: usize) -> Result<OpticsOrdering> {
    let n = y.nrows();
    if min_samples < 2 {
        return Err(CamelError::InvalidParameter(
            "min_samples must be >= 2".into(),
        ));
    }
    let ys = y.as_standard_layout();
    let rows = Rows::from_view(ys.view());
    // core distance: distance to the min_samples-th point counting the point itself
    let core_distance: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            if n < min_samples {
                return f64::INFINITY;
            }
            let mut d: Vec<f64> = (0..n).map(|j| dist(rows.get(i), rows.get(j))).collect();
            let (_, kth, _) = d.select_nth_unstable_by(min_samples - 1, f64::total_cmp);
            *kth
        })
        .collect();
    let mut reachability = vec![f64::INFINITY; n];
    let mut predecessor = vec![None; n];
    let mut processed = vec![false; n];
    let mut ordering = Vec::with_capacity(n);
    for _ in 0..n {
        // unprocessed point of least reachability, lowest index on ties
        let mut point = usize::MAX;
        let mut best = f64::INFINITY;
        for j in 0..n {
            if !processed[j] && (point == usize::MAX || reachability[j] < best) {
                point = j;
                best = reachability[j];
            }
        }
        processed[point] = true;
        ordering.push(point);
        let core = core_distance[point];
        if !core.is_finite() {
            continue;
        }
        let p = rows.get(point);
        for j in 0..n {
            if processed[j] {
                continue;
            }
            let r = dist(p, rows.get(j)).max(core);
            if r < reachability[j] {
                reachability[j] = r;
                predecessor[j] = Some(point);
            }
        }
    }
    Ok(OpticsOrdering {
        ordering,
        reachability,
        predecessor,
        core_distance,
    })
}

struct SteepDown {
    start: usize,
    end: usize,
    mib: f64,
}

fn extend_region(steep: &[bool], xward: &[bool], start: usize, min_samples: usize) -> usize {
    let mut non_xward = 0;
    let mut end = start;
    for index in start..steep.len() {
        if steep[index] {
            non_xward = 0;
            end = index;
        } else if !xward[index] {
            non_xward += 1;
            if non_xward > min_samples {
                break;
            }
        } else {
            return end;
        }
    }
    end
}

fn filter_sdas(sdas: Vec<SteepDown>, mib: f64, xi_c: f64, r: &[f64]) -> Vec<SteepDown> {
    if mib.is_infinite() {
        return Vec::new();
    }
    sdas.into_iter()
        .filter(|s| mib <= r[s.start] * xi_c)
        .map(|mut s| {
            s.mib = s.mib.max(mib);
            s
        })
        .collect()
}

fn correct_predecessor(
    r: &[f64],
    pred: &[Option<usize>],
    ordering: &[usize],
    s: usize,
    mut e: usize,
) -> Option<(usize, usize)> {
    while s < e {
        if r[s] > r[e] {
            return Some((s, e));
        }
        let p_e = pred[e];
        if ordering[s..e].iter().any(|&o| Some(o) == p_e) {
            return Some((s, e));
        }
        e -= 1;
    }
    None
}

/// Clusters as inclusive `(start, end)` ranges of the ordering, smaller
/// nested clusters before the clusters containing them.
pub fn xi_clusters(
    o: &OpticsOrdering,
    min_samples: usize,
    min_cluster_size: usize,
    xi: f64,
) -> Vec<(usize, usize)> {
    let n = o.ordering.len();
    let mut r: Vec<f64> = o.ordering.iter().map(|&p| o.reachability[p]).collect();
    let pred: Vec<Option<usize>> = o.ordering.iter().map(|&p| o.predecessor[p]).collect();
    r.push(f64::INFINITY);
    let xi_c = 1.0 - xi;
    // NaN ratios (inf / inf) compare false everywhere
    let ratio: Vec<f64> = (0..n).map(|i| r[i] / r[i + 1]).collect();
    let steep_up: Vec<bool> = ratio.iter().map(|&q| q <= xi_c).collect();
    let steep_down: Vec<bool> = ratio.iter().map(|&q| q >= 1.0 / xi_c).collect();
    let down: Vec<bool> = ratio.iter().map(|&q| q > 1.0).collect();
    let up: Vec<bool> = ratio.iter().map(|&q| q < 1.0).collect();

    let mut sdas: Vec<SteepDown> = Vec::new();
    let mut clusters = Vec::new();
    let mut index = 0;
    let mut mib = 0.0f64;
    for steep_index in (0..n).filter(|&i| steep_up[i] || steep_down[i]) {
        if steep_index < index {
            continue;
        }
        mib = r[index..=steep_index].iter().copied().fold(mib, f64::max);
        sdas = filter_sdas(sdas, mib, xi_c, &r);
        if steep_down[steep_index] {
            let end = extend_region(&steep_down, &up, steep_index, min_samples);
            sdas.push(SteepDown {
                start: steep_index,
                end,
                mib: 0.0,
            });
            index = end + 1;
            mib = r[index];
        } else {
            let u_start = steep_index;
            let u_end = extend_region(&steep_up, &down, u_start, min_samples);
            index = u_end + 1;
            mib = r[index];
            let mut found = Vec::new();
            for d in &sdas {
                let mut c_start = d.start;
                let mut c_end = u_end;
                if r[c_end + 1] * xi_c < d.mib {
                    continue;
                }
                let d_max = r[d.start];
                if d_max * xi_c >= r[c_end + 1] {
                    while r[c_start + 1] > r[c_end + 1] && c_start < d.end {
                        c_start += 1;
                    }
                } else if r[c_end + 1] * xi_c >= d_max {
                    while c_end > u_start && r[c_end - 1] > d_max {
                        c_end -= 1;
                    }
                }
                let Some((s, e)) = correct_predecessor(&r, &pred, &o.ordering, c_start, c_end)
                else {
                    continue;
                };
                if e - s + 1 < min_cluster_size || s > d.end || e < u_start {
                    continue;
                }
                found.push((s, e));
            }
            found.reverse();
            clusters.extend(found);
        }
    }
    clusters
}

/// Point labels (cluster id or `None` for noise) from extracted clusters.
pub fn xi_labels(o: &OpticsOrdering, clusters: &[(usize, usize)]) -> Vec<Option<usize>> {
    let n = o.ordering.len();
    let mut by_position: Vec<Option<usize>> = vec![None; n];
    let mut next = 0;
    for &(s, e) in clusters {
        if by_position[s..=e].iter().all(Option::is_none) {
            by_position[s..=e].iter_mut().for_each(|l| *l = Some(next));
            next += 1;
        }
    }
    let mut labels = vec![None; n];
    for (pos, &p) in o.ordering.iter().enumerate() {
        labels[p] = by_position[pos];
    }
    labels
}

/// Number of clusters (noise excluded) found by OPTICS with xi extraction.
/// Fewer points than `min_samples` counts as one cluster.
pub fn optics_cluster_count(y: ArrayView2<'_, f64>, min_samples: usize, xi: f64) -> Result<usize> {
    if !(0.0..1.0).contains(&xi) {
        return Err(CamelError::InvalidParameter(format!(
            "xi must lie in [0, 1), got {xi}"
        )));
    }
    if y.nrows() < min_samples {
        return Ok(1);
    }
    let o = optics_ordering(y, min_samples)?;
    let clusters = xi_clusters(&o, min_samples, min_samples, xi);
    Ok(xi_labels(&o, &clusters)
        .iter()
        .flatten()
        .max()
        .map_or(0, |m| m + 1))
}

/// `exp(-|hd - ld|)` between two cluster counts.
pub fn cluster_ratio_score(hd: usize, ld: usize) -> f64 {
    (-(hd as f64 - ld as f64).abs()).exp()
}
