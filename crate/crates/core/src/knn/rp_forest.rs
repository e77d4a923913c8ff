//! Random-projection forest for approximate kNN.
//!
//! Each tree splits a node by the hyperplane equidistant from two randomly
//! chosen points of that node (the point is sent to the side of the closer
//! one). Candidates for a point are the union of its leaves across trees,
//! followed by one round of neighbor-of-neighbor refinement.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::top_k;
use crate::linalg::{sq_dist, Rows};

pub const LEAF_SIZE: usize = 32;

#[derive(Debug, Clone)]
enum Node {
    Split {
        a: usize,
        b: usize,
        left: u32,
        right: u32,
    },
    Leaf(Vec<usize>),
}

#[derive(Debug, Clone)]
struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn build(points: Rows<'_>, seed: u64, stream: u64) -> Tree {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let mut nodes = Vec::new();
        let all: Vec<usize> = (0..points.len()).collect();
        Self::grow(points, all, &mut rng, &mut nodes);
        Tree { nodes }
    }

    fn grow(points: Rows<'_>, idx: Vec<usize>, rng: &mut ChaCha8Rng, nodes: &mut Vec<Node>) -> u32 {
        let id = nodes.len() as u32;
        if idx.len() <= LEAF_SIZE {
            nodes.push(Node::Leaf(idx));
            return id;
        }
        nodes.push(Node::Leaf(Vec::new()));
        let n = idx.len();
        let ia = rng.random_range(0..n);
        let mut ib = rng.random_range(0..n - 1);
        if ib >= ia {
            ib += 1;
        }
        let (a, b) = (idx[ia], idx[ib]);
        let (pa, pb) = (points.get(a), points.get(b));
        let mut left = Vec::with_capacity(n / 2 + 1);
        let mut right = Vec::with_capacity(n / 2 + 1);
        for &i in &idx {
            let p = points.get(i);
            let (da, db) = (sq_dist(p, pa), sq_dist(p, pb));
            let go_left = if da == db {
                rng.random::<bool>()
            } else {
                da < db
            };
            if go_left {
                left.push(i);
            } else {
                right.push(i);
            }
        }
        if left.is_empty() || right.is_empty() {
            // coincident points: fall back to a random halving
            left.clear();
            right.clear();
            for &i in &idx {
                if rng.random::<bool>() {
                    left.push(i);
                } else {
                    right.push(i);
                }
            }
            if left.is_empty() || right.is_empty() {
                let mid = n / 2;
                left = idx[..mid].to_vec();
                right = idx[mid..].to_vec();
            }
        }
        let l = Self::grow(points, left, rng, nodes);
        let r = Self::grow(points, right, rng, nodes);
        nodes[id as usize] = Node::Split {
            a,
            b,
            left: l,
            right: r,
        };
        id
    }

    fn leaf_for(&self, points: Rows<'_>, q: &[f64]) -> &[usize] {
        let mut node = 0usize;
        loop {
            match &self.nodes[node] {
                Node::Leaf(members) => return members,
                Node::Split { a, b, left, right } => {
                    let (da, db) = (sq_dist(q, points.get(*a)), sq_dist(q, points.get(*b)));
                    node = if da <= db { *left } else { *right } as usize;
                }
            }
        }
    }

    fn leaves(&self) -> impl Iterator<Item = &Vec<usize>> {
        self.nodes.iter().filter_map(|n| match n {
            Node::Leaf(m) => Some(m),
            Node::Split { .. } => None,
        })
    }
}

/// Forest of `ceil(5 log2 N)` random-projection trees over a fixed point set.
#[derive(Debug)]
pub struct RpForest<'a> {
    points: Rows<'a>,
    trees: Vec<Tree>,
}

impl<'a> RpForest<'a> {
    pub fn n_trees_for(n: usize) -> usize {
        ((5.0 * (n.max(2) as f64).log2()).ceil() as usize).max(1)
    }

    pub fn build(points: Rows<'a>, seed: u64) -> Self {
        Self::with_trees(points, Self::n_trees_for(points.len()), seed)
    }

    pub fn with_trees(points: Rows<'a>, n_trees: usize, seed: u64) -> Self {
        let trees = (0..n_trees as u64)
            .into_par_iter()
            .map(|t| Tree::build(points, seed, t))
            .collect();
        Self { points, trees }
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    /// Approximate kNN of every indexed point (self excluded), as a flat
    /// `N x k` index list.
    pub fn self_knn(&self, k: usize) -> Vec<usize> {
        let n = self.points.len();
        // leaf membership per tree, so each point looks up its own leaves
        let mut leaf_of: Vec<Vec<u32>> = vec![Vec::with_capacity(self.trees.len()); n];
        let mut leaf_lists: Vec<&Vec<usize>> = Vec::new();
        for tree in &self.trees {
            for members in tree.leaves() {
                let id = leaf_lists.len() as u32;
                leaf_lists.push(members);
                for &i in members {
                    leaf_of[i].push(id);
                }
            }
        }
        let points = self.points;
        let mut lists = vec![0usize; n * k];
        lists.par_chunks_mut(k).enumerate().for_each_init(
            || (vec![u32::MAX; n], Vec::new()),
            |(stamp, cands), (i, slot)| {
                cands.clear();
                stamp[i] = i as u32;
                let p = points.get(i);
                for &leaf in &leaf_of[i] {
                    for &j in leaf_lists[leaf as usize] {
                        if stamp[j] != i as u32 {
                            stamp[j] = i as u32;
                            cands.push((sq_dist(p, points.get(j)), j));
                        }
                    }
                }
                fill_slot(cands, k, n, i, points, stamp, slot);
            },
        );
        self.refine(lists, k)
    }

    /// One neighbor-of-neighbor pass over the current lists.
    fn refine(&self, lists: Vec<usize>, k: usize) -> Vec<usize> {
        let n = self.points.len();
        let points = self.points;
        let mut out = vec![0usize; n * k];
        out.par_chunks_mut(k).enumerate().for_each_init(
            || (vec![u32::MAX; n], Vec::new()),
            |(stamp, cands), (i, slot)| {
                cands.clear();
                stamp[i] = i as u32;
                let p = points.get(i);
                let mut push = |j: usize, cands: &mut Vec<(f64, usize)>| {
                    if stamp[j] != i as u32 {
                        stamp[j] = i as u32;
                        cands.push((sq_dist(p, points.get(j)), j));
                    }
                };
                for &j in &lists[i * k..(i + 1) * k] {
                    push(j, cands);
                    for &l in &lists[j * k..(j + 1) * k] {
                        push(l, cands);
                    }
                }
                top_k(cands, k);
                for (s, c) in slot.iter_mut().zip(cands.iter()) {
                    *s = c.1;
                }
            },
        );
        out
    }

    /// Approximate neighbors of external query points among the indexed points.
    pub fn query_knn(&self, queries: Rows<'_>, k: usize) -> Vec<usize> {
        let n = self.points.len();
        let points = self.points;
        let mut lists = vec![0usize; queries.len() * k];
        lists.par_chunks_mut(k).enumerate().for_each_init(
            || (vec![u32::MAX; n], Vec::new()),
            |(stamp, cands), (qi, slot)| {
                cands.clear();
                let q = queries.get(qi);
                for tree in &self.trees {
                    for &j in tree.leaf_for(points, q) {
                        if stamp[j] != qi as u32 {
                            stamp[j] = qi as u32;
                            cands.push((sq_dist(q, points.get(j)), j));
                        }
                    }
                }
                if cands.len() < k {
                    for j in 0..n {
                        if stamp[j] != qi as u32 {
                            stamp[j] = qi as u32;
                            cands.push((sq_dist(q, points.get(j)), j));
                        }
                    }
                }
                top_k(cands, k);
                for (s, c) in slot.iter_mut().zip(cands.iter()) {
                    *s = c.1;
                }
            },
        );
        lists
    }
}

/// Top-k of `cands` into `slot`; tops up from a linear scan when the leaves
/// produced fewer than `k` candidates.
fn fill_slot(
    cands: &mut Vec<(f64, usize)>,
    k: usize,
    n: usize,
    i: usize,
    points: Rows<'_>,
    stamp: &mut [u32],
    slot: &mut [usize],
) {
    if cands.len() < k {
        let p = points.get(i);
        for j in 0..n {
            if stamp[j] != i as u32 {
                stamp[j] = i as u32;
                cands.push((sq_dist(p, points.get(j)), j));
            }
        }
    }
    top_k(cands, k);
    for (s, c) in slot.iter_mut().zip(cands.iter()) {
        *s = c.1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tree_count_follows_log_rule() {
        assert_eq!(RpForest::n_trees_for(1024), 50);
        assert_eq!(RpForest::n_trees_for(10_000), 67);
    }

    #[test]
    fn leaves_partition_points() {
        let data: Vec<f64> = (0..500).map(|i| ((i * 37) % 101) as f64).collect();
        let rows = Rows::new(&data, 2);
        let tree = Tree::build(rows, 1, 0);
        let mut seen: Vec<usize> = tree.leaves().flatten().copied().collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..250).collect::<Vec<_>>());
        assert!(tree.leaves().all(|l| l.len() <= LEAF_SIZE));
    }

    #[test]
    fn coincident_points_still_split() {
        let data = vec![1.0; 200];
        let rows = Rows::new(&data, 2);
        let tree = Tree::build(rows, 1, 0);
        assert!(tree.leaves().all(|l| l.len() <= LEAF_SIZE));
    }
}
