//! CART regression trees grown on weighted bootstrap samples.
//!
//! Trees are grown depth-first with an explicit work stack (no recursion),
//! on *column-oriented* data with per-feature presorted unit lists.  A
//! bootstrap sample is represented by per-unit multiplicities rather than a
//! materialized multiset: all duplicates of a unit follow the same path, so
//! weighted statistics reproduce plain CART on the expanded sample exactly
//! while every split scan stays `O(segment length)` after one global sort.
//!
//! Split search is exhaustive: every candidate feature is scanned over the
//! midpoints of consecutive distinct values, maximizing the variance
//! reduction `S_L²/n_L + S_R²/n_R`.  Ties are broken toward the lowest
//! feature index and then the lowest threshold, which makes growth fully
//! deterministic given the feature-sampling stream.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// A tree node; children are indices into the tree's node arena.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: u32,
        threshold: f64,
        left: u32,
        right: u32,
    },
}

/// A trained regression tree.  Node 0 is the root.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    nodes: Vec<Node>,
}

impl RegressionTree {
    /// Assembles a tree from an explicit node arena (node 0 is the root).
    /// Only test fixtures construct trees this way.
    #[cfg_attr(not(test), allow(dead_code))]
    pub(crate) fn from_nodes(nodes: Vec<Node>) -> Self {
        Self { nodes }
    }

    /// Routes `x` to its leaf and returns the leaf mean.
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0usize;
        loop {
            match self.nodes[i] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if x[feature as usize] <= threshold {
                        left as usize
                    } else {
                        right as usize
                    };
                }
            }
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }

    /// Length of the longest root-to-leaf path (a lone leaf has depth 0).
    pub fn depth(&self) -> u32 {
        let mut max = 0u32;
        let mut stack = vec![(0u32, 0u32)];
        while let Some((i, depth)) = stack.pop() {
            match self.nodes[i as usize] {
                Node::Leaf { .. } => max = max.max(depth),
                Node::Split { left, right, .. } => {
                    stack.push((left, depth + 1));
                    stack.push((right, depth + 1));
                }
            }
        }
        max
    }
}

/// Growth hyperparameters, already resolved (no defaults here).
#[derive(Clone, Copy, Debug)]
pub(crate) struct GrowParams {
    /// Features drawn (without replacement) at each node.
    pub mtry: usize,
    /// A node whose bootstrap weight is ≤ this becomes a leaf.
    pub min_node_size: f64,
    /// Maximum split depth; `None` means unlimited.
    pub max_depth: Option<u32>,
}

struct Candidate {
    feature: u32,
    threshold: f64,
    left_weight: f64,
    left_sum: f64,
    left_sumsq: f64,
}

struct Task {
    lo: usize,
    hi: usize,
    weight: f64,
    sum: f64,
    sumsq: f64,
    depth: u32,
    parent: u32,
    is_left: bool,
}

const NO_PARENT: u32 = u32::MAX;

/// Grows one tree.
///
/// * `columns[f][u]` — covariate `f` of unit `u`;
/// * `y[u]` — response of unit `u`;
/// * `counts[u]` — multiplicity of unit `u` in this tree's bootstrap row;
/// * `order[f]` — all units sorted by `(columns[f][u], u)`, shared across
///   trees;
/// * `seed` — seed of the per-tree feature-sampling stream.
pub(crate) fn grow_tree(
    columns: &[Vec<f64>],
    y: &[f64],
    counts: &[u32],
    order: &[Vec<u32>],
    params: &GrowParams,
    seed: u64,
) -> RegressionTree {
    let d = columns.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // in-bag units per feature, inheriting the presorted order
    let mut idx: Vec<Vec<u32>> = order
        .iter()
        .map(|ord| {
            ord.iter()
                .copied()
                .filter(|&u| counts[u as usize] > 0)
                .collect()
        })
        .collect();
    let m = idx[0].len();

    let (mut w, mut s, mut q) = (0.0f64, 0.0f64, 0.0f64);
    for &u in &idx[0] {
        let cu = counts[u as usize] as f64;
        let yu = y[u as usize];
        w += cu;
        s += cu * yu;
        q += cu * yu * yu;
    }

    let mut nodes: Vec<Node> = Vec::new();
    let mut scratch_left: Vec<u32> = Vec::with_capacity(m);
    let mut scratch_right: Vec<u32> = Vec::with_capacity(m);
    let mut feat_buf: Vec<usize> = Vec::with_capacity(params.mtry);
    // pushing the right child before the left keeps processing preorder,
    // so the feature-sampling stream is consumed in a reproducible order
    let mut stack: Vec<Task> = vec![Task {
        lo: 0,
        hi: m,
        weight: w,
        sum: s,
        sumsq: q,
        depth: 0,
        parent: NO_PARENT,
        is_left: false,
    }];

    while let Some(t) = stack.pop() {
        let node_id = nodes.len() as u32;
        if t.parent != NO_PARENT {
            match &mut nodes[t.parent as usize] {
                Node::Split { left, right, .. } => {
                    if t.is_left {
                        *left = node_id;
                    } else {
                        *right = node_id;
                    }
                }
                Node::Leaf { .. } => unreachable!("parent of a task is always a split"),
            }
        }

        let parent_score = t.sum * t.sum / t.weight;
        // guard against phantom splits of (numerically) pure nodes
        let sse = t.sumsq - parent_score;
        let depth_ok = t.depth < params.max_depth.unwrap_or(u32::MAX);
        let splittable = t.weight > params.min_node_size
            && depth_ok
            && t.hi - t.lo >= 2
            && sse > 1e-12 * t.sumsq.abs();

        let mut best: Option<Candidate> = None;
        if splittable {
            feat_buf.clear();
            feat_buf.extend(rand::seq::index::sample(&mut rng, d, params.mtry));
            // ascending feature order so score ties resolve to the lowest index
            feat_buf.sort_unstable();
            let mut best_score = parent_score;
            for &f in &feat_buf {
                let col = &columns[f];
                let mut wl = 0.0f64;
                let mut sl = 0.0f64;
                let mut ql = 0.0f64;
                let mut prev_v = 0.0f64;
                let mut started = false;
                for &u in &idx[f][t.lo..t.hi] {
                    let v = col[u as usize];
                    if started && v > prev_v {
                        let wr = t.weight - wl;
                        let sr = t.sum - sl;
                        let score = sl * sl / wl + sr * sr / wr;
                        // strict improvement keeps the first (lowest) tie
                        if score > best_score {
                            // the midpoint is kept strictly below the upper
                            // value so `x <= threshold` routes both sides
                            // correctly even for adjacent floats
                            let mut thr = prev_v + (v - prev_v) / 2.0;
                            if thr >= v {
                                thr = prev_v;
                            }
                            best_score = score;
                            best = Some(Candidate {
                                feature: f as u32,
                                threshold: thr,
                                left_weight: wl,
                                left_sum: sl,
                                left_sumsq: ql,
                            });
                        }
                    }
                    let cu = counts[u as usize] as f64;
                    let yu = y[u as usize];
                    wl += cu;
                    sl += cu * yu;
                    ql += cu * yu * yu;
                    prev_v = v;
                    started = true;
                }
            }
        }

        match best {
            Some(c) => {
                nodes.push(Node::Split {
                    feature: c.feature,
                    threshold: c.threshold,
                    left: 0,
                    right: 0,
                });
                // stable partition of every feature list on the same predicate
                let split_col = &columns[c.feature as usize];
                let mut mid = t.lo;
                for list in idx.iter_mut() {
                    scratch_left.clear();
                    scratch_right.clear();
                    for &u in &list[t.lo..t.hi] {
                        if split_col[u as usize] <= c.threshold {
                            scratch_left.push(u);
                        } else {
                            scratch_right.push(u);
                        }
                    }
                    mid = t.lo + scratch_left.len();
                    list[t.lo..mid].copy_from_slice(&scratch_left);
                    list[mid..t.hi].copy_from_slice(&scratch_right);
                }
                stack.push(Task {
                    lo: mid,
                    hi: t.hi,
                    weight: t.weight - c.left_weight,
                    sum: t.sum - c.left_sum,
                    sumsq: t.sumsq - c.left_sumsq,
                    depth: t.depth + 1,
                    parent: node_id,
                    is_left: false,
                });
                stack.push(Task {
                    lo: t.lo,
                    hi: mid,
                    weight: c.left_weight,
                    sum: c.left_sum,
                    sumsq: c.left_sumsq,
                    depth: t.depth + 1,
                    parent: node_id,
                    is_left: true,
                });
            }
            None => nodes.push(Node::Leaf {
                value: t.sum / t.weight,
            }),
        }
    }

    RegressionTree { nodes }
}

/// Presorts unit indices by each feature value (ties by unit index), the
/// shared input for [`grow_tree`].
pub(crate) fn presort_columns(columns: &[Vec<f64>]) -> Vec<Vec<u32>> {
    columns
        .iter()
        .map(|col| {
            let mut ord: Vec<u32> = (0..col.len() as u32).collect();
            ord.sort_unstable_by(|&a, &b| {
                col[a as usize]
                    .total_cmp(&col[b as usize])
                    .then(a.cmp(&b))
            });
            ord
        })
        .collect()
}
