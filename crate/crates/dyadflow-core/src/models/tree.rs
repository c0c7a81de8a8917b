//! CART decision trees and a bagged random forest.
//!
//! Splits minimize weighted Gini impurity over midpoint thresholds.
//! Candidate features are scanned in ascending index and thresholds in
//! ascending value, and only a strictly better split replaces the incumbent,
//! so tie-breaking is deterministic everywhere.

use crate::parallel::par_map_range;
use crate::seeding::stream_seed;
use ndarray::{Array2, ArrayView1};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams { max_depth: 16, min_leaf: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub n_trees: usize,
    pub tree: TreeParams,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams { n_trees: 200, tree: TreeParams::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Node {
    Leaf { dist: Vec<f64> },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub n_features: usize,
    pub n_classes: usize,
    nodes: Vec<Node>,
    /// Per-feature Gini decrease, weighted by node size over the training
    /// set. Raw (not normalized); sums across a forest before normalizing.
    importance: Vec<f64>,
}

impl DecisionTree {
    /// Class distribution at the leaf this sample lands in.
    fn leaf_dist(&self, row: ArrayView1<f64>) -> &[f64] {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { dist } => return dist,
                Node::Split { feature, threshold, left, right } => {
                    at = if row[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    /// Leaf class distributions, one row per sample.
    pub fn scores(&self, x: &Array2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros((x.nrows(), self.n_classes));
        for (i, row) in x.rows().into_iter().enumerate() {
            let dist = self.leaf_dist(row);
            for (c, v) in dist.iter().enumerate() {
                out[(i, c)] = *v;
            }
        }
        out
    }

    pub fn predict(&self, x: &Array2<f64>) -> Vec<usize> {
        x.rows()
            .into_iter()
            .map(|row| super::argmax(self.leaf_dist(row).iter().copied()))
            .collect()
    }

    /// Gini importance normalized to sum 1 (all zeros for a stump).
    pub fn feature_importance(&self) -> Vec<f64> {
        normalize(self.importance.clone())
    }

    pub fn depth(&self) -> usize {
        fn depth_at(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => {
                    1 + depth_at(nodes, *left).max(depth_at(nodes, *right))
                }
            }
        }
        depth_at(&self.nodes, 0)
    }
}

fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let total: f64 = v.iter().sum();
    if total > 0.0 {
        for x in v.iter_mut() {
            *x /= total;
        }
    }
    v
}

struct Grow<'a> {
    x: &'a Array2<f64>,
    y: &'a [usize],
    n_classes: usize,
    params: &'a TreeParams,
    /// Features drawn per node; `None` scans all of them.
    subsample: Option<usize>,
    rng: Option<ChaCha8Rng>,
    n_root: f64,
    nodes: Vec<Node>,
    importance: Vec<f64>,
}

impl Grow<'_> {
    fn class_counts(&self, rows: &[usize]) -> Vec<f64> {
        let mut counts = vec![0.0; self.n_classes];
        for &r in rows {
            counts[self.y[r]] += 1.0;
        }
        counts
    }

    fn push_leaf(&mut self, counts: Vec<f64>, n: f64) -> usize {
        let dist = counts.into_iter().map(|c| c / n).collect();
        self.nodes.push(Node::Leaf { dist });
        self.nodes.len() - 1
    }

    /// n * gini(counts) = n - sum(c^2) / n.
    fn cost(counts: &[f64], n: f64) -> f64 {
        n - counts.iter().map(|c| c * c).sum::<f64>() / n
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        let d = self.x.ncols();
        match (self.subsample, self.rng.as_mut()) {
            (Some(m), Some(rng)) => {
                let mut picked = rand::seq::index::sample(rng, d, m.min(d)).into_vec();
                picked.sort_unstable();
                picked
            }
            _ => (0..d).collect(),
        }
    }

    fn best_split(
        &self,
        rows: &[usize],
        counts: &[f64],
        features: &[usize],
    ) -> Option<(f64, usize, f64)> {
        let n = rows.len();
        let parent_cost = Self::cost(counts, n as f64);
        let min_leaf = self.params.min_leaf;
        let mut best: Option<(f64, usize, f64)> = None;
        let mut order: Vec<(f64, usize)> = Vec::with_capacity(n);
        for &f in features {
            order.clear();
            order.extend(rows.iter().map(|&r| (self.x[(r, f)], self.y[r])));
            order.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).expect("finite"));
            let mut left = vec![0.0; self.n_classes];
            for pos in 0..n - 1 {
                left[order[pos].1] += 1.0;
                let (a, b) = (order[pos].0, order[pos + 1].0);
                if a == b {
                    continue;
                }
                let nl = pos + 1;
                let nr = n - nl;
                if nl < min_leaf || nr < min_leaf {
                    continue;
                }
                let right: Vec<f64> =
                    counts.iter().zip(&left).map(|(t, l)| t - l).collect();
                // A zero-decrease split still stands: carving the node can
                // pay off a level deeper (xor-like interactions), and both
                // children shrink, so growth always terminates.
                let decrease = parent_cost
                    - Self::cost(&left, nl as f64)
                    - Self::cost(&right, nr as f64);
                if best.map_or(true, |(d, _, _)| decrease > d) {
                    let mut thr = a + (b - a) * 0.5;
                    // Rounding can push the midpoint onto b; pull it back so
                    // `value <= thr` keeps the intended left side.
                    if thr >= b {
                        thr = a;
                    }
                    best = Some((decrease, f, thr));
                }
            }
        }
        best
    }

    fn build(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let counts = self.class_counts(&rows);
        let n = rows.len();
        let pure = counts.iter().filter(|c| **c > 0.0).count() <= 1;
        if pure || depth >= self.params.max_depth || n < 2 * self.params.min_leaf {
            return self.push_leaf(counts, n as f64);
        }
        let features = self.candidate_features();
        let Some((decrease, feature, threshold)) = self.best_split(&rows, &counts, &features)
        else {
            return self.push_leaf(counts, n as f64);
        };
        self.importance[feature] += decrease.max(0.0) / self.n_root;
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
            rows.into_iter().partition(|&r| self.x[(r, feature)] <= threshold);
        let at = self.nodes.len();
        self.nodes.push(Node::Leaf { dist: Vec::new() });
        let left = self.build(left_rows, depth + 1);
        let right = self.build(right_rows, depth + 1);
        self.nodes[at] = Node::Split { feature, threshold, left, right };
        at
    }
}

fn grow_tree(
    params: &TreeParams,
    x: &Array2<f64>,
    y: &[usize],
    n_classes: usize,
    rows: Vec<usize>,
    subsample: Option<usize>,
    rng: Option<ChaCha8Rng>,
) -> DecisionTree {
    let mut grow = Grow {
        x,
        y,
        n_classes,
        params,
        subsample,
        rng,
        n_root: rows.len() as f64,
        nodes: Vec::new(),
        importance: vec![0.0; x.ncols()],
    };
    let root = grow.build(rows, 0);
    debug_assert_eq!(root, 0);
    DecisionTree {
        n_features: x.ncols(),
        n_classes,
        nodes: grow.nodes,
        importance: grow.importance,
    }
}

/// CART tree on the full sample, scanning every feature at every node.
pub fn train_tree(
    params: &TreeParams,
    x: &Array2<f64>,
    y: &[usize],
    n_classes: usize,
) -> DecisionTree {
    grow_tree(params, x, y, n_classes, (0..x.nrows()).collect(), None, None)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RandomForest {
    pub n_features: usize,
    pub n_classes: usize,
    trees: Vec<DecisionTree>,
    importance: Vec<f64>,
}

impl RandomForest {
    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    /// Fraction of trees voting for each class, one row per sample.
    pub fn scores(&self, x: &Array2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros((x.nrows(), self.n_classes));
        let weight = 1.0 / self.trees.len() as f64;
        for (i, row) in x.rows().into_iter().enumerate() {
            for tree in &self.trees {
                let vote = super::argmax(tree.leaf_dist(row).iter().copied());
                out[(i, vote)] += weight;
            }
        }
        out
    }

    pub fn predict(&self, x: &Array2<f64>) -> Vec<usize> {
        self.scores(x)
            .rows()
            .into_iter()
            .map(|row| super::argmax(row.iter().copied()))
            .collect()
    }

    /// Mean decrease in impurity across all trees, normalized to sum 1.
    pub fn feature_importance(&self) -> &[f64] {
        &self.importance
    }
}

/// Bag `n_trees` CART trees, each on a bootstrap resample with sqrt(d)
/// features per node, each from its own seed stream. Votes decide.
pub fn train_forest(
    params: &ForestParams,
    x: &Array2<f64>,
    y: &[usize],
    n_classes: usize,
    seed: u64,
) -> RandomForest {
    let n = x.nrows();
    let d = x.ncols();
    let m = ((d as f64).sqrt().round() as usize).clamp(1, d);
    let trees = par_map_range(params.n_trees, |t| {
        let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, t as u64));
        let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        grow_tree(&params.tree, x, y, n_classes, rows, Some(m), Some(rng))
    });
    let mut importance = vec![0.0; d];
    for tree in &trees {
        for (acc, v) in importance.iter_mut().zip(&tree.importance) {
            *acc += v;
        }
    }
    RandomForest { n_features: d, n_classes, trees, importance: normalize(importance) }
}
