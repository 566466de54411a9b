//! Random forest of CART regression trees.
//!
//! Tree `t` draws its bootstrap sample and per-node feature subsets from the
//! stream `(seed, "forest", t)`, so the forest is identical however the trees
//! are scheduled across threads.

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::LearnerConfig;
use crate::rng::{self, StreamRng};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", bound = "F: Scalar")]
pub enum Node<F> {
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: F,
        left: usize,
        right: usize,
    },
    Leaf { value: F },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct Tree<F> {
    pub nodes: Vec<Node<F>>,
}

impl<F: Scalar> Tree<F> {
    pub fn predict(&self, row: &[F]) -> F {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if row[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn leaves(&self) -> impl Iterator<Item = F> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            Node::Leaf { value } => Some(*value),
            Node::Split { .. } => None,
        })
    }

    pub fn depth(&self) -> usize {
        fn walk<F>(nodes: &[Node<F>], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

pub fn predict_row<F: Scalar>(trees: &[Tree<F>], row: &[F]) -> F {
    let sum: F = trees.iter().map(|t| t.predict(row)).sum();
    sum / F::from_usize_lossy(trees.len())
}

/// Number of candidate features examined per node.
pub fn features_per_node(p: usize, fraction: f64) -> usize {
    ((p as f64 * fraction).floor() as usize).clamp(1, p.max(1))
}

pub fn grow_forest<F: Scalar>(columns: &[Vec<F>], y: &[F], cfg: &LearnerConfig) -> Vec<Tree<F>> {
    (0..cfg.rf_trees)
        .into_par_iter()
        .map(|t| grow_tree(columns, y, cfg, t))
        .collect()
}

struct Grower<'a, F> {
    columns: &'a [Vec<F>],
    y: &'a [F],
    max_depth: usize,
    min_leaf: usize,
    mtry: usize,
    rng: StreamRng,
    nodes: Vec<Node<F>>,
}

pub fn grow_tree<F: Scalar>(columns: &[Vec<F>], y: &[F], cfg: &LearnerConfig, tree_index: usize) -> Tree<F> {
    let mut rng = rng::stream(cfg.seed, "forest", &[tree_index as u64]);
    let n = y.len();
    let mut rows: Vec<usize> = if cfg.rf_bootstrap {
        (0..n).map(|_| rng.random_range(0..n)).collect()
    } else {
        (0..n).collect()
    };
    let mut g = Grower {
        columns,
        y,
        max_depth: cfg.rf_max_depth,
        min_leaf: cfg.rf_min_leaf.max(1),
        mtry: features_per_node(columns.len(), cfg.rf_feature_subsample),
        rng,
        nodes: Vec::new(),
    };
    g.build(&mut rows, 0);
    Tree { nodes: g.nodes }
}

struct Candidate<F> {
    feature: usize,
    threshold: F,
    score: F,
}

impl<F: Scalar> Grower<'_, F> {
    fn build(&mut self, rows: &mut [usize], depth: usize) -> usize {
        let id = self.nodes.len();
        let m = rows.len();
        let sum: F = rows.iter().map(|&i| self.y[i]).sum();
        let (lo, hi) = rows
            .iter()
            .fold((F::infinity(), F::neg_infinity()), |(l, h), &i| (l.min(self.y[i]), h.max(self.y[i])));
        // Rounding in the sum can push the mean an ulp outside the node's range.
        let mean = (sum / F::from_usize_lossy(m)).max(lo).min(hi);
        self.nodes.push(Node::Leaf { value: mean });

        let constant = lo == hi;
        if depth >= self.max_depth || m < 2 * self.min_leaf || constant || self.columns.is_empty() {
            return id;
        }
        let Some(best) = self.best_split(rows, sum) else {
            return id;
        };

        let col = &self.columns[best.feature];
        let mut cut = 0;
        for k in 0..m {
            if col[rows[k]] <= best.threshold {
                rows.swap(cut, k);
                cut += 1;
            }
        }
        let (left_rows, right_rows) = rows.split_at_mut(cut);
        let left = self.build(left_rows, depth + 1);
        let right = self.build(right_rows, depth + 1);
        self.nodes[id] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        };
        id
    }

    /// Best variance-reduction split over a random feature subset, scored by
    /// `S_L^2 / n_L + S_R^2 / n_R`, which differs from the SSE reduction by a
    /// per-node constant.
    fn best_split(&mut self, rows: &[usize], sum: F) -> Option<Candidate<F>> {
        let m = rows.len();
        let mf = F::from_usize_lossy(m);
        let parent = sum * sum / mf;
        let mut features = index::sample(&mut self.rng, self.columns.len(), self.mtry).into_vec();
        features.sort_unstable();

        let mut best: Option<Candidate<F>> = None;
        let mut pairs: Vec<(F, F)> = Vec::with_capacity(m);
        for f in features {
            let col = &self.columns[f];
            pairs.clear();
            pairs.extend(rows.iter().map(|&i| (col[i], self.y[i])));
            pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite features"));

            let mut left_sum = F::zero();
            for k in 1..m {
                left_sum += pairs[k - 1].1;
                if k < self.min_leaf || m - k < self.min_leaf || pairs[k - 1].0 >= pairs[k].0 {
                    continue;
                }
                let nl = F::from_usize_lossy(k);
                let nr = F::from_usize_lossy(m - k);
                let right_sum = sum - left_sum;
                let score = left_sum * left_sum / nl + right_sum * right_sum / nr;
                if best.as_ref().is_none_or(|b| score > b.score) {
                    let (lo, hi) = (pairs[k - 1].0, pairs[k].0);
                    let mid = (lo + hi) / F::lit(2.0);
                    let threshold = if mid >= hi { lo } else { mid };
                    best = Some(Candidate {
                        feature: f,
                        threshold,
                        score,
                    });
                }
            }
        }
        let tiny = F::epsilon() * F::lit(64.0) * parent.abs().max(F::one());
        best.filter(|b| b.score - parent > tiny)
    }
}
