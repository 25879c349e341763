//! Greedy binary decision tree on numeric thresholds, split by information
//! gain, no pruning.

use serde::{Deserialize, Serialize};

use super::argmax;
use crate::ingest::{Activity, NUM_ACTIVITIES};

const GAIN_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    /// Root is depth 0; `None` disables the cap.
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    /// Take the best separating split even when it gains no information.
    /// Needed to fit XOR-like layouts completely.
    pub split_on_zero_gain: bool,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams { max_depth: Some(15), min_leaf: 2, split_on_zero_gain: false }
    }
}

impl TreeParams {
    pub fn unlimited() -> Self {
        TreeParams { max_depth: None, min_leaf: 1, split_on_zero_gain: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node")]
pub enum TreeNode {
    Leaf {
        class: Activity,
        counts: [usize; NUM_ACTIVITIES],
    },
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Nodes live in an arena; index 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTreeModel {
    pub nodes: Vec<TreeNode>,
    pub num_features: usize,
}

fn entropy(counts: &[usize; NUM_ACTIVITIES], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

struct Candidate {
    gain: f64,
    feature: usize,
    threshold: f64,
}

struct Builder<'a> {
    rows: &'a [&'a [f64]],
    labels: Vec<usize>,
    params: &'a TreeParams,
    nodes: Vec<TreeNode>,
}

impl Builder<'_> {
    fn counts(&self, idx: &[usize]) -> [usize; NUM_ACTIVITIES] {
        let mut c = [0; NUM_ACTIVITIES];
        for &i in idx {
            c[self.labels[i]] += 1;
        }
        c
    }

    fn best_split(&self, idx: &[usize], counts: &[usize; NUM_ACTIVITIES]) -> Option<Candidate> {
        let n = idx.len();
        let parent = entropy(counts, n);
        let min_leaf = self.params.min_leaf;
        let mut best: Option<Candidate> = None;
        let mut sorted = idx.to_vec();
        for feature in 0..self.rows[0].len() {
            sorted.sort_by(|&a, &b| self.rows[a][feature].total_cmp(&self.rows[b][feature]).then(a.cmp(&b)));
            let mut left = [0usize; NUM_ACTIVITIES];
            for k in 0..n - 1 {
                left[self.labels[sorted[k]]] += 1;
                let lo = self.rows[sorted[k]][feature];
                let hi = self.rows[sorted[k + 1]][feature];
                let n_left = k + 1;
                if lo == hi || n_left < min_leaf || n - n_left < min_leaf {
                    continue;
                }
                let mut right = *counts;
                for c in 0..NUM_ACTIVITIES {
                    right[c] -= left[c];
                }
                let child = (n_left as f64 * entropy(&left, n_left)
                    + (n - n_left) as f64 * entropy(&right, n - n_left))
                    / n as f64;
                let gain = parent - child;
                let better = match &best {
                    None => true,
                    Some(b) => gain > b.gain + GAIN_EPS,
                };
                if better {
                    let mut threshold = lo + (hi - lo) / 2.0;
                    if threshold >= hi {
                        threshold = lo;
                    }
                    best = Some(Candidate { gain, feature, threshold });
                }
            }
        }
        best
    }

    fn leaf(&mut self, counts: [usize; NUM_ACTIVITIES]) -> usize {
        let scores: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
        let class = Activity::from_index(argmax(&scores)).expect("class index");
        self.nodes.push(TreeNode::Leaf { class, counts });
        self.nodes.len() - 1
    }

    fn build(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let counts = self.counts(&idx);
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let depth_ok = self.params.max_depth.is_none_or(|d| depth < d);
        if pure || !depth_ok || idx.len() < 2 * self.params.min_leaf {
            return self.leaf(counts);
        }
        let split = match self.best_split(&idx, &counts) {
            Some(s) if s.gain > GAIN_EPS || self.params.split_on_zero_gain => s,
            _ => return self.leaf(counts),
        };
        let (left_idx, right_idx): (Vec<usize>, Vec<usize>) =
            idx.into_iter().partition(|&i| self.rows[i][split.feature] <= split.threshold);
        // reserve the slot so the parent precedes its children
        self.nodes.push(TreeNode::Leaf { class: Activity::Walking, counts });
        let me = self.nodes.len() - 1;
        let left = self.build(left_idx, depth + 1);
        let right = self.build(right_idx, depth + 1);
        self.nodes[me] = TreeNode::Split { feature: split.feature, threshold: split.threshold, left, right };
        me
    }
}

impl DecisionTreeModel {
    pub(super) fn fit(params: &TreeParams, rows: &[&[f64]], labels: &[Activity]) -> DecisionTreeModel {
        let mut builder = Builder {
            rows,
            labels: labels.iter().map(|l| l.index()).collect(),
            params,
            nodes: Vec::new(),
        };
        builder.build((0..rows.len()).collect(), 0);
        DecisionTreeModel { nodes: builder.nodes, num_features: rows[0].len() }
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    fn leaf_for(&self, x: &[f64]) -> &TreeNode {
        let mut node = &self.nodes[0];
        while let TreeNode::Split { feature, threshold, left, right } = node {
            node = &self.nodes[if x[*feature] <= *threshold { *left } else { *right }];
        }
        node
    }

    /// Training class frequencies of the leaf `x` falls into.
    pub fn leaf_distribution(&self, x: &[f64]) -> [f64; NUM_ACTIVITIES] {
        let TreeNode::Leaf { class, counts } = self.leaf_for(x) else {
            unreachable!("walk ends at a leaf")
        };
        let total: usize = counts.iter().sum();
        let mut out = [0.0; NUM_ACTIVITIES];
        if total == 0 {
            out[class.index()] = 1.0;
        } else {
            for (o, &c) in out.iter_mut().zip(counts) {
                *o = c as f64 / total as f64;
            }
        }
        out
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], i: usize) -> usize {
            match &nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn leaf_sizes(&self) -> Vec<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                TreeNode::Leaf { counts, .. } => Some(counts.iter().sum()),
                TreeNode::Split { .. } => None,
            })
            .collect()
    }
}
