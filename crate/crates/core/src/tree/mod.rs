//! Binary regression trees grown by within-node sum-of-squares reduction.
//!
//! Split rules send rows with `value < threshold` left and the rest right.
//! Thresholds sit at midpoints between consecutive distinct values, so the
//! partition of the training rows is the same as the `<= observed value`
//! convention.

mod export;
mod prune;
mod split;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rescale::ScoredMatrix;

pub(crate) use export::extreme_leaf_indices;
pub use export::{export_dot, export_json, import_json};
pub use prune::{cost_complexity_sequence, cv_prune, prune_at, CvParams, PruneRule, PruneStep, PruneTrace};
pub use split::{best_split, best_split_rows, SplitCandidate};

/// Default minimum leaf size of the analysis tree.
pub const DEFAULT_MIN_LEAF: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRule {
    pub feature: usize,
    pub threshold: f64,
}

impl SplitRule {
    /// True when the row goes to the left child.
    pub fn goes_left(&self, row: &[f64]) -> bool {
        row[self.feature] < self.threshold
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeStats {
    pub n: usize,
    pub mean: f64,
    /// Within sum of squares.
    pub sse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        n: usize,
        mean: f64,
        sse: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        n: usize,
        mean: f64,
        sse: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    pub fn leaf(stats: NodeStats) -> Self {
        TreeNode::Leaf {
            n: stats.n,
            mean: stats.mean,
            sse: stats.sse,
        }
    }

    pub fn split(rule: SplitRule, stats: NodeStats, left: TreeNode, right: TreeNode) -> Self {
        TreeNode::Split {
            feature: rule.feature,
            threshold: rule.threshold,
            n: stats.n,
            mean: stats.mean,
            sse: stats.sse,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    pub fn stats(&self) -> NodeStats {
        match *self {
            TreeNode::Leaf { n, mean, sse } | TreeNode::Split { n, mean, sse, .. } => NodeStats { n, mean, sse },
        }
    }

    pub fn rule(&self) -> Option<SplitRule> {
        match *self {
            TreeNode::Leaf { .. } => None,
            TreeNode::Split { feature, threshold, .. } => Some(SplitRule { feature, threshold }),
        }
    }

    pub fn children(&self) -> Option<(&TreeNode, &TreeNode)> {
        match self {
            TreeNode::Leaf { .. } => None,
            TreeNode::Split { left, right, .. } => Some((left, right)),
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, TreeNode::Leaf { .. })
    }

    pub fn n_leaves(&self) -> usize {
        match self.children() {
            None => 1,
            Some((l, r)) => l.n_leaves() + r.n_leaves(),
        }
    }

    pub fn n_internal(&self) -> usize {
        match self.children() {
            None => 0,
            Some((l, r)) => 1 + l.n_internal() + r.n_internal(),
        }
    }

    pub fn depth(&self) -> usize {
        match self.children() {
            None => 0,
            Some((l, r)) => 1 + l.depth().max(r.depth()),
        }
    }

    /// Sum of leaf SSE below this node.
    pub fn leaf_sse(&self) -> f64 {
        match self.children() {
            None => self.stats().sse,
            Some((l, r)) => l.leaf_sse() + r.leaf_sse(),
        }
    }

    fn predict(&self, row: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { mean, .. } => return *mean,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    node = if row[*feature] < *threshold { left } else { right };
                }
            }
        }
    }

    /// Structure and thresholds only, ignoring leaf statistics.
    pub fn same_shape(&self, other: &TreeNode) -> bool {
        match (self, other) {
            (TreeNode::Leaf { .. }, TreeNode::Leaf { .. }) => true,
            (
                TreeNode::Split {
                    feature: f1,
                    threshold: t1,
                    left: l1,
                    right: r1,
                    ..
                },
                TreeNode::Split {
                    feature: f2,
                    threshold: t2,
                    left: l2,
                    right: r2,
                    ..
                },
            ) => f1 == f2 && t1 == t2 && l1.same_shape(l2) && r1.same_shape(r2),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub min_leaf: usize,
    #[serde(default)]
    pub max_depth: Option<usize>,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            min_leaf: DEFAULT_MIN_LEAF,
            max_depth: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub feature_names: Vec<String>,
    pub params: TreeParams,
    pub total_n: usize,
    pub root: TreeNode,
}

/// One edge on a root-to-node path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathStep {
    pub rule: SplitRule,
    pub went_left: bool,
    /// Statistics of the node the split was made at.
    pub parent: NodeStats,
    /// Statistics of the two children.
    pub left: NodeStats,
    pub right: NodeStats,
}

impl PathStep {
    /// True when `row` satisfies this step's condition.
    pub fn admits(&self, row: &[f64]) -> bool {
        self.rule.goes_left(row) == self.went_left
    }
}

impl RegressionTree {
    pub fn predict(&self, row: &[f64]) -> f64 {
        self.root.predict(row)
    }

    pub fn predict_matrix(&self, x: &ScoredMatrix) -> Vec<f64> {
        (0..x.n_rows()).map(|i| self.predict(x.row(i))).collect()
    }

    pub fn n_leaves(&self) -> usize {
        self.root.n_leaves()
    }

    /// Leaves left to right with the path that reaches each.
    pub fn leaf_paths(&self) -> Vec<(Vec<PathStep>, NodeStats)> {
        fn walk(node: &TreeNode, path: &mut Vec<PathStep>, out: &mut Vec<(Vec<PathStep>, NodeStats)>) {
            match node {
                TreeNode::Leaf { .. } => out.push((path.clone(), node.stats())),
                TreeNode::Split { left, right, .. } => {
                    let rule = node.rule().expect("split");
                    for (child, went_left) in [(left, true), (right, false)] {
                        path.push(PathStep {
                            rule,
                            went_left,
                            parent: node.stats(),
                            left: left.stats(),
                            right: right.stats(),
                        });
                        walk(child, path, out);
                        path.pop();
                    }
                }
            }
        }
        let mut out = Vec::new();
        walk(&self.root, &mut Vec::new(), &mut out);
        out
    }

    /// Internal nodes in preorder with their rules and children stats.
    pub fn internal_nodes(&self) -> Vec<(SplitRule, NodeStats, NodeStats, NodeStats)> {
        fn walk(node: &TreeNode, out: &mut Vec<(SplitRule, NodeStats, NodeStats, NodeStats)>) {
            if let (Some(rule), Some((l, r))) = (node.rule(), node.children()) {
                out.push((rule, node.stats(), l.stats(), r.stats()));
                walk(l, out);
                walk(r, out);
            }
        }
        let mut out = Vec::new();
        walk(&self.root, &mut out);
        out
    }

    /// Checks structural invariants: children counts add up and stats are
    /// finite.
    pub fn validate(&self) -> Result<()> {
        fn check(node: &TreeNode, m: usize) -> Result<()> {
            let s = node.stats();
            if s.n == 0 || !s.mean.is_finite() || !(s.sse >= 0.0) {
                return Err(Error::InvalidTree(format!("bad node stats {s:?}")));
            }
            if let (Some(rule), Some((l, r))) = (node.rule(), node.children()) {
                if rule.feature >= m {
                    return Err(Error::InvalidTree(format!(
                        "feature index {} out of range ({m} features)",
                        rule.feature
                    )));
                }
                if !rule.threshold.is_finite() {
                    return Err(Error::InvalidTree("non-finite threshold".into()));
                }
                if l.stats().n + r.stats().n != s.n {
                    return Err(Error::InvalidTree(format!(
                        "children counts {} + {} != {}",
                        l.stats().n,
                        r.stats().n,
                        s.n
                    )));
                }
                check(l, m)?;
                check(r, m)?;
            }
            Ok(())
        }
        if self.root.stats().n != self.total_n {
            return Err(Error::InvalidTree(format!(
                "root n {} != total_n {}",
                self.root.stats().n,
                self.total_n
            )));
        }
        check(&self.root, self.feature_names.len())
    }
}

/// Mean and within sum of squares. Values are summed in sorted order so the
/// result does not depend on row order.
pub fn node_sse(responses: &[f64]) -> Result<(f64, f64)> {
    if responses.is_empty() {
        return Err(Error::Domain("node with no responses".into()));
    }
    let mut ys = responses.to_vec();
    ys.sort_by(f64::total_cmp);
    Ok(sorted_stats(&ys))
}

fn sorted_stats(ys: &[f64]) -> (f64, f64) {
    let n = ys.len() as f64;
    let mean = ys.iter().sum::<f64>() / n;
    let sse = ys.iter().map(|y| (y - mean) * (y - mean)).sum();
    (mean, sse)
}

pub(crate) fn stats_of(x: &ScoredMatrix, rows: &[usize]) -> NodeStats {
    let mut ys: Vec<f64> = rows.iter().map(|&r| x.response[r]).collect();
    ys.sort_by(f64::total_cmp);
    let (mean, sse) = sorted_stats(&ys);
    NodeStats {
        n: rows.len(),
        mean,
        sse,
    }
}

/// Recursive growth over a multiset of row indices. `candidates` yields the
/// features to search at each node (all features for plain CART).
pub(crate) fn grow_rows(
    x: &ScoredMatrix,
    rows: Vec<usize>,
    params: &TreeParams,
    candidates: &mut dyn FnMut() -> Vec<usize>,
) -> TreeNode {
    fn build(
        x: &ScoredMatrix,
        rows: Vec<usize>,
        depth: usize,
        params: &TreeParams,
        candidates: &mut dyn FnMut() -> Vec<usize>,
    ) -> TreeNode {
        let stats = stats_of(x, &rows);
        let can_split =
            rows.len() >= 2 * params.min_leaf.max(1) && params.max_depth.is_none_or(|d| depth < d) && stats.sse > 0.0;
        if !can_split {
            return TreeNode::leaf(stats);
        }
        let features = candidates();
        let Some(best) = best_split_rows(x, &rows, &features, params.min_leaf) else {
            return TreeNode::leaf(stats);
        };
        let (left, right): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&r| best.rule.goes_left(x.row(r)));
        let l = build(x, left, depth + 1, params, candidates);
        let r = build(x, right, depth + 1, params, candidates);
        TreeNode::split(best.rule, stats, l, r)
    }
    build(x, rows, 0, params, candidates)
}

/// Grows a CART regression tree on all rows and features.
pub fn grow(x: &ScoredMatrix, params: &TreeParams) -> Result<RegressionTree> {
    let n = x.n_rows();
    if n == 0 || n < params.min_leaf {
        return Err(Error::EmptyModel(format!(
            "{n} rows cannot fill a leaf of min size {}",
            params.min_leaf
        )));
    }
    if x.n_features() == 0 {
        return Err(Error::EmptyModel("matrix has no features".into()));
    }
    let all: Vec<usize> = (0..x.n_features()).collect();
    let root = grow_rows(x, (0..n).collect(), params, &mut || all.clone());
    Ok(RegressionTree {
        feature_names: x.feature_names.clone(),
        params: *params,
        total_n: n,
        root,
    })
}
