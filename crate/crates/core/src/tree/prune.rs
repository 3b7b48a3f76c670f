//! Cost-complexity (weakest-link) pruning with k-fold cross-validation.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rescale::ScoredMatrix;
use crate::seed::{self, stream};

use super::{grow, grow_rows, RegressionTree, TreeNode, TreeParams};

/// Relative tolerance under which two link strengths are merged.
const ALPHA_EPS: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PruneRule {
    /// Penalty with the lowest mean CV error.
    #[default]
    MinCv,
    /// Largest penalty within one standard error of the minimum.
    OneSe,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvParams {
    pub k: usize,
    pub rule: PruneRule,
    pub seed: u64,
}

impl Default for CvParams {
    fn default() -> Self {
        CvParams {
            k: 10,
            rule: PruneRule::MinCv,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PruneStep {
    /// Penalty at which this subtree becomes optimal.
    pub alpha: f64,
    pub n_leaves: usize,
    pub root: TreeNode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneTrace {
    /// Collapse penalties of the full-data tree, ascending.
    pub alpha_sequence: Vec<f64>,
    /// Leaves of the subtree after each collapse.
    pub subtree_sizes: Vec<usize>,
    /// Evaluated penalties: 0 (unpruned) followed by `alpha_sequence`.
    pub candidates: Vec<f64>,
    /// `cv_mse[c][f]`: test MSE of fold `f` at candidate `c`.
    pub cv_mse: Vec<Vec<f64>>,
    pub cv_mean: Vec<f64>,
    pub cv_se: Vec<f64>,
    pub rule: PruneRule,
    pub chosen_alpha: f64,
}

/// (min link strength, all nodes) of a subtree: g(t) = (R(t) - R(T_t)) /
/// (|T_t| - 1).
fn weakest_link(node: &TreeNode) -> Option<f64> {
    let (l, r) = node.children()?;
    let g = (node.stats().sse - node.leaf_sse()) / (node.n_leaves() - 1) as f64;
    let g = g.max(0.0);
    [Some(g), weakest_link(l), weakest_link(r)]
        .into_iter()
        .flatten()
        .min_by(f64::total_cmp)
}

fn collapse_links(node: &TreeNode, limit: f64) -> TreeNode {
    match node.children() {
        None => node.clone(),
        Some((l, r)) => {
            let g = (node.stats().sse - node.leaf_sse()) / (node.n_leaves() - 1) as f64;
            if g <= limit {
                TreeNode::leaf(node.stats())
            } else {
                TreeNode::split(
                    node.rule().expect("split"),
                    node.stats(),
                    collapse_links(l, limit),
                    collapse_links(r, limit),
                )
            }
        }
    }
}

fn tolerance(alpha: f64) -> f64 {
    alpha + ALPHA_EPS * alpha.abs()
}

/// Weakest-link sequence: one step per distinct collapse penalty, ending at
/// the root leaf. Empty for a single-leaf tree.
pub fn cost_complexity_sequence(tree: &RegressionTree) -> Vec<PruneStep> {
    let mut steps: Vec<PruneStep> = Vec::new();
    let mut current = tree.root.clone();
    while let Some(g) = weakest_link(&current) {
        current = collapse_links(&current, tolerance(g));
        match steps.last_mut() {
            // rounding can leave a link marginally below the previous penalty
            Some(last) if g <= tolerance(last.alpha) => {
                last.n_leaves = current.n_leaves();
                last.root = current.clone();
            }
            _ => steps.push(PruneStep {
                alpha: g,
                n_leaves: current.n_leaves(),
                root: current.clone(),
            }),
        }
    }
    steps
}

fn prune_node(root: &TreeNode, alpha: f64) -> TreeNode {
    let mut current = root.clone();
    while let Some(g) = weakest_link(&current) {
        if g > tolerance(alpha) {
            break;
        }
        current = collapse_links(&current, tolerance(g));
    }
    current
}

/// Smallest subtree minimizing SSE + alpha * leaves.
pub fn prune_at(tree: &RegressionTree, alpha: f64) -> RegressionTree {
    RegressionTree {
        root: prune_node(&tree.root, alpha),
        ..tree.clone()
    }
}

fn mse(root: &TreeNode, x: &ScoredMatrix, rows: &[usize]) -> f64 {
    let tree_predict = |r: usize| {
        let mut node = root;
        loop {
            match node {
                TreeNode::Leaf { mean, .. } => return *mean,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => node = if x.value(r, *feature) < *threshold { left } else { right },
            }
        }
    };
    rows.iter()
        .map(|&r| (x.response[r] - tree_predict(r)).powi(2))
        .sum::<f64>()
        / rows.len() as f64
}

/// Seeded partition of `0..n` into `k` folds with sizes differing by at most 1.
pub fn fold_assignment(n: usize, k: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed::rng(seed::sub_seed(seed, stream::CV_FOLDS, 0)));
    let mut fold = vec![0; n];
    for (pos, &row) in order.iter().enumerate() {
        fold[row] = pos % k;
    }
    fold
}

/// Grows on all rows, then picks the pruning penalty by k-fold CV and
/// returns the full-data tree pruned at that penalty.
pub fn cv_prune(x: &ScoredMatrix, params: &TreeParams, cv: &CvParams) -> Result<(RegressionTree, PruneTrace)> {
    let n = x.n_rows();
    if cv.k < 2 || cv.k > n {
        return Err(Error::Config(format!(
            "cross-validation needs 2 <= k <= n (k = {}, n = {n})",
            cv.k
        )));
    }
    let full = grow(x, params)?;
    let steps = cost_complexity_sequence(&full);
    let alpha_sequence: Vec<f64> = steps.iter().map(|s| s.alpha).collect();
    let mut candidates = vec![0.0];
    candidates.extend(&alpha_sequence);

    let fold = fold_assignment(n, cv.k, cv.seed);
    let all: Vec<usize> = (0..x.n_features()).collect();
    let per_fold: Vec<Vec<f64>> = (0..cv.k)
        .into_par_iter()
        .map(|f| {
            let train: Vec<usize> = (0..n).filter(|&i| fold[i] != f).collect();
            let test: Vec<usize> = (0..n).filter(|&i| fold[i] == f).collect();
            let root = grow_rows(x, train, params, &mut || all.clone());
            candidates
                .iter()
                .map(|&a| mse(&prune_node(&root, a), x, &test))
                .collect()
        })
        .collect();

    let cv_mse: Vec<Vec<f64>> = (0..candidates.len())
        .map(|c| per_fold.iter().map(|fold| fold[c]).collect())
        .collect();
    let k = cv.k as f64;
    let cv_mean: Vec<f64> = cv_mse.iter().map(|v| v.iter().sum::<f64>() / k).collect();
    let cv_se: Vec<f64> = cv_mse
        .iter()
        .zip(&cv_mean)
        .map(|(v, m)| {
            let var = v.iter().map(|e| (e - m).powi(2)).sum::<f64>() / (k - 1.0);
            (var / k).sqrt()
        })
        .collect();

    let best = cv_mean.iter().copied().fold(f64::INFINITY, f64::min);
    let best_idx = cv_mean
        .iter()
        .rposition(|&m| m <= best + 1e-12 * best.abs())
        .expect("at least one candidate");
    let limit = match cv.rule {
        PruneRule::MinCv => best + 1e-12 * best.abs(),
        PruneRule::OneSe => best + cv_se[best_idx],
    };
    let chosen = cv_mean
        .iter()
        .rposition(|&m| m <= limit)
        .expect("best candidate qualifies");
    let chosen_alpha = candidates[chosen];

    let pruned = prune_at(&full, chosen_alpha);
    let trace = PruneTrace {
        subtree_sizes: steps.iter().map(|s| s.n_leaves).collect(),
        alpha_sequence,
        candidates,
        cv_mse,
        cv_mean,
        cv_se,
        rule: cv.rule,
        chosen_alpha,
    };
    Ok((pruned, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::tests::four_rows;
    use crate::tree::{best_split, TreeParams};
    use proptest::prelude::*;

    #[test]
    fn stump_has_one_alpha_equal_to_gain() {
        let x = four_rows();
        let t = grow(
            &x,
            &TreeParams {
                min_leaf: 2,
                max_depth: None,
            },
        )
        .unwrap();
        let steps = cost_complexity_sequence(&t);
        assert_eq!(steps.len(), 1);
        let gain = best_split(&x, 2).unwrap().gain;
        assert!((steps[0].alpha - gain).abs() < 1e-12);
        assert!(steps[0].root.is_leaf());
    }

    #[test]
    fn single_leaf_has_empty_sequence() {
        let t = grow(
            &four_rows(),
            &TreeParams {
                min_leaf: 3,
                max_depth: None,
            },
        )
        .unwrap();
        assert!(cost_complexity_sequence(&t).is_empty());
    }

    #[test]
    fn fold_sizes_are_balanced() {
        let fold = fold_assignment(23, 5, 9);
        let mut counts = [0usize; 5];
        for f in fold {
            counts[f] += 1;
        }
        assert_eq!(counts.iter().max().unwrap() - counts.iter().min().unwrap(), 1);
        assert_eq!(counts.iter().sum::<usize>(), 23);
    }

    #[test]
    fn k_out_of_range_is_config_error() {
        let x = four_rows();
        let p = TreeParams {
            min_leaf: 1,
            max_depth: None,
        };
        for k in [1, 5] {
            let cv = CvParams {
                k,
                ..CvParams::default()
            };
            assert!(matches!(cv_prune(&x, &p, &cv), Err(Error::Config(_))));
        }
    }

    fn random_tree() -> impl Strategy<Value = RegressionTree> {
        (
            proptest::collection::vec(proptest::collection::vec(0u8..10, 2), 80),
            proptest::collection::vec(-3.0..3.0f64, 80),
            1usize..6,
        )
            .prop_map(|(rows, y, min_leaf)| {
                let rows: Vec<Vec<f64>> = rows
                    .into_iter()
                    .map(|r| r.into_iter().map(f64::from).collect())
                    .collect();
                let x = ScoredMatrix::from_rows(vec!["a".into(), "b".into()], &rows, y).unwrap();
                grow(
                    &x,
                    &TreeParams {
                        min_leaf,
                        max_depth: None,
                    },
                )
                .unwrap()
            })
    }

    fn is_subtree(small: &TreeNode, big: &TreeNode) -> bool {
        match (small.children(), big.children()) {
            (None, _) => small.stats() == big.stats(),
            (Some((sl, sr)), Some((bl, br))) => small.rule() == big.rule() && is_subtree(sl, bl) && is_subtree(sr, br),
            (Some(_), None) => false,
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn sequence_is_nested_and_ascending(t in random_tree()) {
            let steps = cost_complexity_sequence(&t);
            let mut prev = &t.root;
            let mut prev_alpha = f64::NEG_INFINITY;
            for s in &steps {
                prop_assert!(s.alpha > prev_alpha);
                prop_assert!(s.n_leaves < prev.n_leaves());
                prop_assert!(is_subtree(&s.root, prev));
                prev = &s.root;
                prev_alpha = s.alpha;
            }
            if let Some(last) = steps.last() {
                prop_assert!(last.root.is_leaf());
            }
        }

        #[test]
        fn prune_at_sequence_alphas_reproduces_steps(t in random_tree()) {
            for s in cost_complexity_sequence(&t) {
                prop_assert_eq!(&prune_at(&t, s.alpha).root, &s.root);
            }
            prop_assert_eq!(prune_at(&t, 0.0).root, t.root.clone());
        }
    }
}
