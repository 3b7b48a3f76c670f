//! Reading a pruned tree: extreme-leaf paths, alignment verdicts and the
//! comparison tables around them.

mod compare;
mod stats;
pub mod study;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::tree::{extreme_leaf_indices, NodeStats, PathStep, RegressionTree};

pub use compare::{group_comparison, ComparisonRow, ComparisonVariable, GroupComparison, LowerRisk};
pub use stats::{kolmogorov_q, ks_statistic, ks_two_sample, pearson, stars, KsResult, PearsonResult};
pub use study::{
    describe_panel, load_configured_panel, panel_selection, run_study, study_panel, study_subsamples,
    write_summary_csv, StudyReport, SubsampleOutcome, SubsampleStatus, TreeOutcome,
};

/// Root-to-leaf chain of split conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeafPath {
    /// Position of the leaf in left-to-right order.
    pub leaf_index: usize,
    pub steps: Vec<PathStep>,
    pub leaf: NodeStats,
    /// Fraction of the training rows that reach the leaf.
    pub share: f64,
}

impl LeafPath {
    /// True when `row` satisfies every condition on the path.
    pub fn admits(&self, row: &[f64]) -> bool {
        self.steps.iter().all(|s| s.admits(row))
    }

    /// `C<1.986, S<3.140, L>=2.446` style rendering.
    pub fn describe(&self, names: &[String]) -> String {
        if self.steps.is_empty() {
            return "(root)".into();
        }
        self.steps
            .iter()
            .map(|s| {
                let op = if s.went_left { "<" } else { ">=" };
                format!("{}{op}{:.3}", names[s.rule.feature], s.rule.threshold)
            })
            .collect::<Vec<_>>()
            .join(", ")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremePaths {
    pub min: LeafPath,
    pub max: LeafPath,
}

fn leaf_path(tree: &RegressionTree, index: usize) -> LeafPath {
    let (steps, leaf) = tree.leaf_paths().into_iter().nth(index).expect("leaf index in range");
    LeafPath {
        leaf_index: index,
        steps,
        leaf,
        share: leaf.n as f64 / tree.total_n as f64,
    }
}

/// Paths to the leaves with the lowest and highest mean response. Ties go to
/// the larger leaf, then the leftmost.
pub fn extreme_leaves(tree: &RegressionTree) -> ExtremePaths {
    let (lo, hi) = extreme_leaf_indices(tree);
    ExtremePaths {
        min: leaf_path(tree, lo),
        max: leaf_path(tree, hi),
    }
}

/// Fraction of training rows reaching leaf `leaf_index` (left-to-right).
pub fn leaf_share(tree: &RegressionTree, leaf_index: usize) -> Option<f64> {
    let paths = tree.leaf_paths();
    paths.get(leaf_index).map(|(_, s)| s.n as f64 / tree.total_n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// The low-risk side carries the higher mean charter value.
    Aligned,
    Misaligned,
    NoEvidence,
    /// Nodes on the same factor point both ways.
    Ambiguous,
}

impl Verdict {
    pub fn label(self) -> &'static str {
        match self {
            Verdict::Aligned => "Yes",
            Verdict::Misaligned => "No",
            Verdict::NoEvidence => "–",
            Verdict::Ambiguous => "Ambig",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictScope {
    /// Only nodes on the Q^Min and Q^Max paths.
    #[default]
    Paths,
    AllNodes,
}

/// One split used as evidence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub threshold: f64,
    pub n: usize,
    /// Mean response of the `< threshold` child.
    pub low_risk_mean: f64,
    pub high_risk_mean: f64,
}

impl Evidence {
    pub fn aligned(&self) -> bool {
        self.low_risk_mean > self.high_risk_mean
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorVerdict {
    pub factor: String,
    pub verdict: Verdict,
    pub nodes: Vec<Evidence>,
}

fn path_nodes(paths: &ExtremePaths) -> Vec<(usize, Evidence)> {
    let mut seen: Vec<Vec<bool>> = Vec::new();
    let mut out = Vec::new();
    for path in [&paths.min, &paths.max] {
        for (i, s) in path.steps.iter().enumerate() {
            let key: Vec<bool> = path.steps[..i].iter().map(|p| p.went_left).collect();
            if seen.contains(&key) {
                continue;
            }
            seen.push(key);
            out.push((
                s.rule.feature,
                Evidence {
                    threshold: s.rule.threshold,
                    n: s.parent.n,
                    low_risk_mean: s.left.mean,
                    high_risk_mean: s.right.mean,
                },
            ));
        }
    }
    out
}

/// Verdict for every feature of the tree. Features are risk-increasing
/// scores, so the `< threshold` child is the low-risk side; each split on a
/// feature compares the two children's mean response.
pub fn alignment_verdicts(tree: &RegressionTree, paths: &ExtremePaths, scope: VerdictScope) -> Vec<FactorVerdict> {
    let nodes: Vec<(usize, Evidence)> = match scope {
        VerdictScope::Paths => path_nodes(paths),
        VerdictScope::AllNodes => tree
            .internal_nodes()
            .into_iter()
            .map(|(rule, parent, l, r)| {
                (
                    rule.feature,
                    Evidence {
                        threshold: rule.threshold,
                        n: parent.n,
                        low_risk_mean: l.mean,
                        high_risk_mean: r.mean,
                    },
                )
            })
            .collect(),
    };
    tree.feature_names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let ev: Vec<Evidence> = nodes.iter().filter(|(f, _)| *f == j).map(|(_, e)| *e).collect();
            let verdict = match (ev.iter().any(Evidence::aligned), ev.iter().any(|e| !e.aligned())) {
                (false, false) => Verdict::NoEvidence,
                (true, false) => Verdict::Aligned,
                (false, true) => Verdict::Misaligned,
                (true, true) => Verdict::Ambiguous,
            };
            FactorVerdict {
                factor: name.clone(),
                verdict,
                nodes: ev,
            }
        })
        .collect()
}

/// Labels in the order of `factors`; factors the tree lacks read "–".
pub fn verdict_row(verdicts: &[FactorVerdict], factors: &[&str]) -> Vec<&'static str> {
    factors
        .iter()
        .map(|f| {
            verdicts
                .iter()
                .find(|v| v.factor == *f)
                .map_or(Verdict::NoEvidence.label(), |v| v.verdict.label())
        })
        .collect()
}
