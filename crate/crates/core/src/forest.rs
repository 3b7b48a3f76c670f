//! Random-forest regression with out-of-bag error and permutation importance.
//!
//! Each tree draws a bootstrap sample of the rows and, at every node, searches
//! only a fresh random subset of `mtry` features. Tree `t` takes all of its
//! randomness from `sub_seed(master, t)`, so a forest is bit-identical
//! however its trees are scheduled.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rescale::ScoredMatrix;
use crate::seed::{self, stream};
use crate::tree::{grow_rows, RegressionTree, TreeParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bootstrap {
    /// n draws with replacement.
    #[default]
    WithReplacement,
    /// Every row exactly once. Turns the forest into plain CART; for tests.
    Identity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Features tried per node; `None` means max(m / 3, 1).
    #[serde(default)]
    pub mtry: Option<usize>,
    pub min_leaf: usize,
    pub seed: u64,
    #[serde(default)]
    pub bootstrap: Bootstrap,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 2000,
            mtry: None,
            min_leaf: 5,
            seed: 0,
            bootstrap: Bootstrap::WithReplacement,
        }
    }
}

impl ForestParams {
    pub fn mtry_for(&self, m: usize) -> usize {
        self.mtry.unwrap_or((m / 3).max(1))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestTree {
    pub tree: RegressionTree,
    /// How many times each training row was drawn.
    pub in_bag: Vec<u32>,
}

impl ForestTree {
    pub fn oob_rows(&self) -> Vec<usize> {
        (0..self.in_bag.len()).filter(|&i| self.in_bag[i] == 0).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    pub trees: Vec<ForestTree>,
    pub params: ForestParams,
    pub feature_names: Vec<String>,
}

fn grow_one(x: &ScoredMatrix, params: &ForestParams, mtry: usize, index: usize) -> ForestTree {
    let n = x.n_rows();
    let m = x.n_features();
    let mut rng = seed::rng(seed::sub_seed(params.seed, stream::FOREST_TREE, index as u64));
    let mut rows: Vec<usize> = match params.bootstrap {
        Bootstrap::Identity => (0..n).collect(),
        Bootstrap::WithReplacement => (0..n).map(|_| rng.random_range(0..n)).collect(),
    };
    rows.sort_unstable();
    let mut in_bag = vec![0u32; n];
    for &r in &rows {
        in_bag[r] += 1;
    }
    let tree_params = TreeParams {
        min_leaf: params.min_leaf,
        max_depth: None,
    };
    let mut pick = || {
        let mut f = rand::seq::index::sample(&mut rng, m, mtry).into_vec();
        f.sort_unstable();
        f
    };
    let root = grow_rows(x, rows, &tree_params, &mut pick);
    ForestTree {
        tree: RegressionTree {
            feature_names: x.feature_names.clone(),
            params: tree_params,
            total_n: n,
            root,
        },
        in_bag,
    }
}

pub fn grow_forest(x: &ScoredMatrix, params: &ForestParams) -> Result<Forest> {
    let n = x.n_rows();
    let m = x.n_features();
    if m == 0 {
        return Err(Error::Config("forest needs at least one feature".into()));
    }
    let mtry = params.mtry_for(m);
    if mtry == 0 || mtry > m {
        return Err(Error::Config(format!("mtry must be in 1..={m}, got {mtry}")));
    }
    if params.n_trees == 0 {
        return Err(Error::Config("n_trees must be at least 1".into()));
    }
    if n < 2 * params.min_leaf.max(1) {
        return Err(Error::EmptyModel(format!(
            "{n} rows are fewer than twice the forest min_leaf {}",
            params.min_leaf
        )));
    }
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| grow_one(x, params, mtry, t))
        .collect();
    Ok(Forest {
        trees,
        params: *params,
        feature_names: x.feature_names.clone(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OobPrediction {
    /// `None` for rows drawn into every bootstrap sample.
    pub predictions: Vec<Option<f64>>,
    pub oob_mse: f64,
    pub n_scored: usize,
}

/// Averages, for every row, only the trees that did not see it.
pub fn oob_predict(forest: &Forest, x: &ScoredMatrix) -> OobPrediction {
    let n = x.n_rows();
    let mut sum = vec![0.0; n];
    let mut count = vec![0usize; n];
    for t in &forest.trees {
        for r in t.oob_rows() {
            sum[r] += t.tree.predict(x.row(r));
            count[r] += 1;
        }
    }
    let predictions: Vec<Option<f64>> = (0..n)
        .map(|i| (count[i] > 0).then(|| sum[i] / count[i] as f64))
        .collect();
    let scored: Vec<f64> = predictions
        .iter()
        .zip(&x.response)
        .filter_map(|(p, y)| p.map(|p| (y - p).powi(2)))
        .collect();
    let n_scored = scored.len();
    let oob_mse = if n_scored == 0 {
        0.0
    } else {
        scored.iter().sum::<f64>() / n_scored as f64
    };
    OobPrediction {
        predictions,
        oob_mse,
        n_scored,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    pub feature: String,
    /// 100 * raw_delta / forest OOB MSE.
    pub pct_inc_mse: f64,
    /// Mean over trees of (permuted OOB MSE - OOB MSE).
    pub raw_delta: f64,
    /// Standard error of `raw_delta` across trees.
    pub std_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport {
    pub features: Vec<FeatureImportance>,
    pub oob_mse: f64,
    pub trees_used: usize,
}

impl ImportanceReport {
    /// Report holding only percentages, e.g. published values.
    pub fn from_percentages(values: &[(&str, f64)]) -> Self {
        ImportanceReport {
            features: values
                .iter()
                .map(|(name, pct)| FeatureImportance {
                    feature: name.to_string(),
                    pct_inc_mse: *pct,
                    raw_delta: f64::NAN,
                    std_err: f64::NAN,
                })
                .collect(),
            oob_mse: f64::NAN,
            trees_used: 0,
        }
    }

    pub fn get(&self, feature: &str) -> Option<&FeatureImportance> {
        self.features.iter().find(|f| f.feature == feature)
    }

    /// Features by descending %IncMSE.
    pub fn ranking(&self) -> Vec<&FeatureImportance> {
        let mut v: Vec<&FeatureImportance> = self.features.iter().collect();
        v.sort_by(|a, b| b.pct_inc_mse.total_cmp(&a.pct_inc_mse));
        v
    }

    /// CSV columns: feature, pct_inc_mse, raw_delta, std_err.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["feature", "pct_inc_mse", "raw_delta", "std_err"])?;
        for f in &self.features {
            w.write_record([
                f.feature.clone(),
                f.pct_inc_mse.to_string(),
                f.raw_delta.to_string(),
                f.std_err.to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<importance>", e))?;
        Ok(())
    }
}

fn tree_deltas(t: &ForestTree, x: &ScoredMatrix, index: usize, seed: u64) -> Option<Vec<f64>> {
    let oob = t.oob_rows();
    if oob.is_empty() {
        return None;
    }
    let m = x.n_features();
    let k = oob.len() as f64;
    let base: f64 = oob
        .iter()
        .map(|&r| (x.response[r] - t.tree.predict(x.row(r))).powi(2))
        .sum::<f64>()
        / k;
    let tree_seed = seed::sub_seed(seed, stream::PERMUTATION, index as u64);
    let mut row = vec![0.0; m];
    let deltas = (0..m)
        .map(|j| {
            let mut perm = oob.clone();
            perm.shuffle(&mut seed::rng(seed::sub_seed(tree_seed, stream::PERMUTATION, j as u64)));
            let permuted: f64 = oob
                .iter()
                .zip(&perm)
                .map(|(&r, &donor)| {
                    row.copy_from_slice(x.row(r));
                    row[j] = x.value(donor, j);
                    (x.response[r] - t.tree.predict(&row)).powi(2)
                })
                .sum::<f64>()
                / k;
            permuted - base
        })
        .collect();
    Some(deltas)
}

/// Permutation importance over each tree's out-of-bag rows.
pub fn permutation_importance(forest: &Forest, x: &ScoredMatrix, seed: u64) -> Result<ImportanceReport> {
    let m = x.n_features();
    if forest.feature_names.len() != m || forest.trees.iter().any(|t| t.in_bag.len() != x.n_rows()) {
        return Err(Error::Domain("forest was not trained on this matrix".into()));
    }
    let per_tree: Vec<Vec<f64>> = forest
        .trees
        .par_iter()
        .enumerate()
        .map(|(i, t)| tree_deltas(t, x, i, seed))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    let used = per_tree.len();
    let oob_mse = oob_predict(forest, x).oob_mse;
    let features = (0..m)
        .map(|j| {
            let d: Vec<f64> = per_tree.iter().map(|v| v[j]).collect();
            let (mean, se) = if used == 0 {
                (0.0, 0.0)
            } else {
                let mean = d.iter().sum::<f64>() / used as f64;
                let se = if used > 1 {
                    let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (used - 1) as f64;
                    (var / used as f64).sqrt()
                } else {
                    0.0
                };
                (mean, se)
            };
            let pct = if oob_mse > 0.0 {
                100.0 * mean / oob_mse
            } else if mean == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
            FeatureImportance {
                feature: x.feature_names[j].clone(),
                pct_inc_mse: pct,
                raw_delta: mean,
                std_err: se,
            }
        })
        .collect();
    Ok(ImportanceReport {
        features,
        oob_mse,
        trees_used: used,
    })
}
