//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Each exported function takes plain strings and numbers and returns a JSON
//! document. The `*_json` functions hold the logic and run natively too.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use cvtree::analysis::{alignment_verdicts, extreme_leaves, ks_two_sample, stars, verdict_row, VerdictScope};
use cvtree::rescale::{Direction, ScoreMap};
use cvtree::synth::{planted_matrix, PlantedMatrixSpec, PlantedNode};
use cvtree::tree::{cv_prune, export_dot, CvParams, PruneRule, TreeNode, TreeParams};

const FEATURES: [&str; 5] = ["C", "A", "M", "E", "L"];

/// Numbers separated by commas, semicolons or whitespace.
pub fn parse_values(text: &str) -> Result<Vec<f64>, String> {
    let values = text
        .split(|c: char| c == ',' || c == ';' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| format!("not a number: {t:?}")))
        .collect::<Result<Vec<f64>, String>>()?;
    if values.is_empty() {
        return Err("enter at least one value".into());
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(format!("values must be finite, got {v}"));
    }
    Ok(values)
}

fn direction(name: &str) -> Result<Direction, String> {
    match name {
        "increasing" => Ok(Direction::IncreasingInRisk),
        "decreasing" => Ok(Direction::DecreasingInRisk),
        other => Err(format!("direction must be increasing or decreasing, got {other:?}")),
    }
}

/// Score of every input value plus a dense curve across the observed range.
/// A finite `cutoff` selects the threshold map, otherwise quartile knots.
pub fn rescale_curve_json(values: &str, dir: &str, cutoff: Option<f64>) -> Result<String, String> {
    let values = parse_values(values)?;
    let d = direction(dir)?;
    let map = match cutoff.filter(|c| c.is_finite()) {
        Some(u) => ScoreMap::threshold(&values, d, u),
        None => ScoreMap::quantile(&values, d),
    };
    let mut sorted = values.clone();
    sorted.sort_by(f64::total_cmp);
    let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
    let curve: Vec<[f64; 2]> = (0..=200)
        .map(|i| {
            let x = lo + (hi - lo) * i as f64 / 200.0;
            [x, map.apply(x)]
        })
        .collect();
    let points: Vec<[f64; 2]> = values.iter().map(|&v| [v, map.apply(v)]).collect();
    let knots: Vec<[f64; 2]> = match map {
        ScoreMap::Quantile { knots, .. } => knots.iter().map(|&k| [k, map.apply(k)]).collect(),
        ScoreMap::Threshold { cutoff, .. } if (lo..=hi).contains(&cutoff) => vec![[cutoff, map.apply(cutoff)]],
        _ => Vec::new(),
    };
    Ok(json!({ "points": points, "curve": curve, "knots": knots }).to_string())
}

fn outline(node: &TreeNode, depth: usize, lines: &mut Vec<String>) {
    let pad = "  ".repeat(depth);
    let s = node.stats();
    match (node.rule(), node.children()) {
        (Some(rule), Some((l, r))) => {
            let name = FEATURES[rule.feature];
            lines.push(format!("{pad}{name} < {:.3}", rule.threshold));
            outline(l, depth + 1, lines);
            lines.push(format!("{pad}{name} >= {:.3}", rule.threshold));
            outline(r, depth + 1, lines);
        }
        _ => lines.push(format!("{pad}leaf: mean {:.3}, n {}", s.mean, s.n)),
    }
}

/// Grows and prunes a tree on synthetic scores with a planted three-split
/// structure (C at the root, A and M below, leaf means 0, 1, 2, 3).
pub fn grow_planted_json(n: usize, sigma: f64, seed: u64, min_leaf: usize, rule: &str) -> Result<String, String> {
    if !(20..=20_000).contains(&n) {
        return Err("n must be between 20 and 20000".into());
    }
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err("noise must be a non-negative number".into());
    }
    let rule = match rule {
        "min-cv" => PruneRule::MinCv,
        "one-se" => PruneRule::OneSe,
        other => return Err(format!("rule must be min-cv or one-se, got {other:?}")),
    };
    let spec = PlantedMatrixSpec {
        root: PlantedNode::split(
            0,
            3.125,
            PlantedNode::split(1, 2.375, PlantedNode::leaf(0.0), PlantedNode::leaf(1.0)),
            PlantedNode::split(2, 3.875, PlantedNode::leaf(2.0), PlantedNode::leaf(3.0)),
        ),
        n_features: FEATURES.len(),
        grid_step: 0.25,
    };
    let mut x = planted_matrix(&spec, n, sigma, seed);
    x.feature_names = FEATURES.iter().map(|s| s.to_string()).collect();
    let params = TreeParams {
        min_leaf: min_leaf.max(1),
        max_depth: None,
    };
    let (tree, trace) = cv_prune(&x, &params, &CvParams { k: 10, rule, seed }).map_err(|e| e.to_string())?;
    let paths = extreme_leaves(&tree);
    let verdicts = alignment_verdicts(&tree, &paths, VerdictScope::Paths);
    let mut lines = Vec::new();
    outline(&tree.root, 0, &mut lines);
    let leaf = |p: &cvtree::analysis::LeafPath| json!({ "mean": p.leaf.mean, "n": p.leaf.n, "path": p.describe(&tree.feature_names) });
    let out: Value = json!({
        "leaves": tree.n_leaves(),
        "outline": lines,
        "dot": export_dot(&tree, None),
        "qmin": leaf(&paths.min),
        "qmax": leaf(&paths.max),
        "verdicts": FEATURES.iter().zip(verdict_row(&verdicts, &FEATURES)).map(|(f, v)| json!([f, v])).collect::<Vec<_>>(),
        "pruning": {
            "alphas": trace.candidates,
            "cv_mean": trace.cv_mean,
            "cv_se": trace.cv_se,
            "chosen": trace.chosen_alpha,
        },
    });
    Ok(out.to_string())
}

fn ecdf(values: &[f64]) -> Vec<[f64; 2]> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut out: Vec<[f64; 2]> = Vec::new();
    for (i, x) in v.iter().enumerate() {
        let f = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last[0] == *x => last[1] = f,
            _ => out.push([*x, f]),
        }
    }
    out
}

/// Two-sample KS test with both empirical CDFs as step points.
pub fn ks_test_json(a: &str, b: &str) -> Result<String, String> {
    let (a, b) = (parse_values(a)?, parse_values(b)?);
    let r = ks_two_sample(&a, &b).map_err(|e| e.to_string())?;
    Ok(json!({
        "d": r.d,
        "p": r.p,
        "stars": stars(r.p),
        "ecdf_a": ecdf(&a),
        "ecdf_b": ecdf(&b),
    })
    .to_string())
}

fn js(r: Result<String, String>) -> Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn rescale_curve(values: &str, direction: &str, cutoff: Option<f64>) -> Result<String, JsValue> {
    js(rescale_curve_json(values, direction, cutoff))
}

#[wasm_bindgen]
pub fn grow_planted(n: u32, sigma: f64, seed: u32, min_leaf: u32, rule: &str) -> Result<String, JsValue> {
    js(grow_planted_json(
        n as usize,
        sigma,
        seed as u64,
        min_leaf as usize,
        rule,
    ))
}

#[wasm_bindgen]
pub fn ks_test(a: &str, b: &str) -> Result<String, JsValue> {
    js(ks_test_json(a, b))
}
