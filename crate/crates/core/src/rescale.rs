//! One-to-five supervisory rescaling of the raw proxies.
//!
//! Every rescaled column is oriented so that 1 is the lowest and 5 the
//! highest risk. Two procedures exist: a quartile-knot piecewise-linear map
//! and a threshold map that reserves [1, 2] for values on the sound side of a
//! cutoff and spreads (2, 5] over the rest.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dataset::{compute_raw_proxies, Panel, RawField, RawProxies};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Larger raw values mean more risk.
    #[serde(alias = "increasing")]
    IncreasingInRisk,
    /// Larger raw values mean less risk.
    #[serde(alias = "decreasing")]
    DecreasingInRisk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Quantile,
    Threshold,
}

/// CAMELS risk factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Group {
    C,
    A,
    M,
    E,
    L,
    S,
}

impl Group {
    pub const ALL: [Group; 6] = [Group::C, Group::A, Group::M, Group::E, Group::L, Group::S];

    pub fn letter(self) -> &'static str {
        match self {
            Group::C => "C",
            Group::A => "A",
            Group::M => "M",
            Group::E => "E",
            Group::L => "L",
            Group::S => "S",
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.letter())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProxySpec {
    pub name: String,
    pub group: Group,
    pub raw_field: RawField,
    pub direction: Direction,
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
}

impl ProxySpec {
    fn new(name: &str, group: Group, raw_field: RawField, direction: Direction) -> Self {
        ProxySpec {
            name: name.into(),
            group,
            raw_field,
            direction,
            mode: Mode::Quantile,
            threshold: None,
        }
    }

    fn with_threshold(mut self, u: f64) -> Self {
        self.mode = Mode::Threshold;
        self.threshold = Some(u);
        self
    }

    pub fn validate(&self) -> Result<()> {
        match (self.mode, self.threshold) {
            (Mode::Threshold, Some(u)) if u.is_finite() => Ok(()),
            (Mode::Threshold, _) => Err(Error::Config(format!(
                "proxy {}: threshold mode needs a finite threshold",
                self.name
            ))),
            (Mode::Quantile, None) => Ok(()),
            (Mode::Quantile, Some(_)) => Err(Error::Config(format!(
                "proxy {}: threshold given for quantile mode",
                self.name
            ))),
        }
    }

    /// Fits the score map of this proxy on `values`.
    pub fn fit(&self, values: &[f64]) -> Result<ScoreMap> {
        self.validate()?;
        Ok(match self.mode {
            Mode::Quantile => ScoreMap::quantile(values, self.direction),
            Mode::Threshold => ScoreMap::threshold(values, self.direction, self.threshold.expect("validated")),
        })
    }
}

/// The full candidate catalog with its default directions and cutoffs.
pub fn default_catalog() -> Vec<ProxySpec> {
    use Direction::*;
    use Group::*;
    use RawField::*;
    vec![
        ProxySpec::new("Capt", C, CapitalRatio, DecreasingInRisk),
        ProxySpec::new("Capt_x", C, CapitalRatio, DecreasingInRisk).with_threshold(0.06),
        ProxySpec::new("Asts", A, AllowancesToLoans, IncreasingInRisk),
        ProxySpec::new("Asts_x", A, AllowancesToLoans, IncreasingInRisk).with_threshold(0.015),
        ProxySpec::new("Asts'", A, ProvisionsToLoans, IncreasingInRisk),
        ProxySpec::new("Asts'_x", A, ProvisionsToLoans, IncreasingInRisk).with_threshold(0.01),
        ProxySpec::new("Mang", M, GrowthGap, DecreasingInRisk),
        ProxySpec::new("Mang'", M, CostIncome, IncreasingInRisk),
        ProxySpec::new("Mang''", M, ExpenseToAssets, IncreasingInRisk),
        ProxySpec::new("Mang'_x", M, CostIncome, IncreasingInRisk).with_threshold(0.7),
        ProxySpec::new("Ergs", E, Roa, DecreasingInRisk),
        ProxySpec::new("Ergs'", E, Roe, DecreasingInRisk),
        ProxySpec::new("Ergs_x", E, Roa, DecreasingInRisk).with_threshold(0.01),
        ProxySpec::new("Ergs'_x", E, Roe, DecreasingInRisk).with_threshold(0.15),
        ProxySpec::new("Liqt", L, LoansToDeposits, IncreasingInRisk),
        ProxySpec::new("Liqt_x", L, LoansToDeposits, IncreasingInRisk).with_threshold(0.8),
        ProxySpec::new("Liqt'", L, LiquidToAssets, DecreasingInRisk),
        ProxySpec::new("Syst", S, Beta, IncreasingInRisk),
    ]
}

/// The six proxies the study uses when selection is fixed.
pub const DEFAULT_SELECTION: [&str; 6] = ["Capt", "Asts", "Mang", "Ergs_x", "Liqt_x", "Syst"];

/// Quartile with linear interpolation between order statistics of a sorted
/// slice.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    if lo + 1 >= n {
        return sorted[n - 1];
    }
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
}

/// A fitted one-to-five map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ScoreMap {
    /// Every value scores 3.
    Constant,
    /// Knots at min, Q1, median, Q3, max.
    Quantile { knots: [f64; 5], direction: Direction },
    Threshold {
        min: f64,
        cutoff: f64,
        max: f64,
        direction: Direction,
    },
}

impl ScoreMap {
    pub fn quantile(values: &[f64], direction: Direction) -> ScoreMap {
        let mut sorted: Vec<f64> = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        match (sorted.first(), sorted.last()) {
            (Some(lo), Some(hi)) if lo < hi => {
                let knots = [0.0, 0.25, 0.5, 0.75, 1.0].map(|p| quantile_sorted(&sorted, p));
                ScoreMap::Quantile { knots, direction }
            }
            _ => ScoreMap::Constant,
        }
    }

    pub fn threshold(values: &[f64], direction: Direction, cutoff: f64) -> ScoreMap {
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if values.is_empty() || min == max {
            return ScoreMap::Constant;
        }
        ScoreMap::Threshold {
            min,
            cutoff,
            max,
            direction,
        }
    }

    pub fn apply(&self, v: f64) -> f64 {
        let s = match *self {
            ScoreMap::Constant => 3.0,
            ScoreMap::Quantile { knots, direction } => {
                let up = quantile_score(&knots, v);
                match direction {
                    Direction::IncreasingInRisk => up,
                    Direction::DecreasingInRisk => 6.0 - up,
                }
            }
            ScoreMap::Threshold {
                min,
                cutoff,
                max,
                direction,
            } => threshold_score(min, cutoff, max, direction, v),
        };
        s.clamp(1.0, 5.0)
    }
}

/// Increasing-in-risk score through the five knots. A value is placed in the
/// highest segment whose left knot it reaches; zero-width segments score
/// their upper bound.
fn quantile_score(knots: &[f64; 5], v: f64) -> f64 {
    let k = (0..4).rev().find(|&k| knots[k] <= v).unwrap_or(0);
    let (a, b) = (knots[k], knots[k + 1]);
    if b > a {
        1.0 + k as f64 + ((v - a) / (b - a)).clamp(0.0, 1.0)
    } else {
        2.0 + k as f64
    }
}

/// Linear piece from `[lo, hi]` onto `[s_lo, s_hi]`; zero width scores
/// `upper`.
fn piece(v: f64, lo: f64, hi: f64, s_lo: f64, s_hi: f64, upper: f64) -> f64 {
    if hi > lo {
        s_lo + (s_hi - s_lo) * ((v - lo) / (hi - lo))
    } else {
        upper
    }
}

fn threshold_score(min: f64, u: f64, max: f64, direction: Direction, v: f64) -> f64 {
    match direction {
        Direction::IncreasingInRisk => {
            if v <= u {
                // min -> 1, u -> 2
                piece(v, min, u, 1.0, 2.0, 2.0)
            } else {
                // u+ -> 2, max -> 5
                piece(v, u, max, 2.0, 5.0, 5.0)
            }
        }
        Direction::DecreasingInRisk => {
            if v >= u {
                // u -> 2, max -> 1
                piece(v, u, max, 2.0, 1.0, 2.0)
            } else {
                // min -> 5, u- -> 2
                piece(v, min, u, 5.0, 2.0, 5.0)
            }
        }
    }
}

pub fn quantile_rescale(values: &[f64], direction: Direction) -> Vec<f64> {
    let map = ScoreMap::quantile(values, direction);
    values.iter().map(|&v| map.apply(v)).collect()
}

pub fn threshold_rescale(values: &[f64], direction: Direction, cutoff: f64) -> Vec<f64> {
    let map = ScoreMap::threshold(values, direction, cutoff);
    values.iter().map(|&v| map.apply(v)).collect()
}

/// Rescaled predictors plus the Tobin's Q response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredMatrix {
    pub feature_names: Vec<String>,
    /// Row-major, `n_rows * n_features`.
    scores: Vec<f64>,
    pub response: Vec<f64>,
    /// Index of each row in the source panel.
    pub row_ids: Vec<usize>,
}

impl ScoredMatrix {
    /// Builds a matrix from row-major feature values.
    pub fn new(feature_names: Vec<String>, scores: Vec<f64>, response: Vec<f64>, row_ids: Vec<usize>) -> Result<Self> {
        let m = feature_names.len();
        let n = response.len();
        if scores.len() != n * m || row_ids.len() != n {
            return Err(Error::Domain(format!(
                "matrix shape mismatch: {} scores for {n} rows x {m} features, {} row ids",
                scores.len(),
                row_ids.len()
            )));
        }
        Ok(ScoredMatrix {
            feature_names,
            scores,
            response,
            row_ids,
        })
    }

    pub fn from_rows(feature_names: Vec<String>, rows: &[Vec<f64>], response: Vec<f64>) -> Result<Self> {
        let scores = rows.iter().flatten().copied().collect();
        let ids = (0..response.len()).collect();
        Self::new(feature_names, scores, response, ids)
    }

    pub fn n_rows(&self) -> usize {
        self.response.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn value(&self, row: usize, feature: usize) -> f64 {
        self.scores[row * self.n_features() + feature]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        let m = self.n_features();
        &self.scores[row * m..(row + 1) * m]
    }

    pub fn column(&self, feature: usize) -> Vec<f64> {
        (0..self.n_rows()).map(|i| self.value(i, feature)).collect()
    }

    /// Sub-matrix of the given rows (in order, duplicates allowed).
    pub fn select_rows(&self, rows: &[usize]) -> ScoredMatrix {
        let m = self.n_features();
        let mut scores = Vec::with_capacity(rows.len() * m);
        for &r in rows {
            scores.extend_from_slice(self.row(r));
        }
        ScoredMatrix {
            feature_names: self.feature_names.clone(),
            scores,
            response: rows.iter().map(|&r| self.response[r]).collect(),
            row_ids: rows.iter().map(|&r| self.row_ids[r]).collect(),
        }
    }

    /// Replaces the response vector (same length).
    pub fn with_response(mut self, response: Vec<f64>) -> Result<Self> {
        if response.len() != self.n_rows() {
            return Err(Error::Domain("response length mismatch".into()));
        }
        self.response = response;
        Ok(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RescaleScope {
    /// Fit score maps on the full panel and apply them to each subsample.
    Full,
    /// Refit score maps within each subsample.
    #[default]
    Subsample,
}

#[derive(Debug, Clone)]
pub struct ScoredBuild {
    pub matrix: ScoredMatrix,
    pub raw: RawProxies,
    pub maps: Vec<ScoreMap>,
}

fn raw_fields(specs: &[ProxySpec]) -> Vec<RawField> {
    let mut fields: Vec<RawField> = specs.iter().map(|s| s.raw_field).collect();
    fields.sort();
    fields.dedup();
    fields
}

/// Rescales the proxies of `panel` in spec order. With `reference`, score
/// maps are fitted on the reference panel instead of `panel` itself.
pub fn build_scored_matrix(panel: &Panel, specs: &[ProxySpec], reference: Option<&Panel>) -> Result<ScoredBuild> {
    if specs.is_empty() {
        return Err(Error::Config("no proxy specs given".into()));
    }
    for s in specs {
        s.validate()?;
    }
    if panel.is_empty() {
        return Err(Error::EmptySubsample("panel has no rows".into()));
    }
    let fields = raw_fields(specs);
    let raw = compute_raw_proxies(panel, &fields);
    if raw.rows.is_empty() {
        return Err(Error::EmptySubsample("no row has every active proxy available".into()));
    }
    let fit_rows = match reference {
        Some(r) => compute_raw_proxies(r, &fields).rows,
        None => raw.rows.clone(),
    };
    let mut maps = Vec::with_capacity(specs.len());
    for s in specs {
        let values: Vec<f64> = fit_rows
            .iter()
            .map(|r| r.get(s.raw_field).expect("active field present"))
            .collect();
        maps.push(s.fit(&values)?);
    }
    let n = raw.rows.len();
    let m = specs.len();
    let mut scores = Vec::with_capacity(n * m);
    for r in &raw.rows {
        for (s, map) in specs.iter().zip(&maps) {
            scores.push(map.apply(r.get(s.raw_field).expect("active field present")));
        }
    }
    let matrix = ScoredMatrix::new(
        specs.iter().map(|s| s.name.clone()).collect(),
        scores,
        raw.rows.iter().map(|r| r.q).collect(),
        raw.rows.iter().map(|r| r.row).collect(),
    )?;
    Ok(ScoredBuild { matrix, raw, maps })
}

/// Looks up proxies by name in a catalog, keeping the requested order.
pub fn specs_by_name(catalog: &[ProxySpec], names: &[String]) -> Result<Vec<ProxySpec>> {
    names
        .iter()
        .map(|n| {
            catalog
                .iter()
                .find(|s| &s.name == n)
                .cloned()
                .ok_or_else(|| Error::Config(format!("unknown proxy `{n}`")))
        })
        .collect()
}
