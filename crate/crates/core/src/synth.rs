//! Synthetic data with a planted tree structure, used as a recovery oracle.

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::{BankYear, Panel, RawField, Window};
use crate::error::{Error, Result};
use crate::rescale::ScoredMatrix;
use crate::seed::{self, stream};

/// A planted partition: splits send `value < threshold` left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PlantedNode<F> {
    Leaf {
        mean: f64,
    },
    Split {
        feature: F,
        threshold: f64,
        left: Box<PlantedNode<F>>,
        right: Box<PlantedNode<F>>,
    },
}

impl<F: Copy> PlantedNode<F> {
    pub fn split(feature: F, threshold: f64, left: PlantedNode<F>, right: PlantedNode<F>) -> Self {
        PlantedNode::Split {
            feature,
            threshold,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    pub fn leaf(mean: f64) -> Self {
        PlantedNode::Leaf { mean }
    }

    pub fn evaluate(&self, value: impl Fn(F) -> f64) -> f64 {
        let mut node = self;
        loop {
            match node {
                PlantedNode::Leaf { mean } => return *mean,
                PlantedNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => node = if value(*feature) < *threshold { left } else { right },
            }
        }
    }

    pub fn n_splits(&self) -> usize {
        match self {
            PlantedNode::Leaf { .. } => 0,
            PlantedNode::Split { left, right, .. } => 1 + left.n_splits() + right.n_splits(),
        }
    }

    pub fn leaf_means(&self) -> Vec<f64> {
        match self {
            PlantedNode::Leaf { mean } => vec![*mean],
            PlantedNode::Split { left, right, .. } => {
                let mut v = left.leaf_means();
                v.extend(right.leaf_means());
                v
            }
        }
    }
}

/// Planted tree over a matrix of one-to-five scores laid on a regular grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedMatrixSpec {
    pub root: PlantedNode<usize>,
    pub n_features: usize,
    /// Spacing of the feature grid on [1, 5].
    pub grid_step: f64,
}

impl PlantedMatrixSpec {
    pub fn grid(&self) -> Vec<f64> {
        let steps = (4.0 / self.grid_step).round() as usize;
        (0..=steps).map(|k| 1.0 + k as f64 * self.grid_step).collect()
    }
}

/// Rows with features drawn uniformly from the grid and response equal to
/// the planted leaf mean plus N(0, sigma^2) noise.
pub fn planted_matrix(spec: &PlantedMatrixSpec, n: usize, sigma: f64, seed: u64) -> ScoredMatrix {
    let grid = spec.grid();
    let m = spec.n_features;
    let mut rng = seed::rng(seed::sub_seed(seed, stream::SYNTH, 1));
    let noise = Normal::new(0.0, sigma.max(0.0)).expect("valid sigma");
    let mut scores = Vec::with_capacity(n * m);
    let mut response = Vec::with_capacity(n);
    for _ in 0..n {
        let row: Vec<f64> = (0..m).map(|_| grid[rng.random_range(0..grid.len())]).collect();
        let mean = spec.root.evaluate(|f| row[f]);
        let e = if sigma > 0.0 { noise.sample(&mut rng) } else { 0.0 };
        response.push(mean + e);
        scores.extend(row);
    }
    ScoredMatrix::new(
        (0..m).map(|j| format!("x{j}")).collect(),
        scores,
        response,
        (0..n).collect(),
    )
    .expect("consistent shape")
}

/// Uniform sampling range of each raw proxy in generated panels.
pub fn default_range(field: RawField) -> (f64, f64) {
    match field {
        RawField::CapitalRatio => (0.02, 0.15),
        RawField::AllowancesToLoans => (0.005, 0.06),
        RawField::ProvisionsToLoans => (0.0, 0.03),
        RawField::GrowthGap => (-0.10, 0.15),
        RawField::CostIncome => (0.4, 0.9),
        RawField::ExpenseToAssets => (0.01, 0.04),
        RawField::Roa => (-0.02, 0.03),
        RawField::Roe => (-0.2, 0.3),
        RawField::LoansToDeposits => (0.5, 1.6),
        RawField::LiquidToAssets => (0.05, 0.4),
        RawField::Beta => (0.0, 2.0),
    }
}

/// Planted tree over raw proxies, with Tobin's Q leaf means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedPanelSpec {
    pub root: PlantedNode<RawField>,
    pub window: Window,
    pub countries: Vec<String>,
}

impl PlantedPanelSpec {
    pub fn new(root: PlantedNode<RawField>) -> Self {
        PlantedPanelSpec {
            root,
            window: Window::default(),
            countries: ["DE", "FR", "IT", "ES", "PT", "GR", "IE", "NL", "AT", "BE"]
                .map(String::from)
                .to_vec(),
        }
    }
}

/// Bank-year panel whose raw ratios are uniform on [`default_range`] and
/// whose Tobin's Q is the planted leaf mean plus Gaussian noise.
pub fn generate_synthetic_panel(spec: &PlantedPanelSpec, n: usize, noise_sigma: f64, seed: u64) -> Result<Panel> {
    if n < 60 {
        return Err(Error::Domain(format!("synthetic panel needs n >= 60, got {n}")));
    }
    if spec.countries.is_empty() || spec.window.end < spec.window.start {
        return Err(Error::Config("synthetic panel needs countries and a window".into()));
    }
    let mut rng = seed::rng(seed::sub_seed(seed, stream::SYNTH, 0));
    let noise = Normal::new(0.0, noise_sigma.max(0.0)).expect("valid sigma");
    let size = Normal::<f64>::new(9.0, 1.0).expect("valid");
    let years = (spec.window.end - spec.window.start + 1) as usize;
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let mut raw = [0.0; 11];
        for (k, f) in RawField::ALL.iter().enumerate() {
            let (lo, hi) = default_range(*f);
            raw[k] = rng.random_range(lo..hi);
        }
        let get = |f: RawField| raw[RawField::ALL.iter().position(|g| *g == f).expect("field")];
        let mut q = spec.root.evaluate(get);
        if noise_sigma > 0.0 {
            q += noise.sample(&mut rng);
        }
        let total_assets = size.sample(&mut rng).exp();
        let equity = get(RawField::CapitalRatio) * total_assets;
        let bvl = total_assets - equity;
        let nta = total_assets;
        let loans = 0.6 * total_assets;
        let nie = get(RawField::ExpenseToAssets) * total_assets;
        let bank = i / years;
        let year = spec.window.start + (i % years) as i32;
        let gdp = 0.01 + 0.005 * (i % years) as f64;
        rows.push(BankYear {
            bank_id: format!("B{bank:05}"),
            country: spec.countries[bank % spec.countries.len()].clone(),
            year,
            mve: q * nta - bvl,
            bvl,
            nta,
            equity: Some(equity),
            total_assets,
            loans,
            deposits: loans / get(RawField::LoansToDeposits),
            loan_loss_allowances: Some(get(RawField::AllowancesToLoans) * loans),
            loan_loss_provisions: Some(get(RawField::ProvisionsToLoans) * loans),
            non_interest_expense: Some(nie),
            income: Some(nie / get(RawField::CostIncome)),
            liquid_assets: Some(get(RawField::LiquidToAssets) * total_assets),
            roa: Some(get(RawField::Roa)),
            roe: Some(get(RawField::Roe)),
            beta: Some(get(RawField::Beta)),
            loan_growth: Some(gdp + get(RawField::GrowthGap)),
            gdp_growth: Some(gdp),
            line: 0,
        });
    }
    Panel::new(rows, format!("synthetic:{seed}"), spec.window)
}
