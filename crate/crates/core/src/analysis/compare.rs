use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dataset::RawField;
use crate::error::{Error, Result};
use crate::rescale::Direction;

use super::stats::{ks_two_sample, stars};

/// A raw variable compared across the two extreme groups. `field: None` is
/// Tobin's Q itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonVariable {
    pub name: String,
    pub field: Option<RawField>,
    pub direction: Option<Direction>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LowerRisk {
    QMin,
    QMax,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub variable: String,
    pub mean_qmin: f64,
    pub mean_qmax: f64,
    pub ks_d: f64,
    pub p_value: f64,
    pub stars: String,
    /// Group with the lower risk on this variable, read off the raw
    /// direction; `None` for Q and for equal means.
    pub lower_risk: Option<LowerRisk>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupComparison {
    pub n_qmin: usize,
    pub n_qmax: usize,
    pub rows: Vec<ComparisonRow>,
}

impl GroupComparison {
    /// CSV columns: variable, mean_qmin, mean_qmax, ks_d, p_value, stars,
    /// lower_risk (`qmin`, `qmax` or empty).
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "variable",
            "mean_qmin",
            "mean_qmax",
            "ks_d",
            "p_value",
            "stars",
            "lower_risk",
        ])?;
        for r in &self.rows {
            w.write_record([
                r.variable.clone(),
                r.mean_qmin.to_string(),
                r.mean_qmax.to_string(),
                r.ks_d.to_string(),
                r.p_value.to_string(),
                r.stars.clone(),
                lower_risk_label(r.lower_risk).into(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<comparison>", e))?;
        Ok(())
    }
}

pub(crate) fn lower_risk_label(l: Option<LowerRisk>) -> &'static str {
    match l {
        Some(LowerRisk::QMin) => "qmin",
        Some(LowerRisk::QMax) => "qmax",
        None => "",
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Means and KS tests of raw (unrescaled) variables between the rows of the
/// Q^Min leaf and those of the Q^Max leaf. Each input is one column per
/// variable, in the order of `variables`.
pub fn group_comparison(
    qmin: &[Vec<f64>],
    qmax: &[Vec<f64>],
    variables: &[ComparisonVariable],
) -> Result<GroupComparison> {
    if qmin.len() != variables.len() || qmax.len() != variables.len() {
        return Err(Error::Domain("one column per variable is required".into()));
    }
    let mut rows = Vec::with_capacity(variables.len());
    let (mut n_qmin, mut n_qmax) = (0, 0);
    for ((a, b), v) in qmin.iter().zip(qmax).zip(variables) {
        if a.is_empty() || b.is_empty() {
            return Err(Error::EmptySubsample(format!("no rows to compare for {}", v.name)));
        }
        n_qmin = n_qmin.max(a.len());
        n_qmax = n_qmax.max(b.len());
        let ks = ks_two_sample(a, b)?;
        let (ma, mb) = (mean(a), mean(b));
        let lower_risk = match v.direction {
            _ if ma == mb => None,
            None => None,
            Some(Direction::IncreasingInRisk) => Some(if ma < mb { LowerRisk::QMin } else { LowerRisk::QMax }),
            Some(Direction::DecreasingInRisk) => Some(if ma > mb { LowerRisk::QMin } else { LowerRisk::QMax }),
        };
        rows.push(ComparisonRow {
            variable: v.name.clone(),
            mean_qmin: ma,
            mean_qmax: mb,
            ks_d: ks.d,
            p_value: ks.p,
            stars: stars(ks.p).into(),
            lower_risk,
        });
    }
    Ok(GroupComparison { n_qmin, n_qmax, rows })
}
