use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    /// Largest gap between the two empirical CDFs.
    pub d: f64,
    pub p: f64,
}

/// Two-sample Kolmogorov-Smirnov statistic by a merge sweep over the pooled
/// sorted values. Tied values are consumed together on both sides before the
/// gap is measured.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Domain("KS test needs two non-empty samples".into()));
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(Error::Domain("KS test sample contains NaN".into()));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] == v {
            i += 1;
        }
        while j < b.len() && b[j] == v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    // once one side is exhausted the remaining gaps only shrink toward 0
    Ok(d)
}

/// Kolmogorov survival function Q(λ) = 2 Σ_{i≥1} (-1)^{i-1} exp(-2 i² λ²).
/// For small λ the alternating series converges slowly, so the equivalent
/// theta-function form 1 - √(2π)/λ Σ_{k≥1} exp(-(2k-1)² π² / (8 λ²)) is
/// summed instead.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if !(lambda > 0.0) {
        return 1.0;
    }
    let q = if lambda < 1.0 {
        let mut s = 0.0;
        for k in 1..=50 {
            let t = ((2 * k - 1) as f64).powi(2) * std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda);
            let term = (-t).exp();
            s += term;
            if term < 1e-17 * s {
                break;
            }
        }
        1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * s
    } else {
        let mut s = 0.0;
        let mut sign = 1.0;
        for i in 1..=100 {
            let term = (-2.0 * (i * i) as f64 * lambda * lambda).exp();
            s += sign * term;
            sign = -sign;
            if term < 1e-17 {
                break;
            }
        }
        2.0 * s
    };
    q.clamp(0.0, 1.0)
}

/// D and the asymptotic p-value with effective size ne = nm/(n+m) and
/// λ = (√ne + 0.12 + 0.11/√ne) D.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    let d = ks_statistic(a, b)?;
    let (n, m) = (a.len() as f64, b.len() as f64);
    let ne = n * m / (n + m);
    let sq = ne.sqrt();
    let lambda = (sq + 0.12 + 0.11 / sq) * d;
    Ok(KsResult {
        d,
        p: kolmogorov_q(lambda),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PearsonResult {
    pub r: f64,
    /// Two-sided, from Student's t with n - 2 degrees of freedom.
    pub p: f64,
    pub n: usize,
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<PearsonResult> {
    if x.len() != y.len() {
        return Err(Error::Domain(format!(
            "pearson needs equal lengths, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::Domain(format!("pearson needs n >= 3, got {n}")));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if !(sxx > 0.0) || !(syy > 0.0) {
        return Err(Error::Degenerate("pearson input has zero variance".into()));
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    let df = nf - 2.0;
    let p = if r.abs() == 1.0 {
        0.0
    } else {
        let t = r * (df / (1.0 - r * r)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
        (2.0 * dist.cdf(-t.abs())).clamp(0.0, 1.0)
    };
    Ok(PearsonResult { r, p, n })
}

/// `***`, `**`, `*` at the 1%, 5% and 10% levels.
pub fn stars(p: f64) -> &'static str {
    if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.10 {
        "*"
    } else {
        ""
    }
}
