use serde::{Deserialize, Serialize};

use super::TimeSeries;
use crate::error::{Error, Result};
use crate::linalg::weighted_least_squares;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoessParams {
    /// Fraction of the series used as each local neighbourhood.
    pub span: f64,
    /// Local polynomial degree, 1 or 2.
    pub degree: usize,
}

impl Default for LoessParams {
    fn default() -> Self {
        Self {
            span: 0.15,
            degree: 2,
        }
    }
}

/// Local polynomial smoothing with tricube weights over the `floor(span * n)`
/// nearest days. No robustness iterations.
pub fn loess_smooth(s: &TimeSeries, params: LoessParams) -> Result<TimeSeries> {
    s.require_complete()?;
    let LoessParams { span, degree } = params;
    if !(span > 0.0 && span <= 1.0) {
        return Err(Error::InvalidParameter(format!("loess span {span} not in (0, 1]")));
    }
    if !(1..=2).contains(&degree) {
        return Err(Error::InvalidParameter(format!("loess degree {degree} not in {{1, 2}}")));
    }
    let n = s.len();
    let q = ((span * n as f64).floor() as usize).min(n);
    if q < degree + 2 {
        return Err(Error::TooShort {
            needed: degree + 2,
            got: q,
        });
    }
    let y = s.values();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        // on an evenly spaced grid the q nearest points form a contiguous run
        let lo = i.saturating_sub((q - 1) / 2).min(n - q);
        let hi = lo + q;
        let radius = (i - lo).max(hi - 1 - i) as f64;
        let mut weights = Vec::with_capacity(q);
        let mut cols: Vec<Vec<f64>> = vec![Vec::with_capacity(q); degree + 1];
        for k in lo..hi {
            let dx = k as f64 - i as f64;
            let u = dx.abs() / radius;
            weights.push(if u < 1.0 { (1.0 - u.powi(3)).powi(3) } else { 0.0 });
            cols[0].push(1.0);
            cols[1].push(dx);
            if degree == 2 {
                cols[2].push(dx * dx);
            }
        }
        let fit = weighted_least_squares(&cols, &y[lo..hi], &weights)?;
        out.push(fit.coefficients[0]);
    }
    Ok(s.with_values(out))
}
