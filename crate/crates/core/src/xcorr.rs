//! Cross-correlation between an indicator and admissions over a lead window.
//!
//! `R(d) = sum_t (x_t - m_x)(y_{t-d} - m_y) / (|x - m_x| |y - m_y|)`, with the
//! means and norms taken over the full series and the numerator over the
//! overlapping days only. Results are reported by lead `L = -d`: a positive
//! lead correlates `x_t` with `y_{t+L}`, i.e. the indicator moves first.

use serde::Serialize;

use crate::error::{Error, Result};

pub const DEFAULT_CCF_WINDOW: usize = 30;
pub const DEFAULT_HORIZON: usize = 14;

/// How leads in a profile are signed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LeadConvention {
    /// Positive lead means the indicator precedes admissions.
    IndicatorFirst,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CcfProfile {
    pub window: usize,
    /// `values[k]` is the correlation at lead `k - window`.
    pub values: Vec<f64>,
    pub convention: LeadConvention,
}

impl CcfProfile {
    pub fn at_lead(&self, lead: i64) -> Option<f64> {
        let k = lead + self.window as i64;
        usize::try_from(k).ok().and_then(|k| self.values.get(k).copied())
    }

    pub fn leads(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        let w = self.window as i64;
        self.values
            .iter()
            .enumerate()
            .map(move |(k, &v)| (k as i64 - w, v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CcfResult {
    pub optimal_lead: Option<i64>,
    pub ccf_at_optimal: Option<f64>,
    pub ccf_at_horizon: f64,
    pub horizon: usize,
}

struct Centered {
    x: Vec<f64>,
    y: Vec<f64>,
    norm: f64,
}

impl Centered {
    fn new(x: &[f64], y: &[f64]) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::LengthMismatch(x.len(), y.len()));
        }
        if x.iter().chain(y).any(|v| !v.is_finite()) {
            return Err(Error::NanInput);
        }
        let dev = |s: &[f64]| {
            let m = s.iter().sum::<f64>() / s.len() as f64;
            let d: Vec<f64> = s.iter().map(|v| v - m).collect();
            let ss: f64 = d.iter().map(|v| v * v).sum();
            (d, ss)
        };
        let (x, sx) = dev(x);
        let (y, sy) = dev(y);
        if sx == 0.0 || sy == 0.0 || is_constant(&x) || is_constant(&y) {
            return Err(Error::ZeroVariance);
        }
        Ok(Self {
            x,
            y,
            norm: sx.sqrt() * sy.sqrt(),
        })
    }

    fn at_delay(&self, d: i64) -> Result<f64> {
        let n = self.x.len() as i64;
        if d.abs() >= n - 2 {
            return Err(Error::InvalidParameter(format!(
                "delay {d} out of range for series of length {n}"
            )));
        }
        let lo = d.max(0);
        let hi = n.min(n + d);
        let num: f64 = (lo..hi)
            .map(|t| self.x[t as usize] * self.y[(t - d) as usize])
            .sum();
        Ok(num / self.norm)
    }
}

fn is_constant(dev: &[f64]) -> bool {
    dev.iter().all(|&v| v == dev[0])
}

/// Correlation at raw delay `d` (lead `-d`).
pub fn ccf_at_delay(x: &[f64], y: &[f64], d: i64) -> Result<f64> {
    Centered::new(x, y)?.at_delay(d)
}

/// Correlation of `x_t` with `y_{t+lead}`.
pub fn ccf_at_lead(x: &[f64], y: &[f64], lead: i64) -> Result<f64> {
    ccf_at_delay(x, y, -lead)
}

pub fn ccf_profile(x: &[f64], y: &[f64], window: usize) -> Result<CcfProfile> {
    let c = Centered::new(x, y)?;
    let w = window as i64;
    let values = (-w..=w)
        .map(|lead| c.at_delay(-lead))
        .collect::<Result<Vec<_>>>()?;
    Ok(CcfProfile {
        window,
        values,
        convention: LeadConvention::IndicatorFirst,
    })
}

/// Lead with the largest non-negative correlation. Ties go to the smaller
/// `|lead|`, then to the positive lead.
pub fn optimal_lead(profile: &CcfProfile) -> Option<(i64, f64)> {
    profile
        .leads()
        .filter(|(_, v)| *v >= 0.0)
        .fold(None, |best: Option<(i64, f64)>, (lead, v)| match best {
            None => Some((lead, v)),
            Some((bl, bv)) => {
                let better = v > bv
                    || (v == bv
                        && (lead.abs() < bl.abs() || (lead.abs() == bl.abs() && lead > bl)));
                Some(if better { (lead, v) } else { (bl, bv) })
            }
        })
}

/// Correlation at lead `+h`.
pub fn ccf_at_horizon(x: &[f64], y: &[f64], h: usize) -> Result<f64> {
    ccf_at_lead(x, y, h as i64)
}

/// Profile, optimal lead and fixed-horizon correlation in one pass.
pub fn analyze(x: &[f64], y: &[f64], window: usize, horizon: usize) -> Result<CcfResult> {
    let profile = ccf_profile(x, y, window)?;
    let best = optimal_lead(&profile);
    let at_h = match profile.at_lead(horizon as i64) {
        Some(v) => v,
        None => ccf_at_horizon(x, y, horizon)?,
    };
    Ok(CcfResult {
        optimal_lead: best.map(|b| b.0),
        ccf_at_optimal: best.map(|b| b.1),
        ccf_at_horizon: at_h,
        horizon,
    })
}
