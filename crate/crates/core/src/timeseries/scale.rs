use super::TimeSeries;
use crate::error::{Error, Result};

/// A rescaled series. `degenerate` is set when the input was constant and the
/// output was forced to all zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaled {
    pub series: TimeSeries,
    pub degenerate: bool,
}

/// `(v - min) / (max - min)`; a constant series maps to zeros.
pub fn minmax_scale(s: &TimeSeries) -> Result<Scaled> {
    s.require_complete()?;
    let (lo, hi) = s
        .values()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let range = hi - lo;
    if range == 0.0 {
        return Ok(Scaled {
            series: s.with_values(vec![0.0; s.len()]),
            degenerate: true,
        });
    }
    let values = s.values().iter().map(|v| (v - lo) / range).collect();
    Ok(Scaled {
        series: s.with_values(values),
        degenerate: false,
    })
}

/// `(v - mean) / sd` with the sample (n - 1) standard deviation.
pub fn zscore_scale(s: &TimeSeries) -> Result<Scaled> {
    s.require_complete()?;
    let n = s.len();
    if n < 2 {
        return Err(Error::TooShort { needed: 2, got: n });
    }
    let mean = s.values().iter().sum::<f64>() / n as f64;
    let ss: f64 = s.values().iter().map(|v| (v - mean).powi(2)).sum();
    let sd = (ss / (n - 1) as f64).sqrt();
    if sd == 0.0 || s.values().iter().all(|&v| v == s.values()[0]) {
        return Ok(Scaled {
            series: s.with_values(vec![0.0; n]),
            degenerate: true,
        });
    }
    let values = s.values().iter().map(|v| (v - mean) / sd).collect();
    Ok(Scaled {
        series: s.with_values(values),
        degenerate: false,
    })
}
