//! Granger causality by nested OLS models and an F-test.
//!
//! The restricted model regresses the (optionally horizon-shifted) admissions
//! series on an intercept and its own lags `1..=m`; the unrestricted model adds
//! lags `1..=m` of the indicator. H0 is that every indicator-lag coefficient is
//! zero.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fdist::f_pvalue;
use crate::linalg::least_squares;
use crate::timeseries::TimeSeries;

pub const DEFAULT_MAX_LAG: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    /// Intercept first, then one coefficient per regressor column.
    pub coefficients: Vec<f64>,
    pub rss: f64,
    pub n: usize,
    pub p: usize,
}

/// Least squares of `response` on an intercept plus `regressors`.
pub fn ols_fit(response: &[f64], regressors: &[Vec<f64>]) -> Result<OlsFit> {
    let n = response.len();
    let mut cols = Vec::with_capacity(regressors.len() + 1);
    cols.push(vec![1.0; n]);
    cols.extend(regressors.iter().cloned());
    let p = cols.len();
    let fit = least_squares(&cols, response)?;
    Ok(OlsFit {
        coefficients: fit.coefficients,
        rss: fit.rss,
        n,
        p,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FTest {
    /// `+inf` when the unrestricted model fits exactly.
    pub f: f64,
    pub df1: usize,
    pub df2: usize,
    /// Round-off made the restricted RSS smaller than the unrestricted one.
    pub clamped: bool,
}

pub fn f_statistic(restricted: &OlsFit, unrestricted: &OlsFit) -> Result<FTest> {
    if unrestricted.p <= restricted.p || unrestricted.n != restricted.n {
        return Err(Error::InvalidParameter(format!(
            "models are not nested: restricted (n={}, p={}), unrestricted (n={}, p={})",
            restricted.n, restricted.p, unrestricted.n, unrestricted.p
        )));
    }
    if unrestricted.n <= unrestricted.p {
        return Err(Error::InsufficientObservations {
            n: unrestricted.n,
            p: unrestricted.p,
        });
    }
    let df1 = unrestricted.p - restricted.p;
    let df2 = unrestricted.n - unrestricted.p;
    let mut gain = restricted.rss - unrestricted.rss;
    let clamped = gain < 0.0;
    if clamped {
        log::warn!("restricted RSS below unrestricted RSS by {:e}; F clamped to 0", -gain);
        gain = 0.0;
    }
    let f = if unrestricted.rss == 0.0 {
        if gain == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (gain / df1 as f64) / (unrestricted.rss / df2 as f64)
    };
    Ok(FTest {
        f,
        df1,
        df2,
        clamped,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrangerResult {
    pub f: f64,
    pub p_value: f64,
    pub df1: usize,
    pub df2: usize,
    pub max_lag: usize,
    pub horizon: usize,
    pub clamped: bool,
}

/// Does `x` help predict `y` `horizon` days ahead beyond `y`'s own history?
pub fn granger_test(
    x: &TimeSeries,
    y: &TimeSeries,
    max_lag: usize,
    horizon: usize,
) -> Result<GrangerResult> {
    x.require_complete()?;
    y.require_complete()?;
    if x.start() != y.start() || x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    granger_values(x.values(), y.values(), max_lag, horizon)
}

/// [`granger_test`] on raw aligned slices.
pub fn granger_values(
    x: &[f64],
    y: &[f64],
    max_lag: usize,
    horizon: usize,
) -> Result<GrangerResult> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    if max_lag == 0 {
        return Err(Error::InvalidParameter("max lag must be >= 1".into()));
    }
    let m = max_lag;
    let usable = y.len().saturating_sub(horizon);
    // response z_t = y_{t+h}; the last h indicator days have no partner
    let z = &y[horizon.min(y.len())..];
    let x = &x[..usable];
    let rows = usable.saturating_sub(m);
    if rows <= 2 * m + 1 {
        return Err(Error::InsufficientObservations { n: rows, p: 2 * m + 1 });
    }
    let response: Vec<f64> = (m..usable).map(|t| z[t]).collect();
    let lags = |s: &[f64]| -> Vec<Vec<f64>> {
        (1..=m)
            .map(|j| (m..usable).map(|t| s[t - j]).collect())
            .collect()
    };
    let own = lags(z);
    let mut full = own.clone();
    full.extend(lags(x));

    let restricted = ols_fit(&response, &own)?;
    let unrestricted = ols_fit(&response, &full)?;
    let test = f_statistic(&restricted, &unrestricted)?;
    let p_value = f_pvalue(test.f, test.df1 as f64, test.df2 as f64)?;
    Ok(GrangerResult {
        f: test.f,
        p_value,
        df1: test.df1,
        df2: test.df2,
        max_lag: m,
        horizon,
        clamped: test.clamped,
    })
}
