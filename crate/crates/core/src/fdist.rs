//! Upper tail of the F distribution.

use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};

/// `P(F(df1, df2) > f)`.
///
/// Evaluated as `I_x(df2/2, df1/2)` with `x = df2 / (df2 + df1 f)`, which keeps
/// full relative precision for tiny p-values. `f = +inf` is accepted as the
/// perfect-fit sentinel and yields 0.
pub fn f_pvalue(f: f64, df1: f64, df2: f64) -> Result<f64> {
    if !(df1 >= 1.0 && df2 >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "F degrees of freedom ({df1}, {df2}) must be >= 1"
        )));
    }
    if f == f64::INFINITY {
        return Ok(0.0);
    }
    if !f.is_finite() {
        return Err(Error::NonFinite(f));
    }
    if f <= 0.0 {
        return Ok(1.0);
    }
    let x = df2 / (df2 + df1 * f);
    Ok(beta_reg(df2 / 2.0, df1 / 2.0, x).clamp(0.0, 1.0))
}
