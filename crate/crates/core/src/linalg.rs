//! Dense least squares by Householder QR.
//!
//! Designs here are tall and thin (hundreds of rows, a handful of columns),
//! so the matrix is held column-major as one `Vec<f64>` per regressor.

use crate::error::{Error, Result};

/// Columns whose QR pivot falls below this fraction of their original norm are
/// treated as linearly dependent on the preceding columns.
pub const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub coefficients: Vec<f64>,
    pub rss: f64,
}

/// Minimise `||y - X b||²` for column-major `X`.
pub fn least_squares(columns: &[Vec<f64>], response: &[f64]) -> Result<LeastSquares> {
    let n = response.len();
    let p = columns.len();
    for c in columns {
        if c.len() != n {
            return Err(Error::LengthMismatch(c.len(), n));
        }
    }
    if n < p {
        return Err(Error::InsufficientObservations { n, p });
    }
    if columns.iter().flatten().chain(response).any(|v| !v.is_finite()) {
        return Err(Error::NanInput);
    }

    let mut a: Vec<Vec<f64>> = columns.to_vec();
    let mut qty = response.to_vec();
    let norms: Vec<f64> = a.iter().map(|c| norm(c)).collect();
    let mut diag = vec![0.0; p];

    for k in 0..p {
        let alpha = norm(&a[k][k..]);
        if norms[k] == 0.0 || alpha <= RANK_TOLERANCE * norms[k] {
            return Err(Error::CollinearDesign);
        }
        let alpha = if a[k][k] > 0.0 { -alpha } else { alpha };
        // v = x - alpha e1, stored in place of column k below the diagonal
        let mut v: Vec<f64> = a[k][k..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        diag[k] = alpha;
        if vnorm2 == 0.0 {
            continue;
        }
        for col in a.iter_mut().skip(k + 1) {
            reflect(&v, vnorm2, &mut col[k..]);
        }
        reflect(&v, vnorm2, &mut qty[k..]);
    }

    let mut coefficients = vec![0.0; p];
    for k in (0..p).rev() {
        let mut acc = qty[k];
        for (j, col) in a.iter().enumerate().skip(k + 1) {
            acc -= col[k] * coefficients[j];
        }
        coefficients[k] = acc / diag[k];
    }
    let rss = qty[p..].iter().map(|r| r * r).sum();
    Ok(LeastSquares { coefficients, rss })
}

/// Weighted least squares; rows with zero weight are dropped.
pub fn weighted_least_squares(
    columns: &[Vec<f64>],
    response: &[f64],
    weights: &[f64],
) -> Result<LeastSquares> {
    if weights.len() != response.len() {
        return Err(Error::LengthMismatch(weights.len(), response.len()));
    }
    let keep: Vec<usize> = (0..response.len()).filter(|&i| weights[i] > 0.0).collect();
    let sw: Vec<f64> = keep.iter().map(|&i| weights[i].sqrt()).collect();
    let cols: Vec<Vec<f64>> = columns
        .iter()
        .map(|c| keep.iter().zip(&sw).map(|(&i, s)| c[i] * s).collect())
        .collect();
    let y: Vec<f64> = keep.iter().zip(&sw).map(|(&i, s)| response[i] * s).collect();
    least_squares(&cols, &y)
}

fn norm(x: &[f64]) -> f64 {
    // scaled to avoid overflow on large counts
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    scale * x.iter().map(|v| (v / scale).powi(2)).sum::<f64>().sqrt()
}

fn reflect(v: &[f64], vnorm2: f64, x: &mut [f64]) {
    let dot: f64 = v.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
    let f = 2.0 * dot / vnorm2;
    for (xi, vi) in x.iter_mut().zip(v) {
        *xi -= f * vi;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let x: Vec<f64> = (0..6).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 3.0).collect();
        let fit = least_squares(&[vec![1.0; 6], x], &y).unwrap();
        assert!((fit.coefficients[0] - 3.0).abs() < 1e-12);
        assert!((fit.coefficients[1] - 2.0).abs() < 1e-12);
        assert!(fit.rss < 1e-20);
    }

    #[test]
    fn duplicate_column_is_collinear() {
        let x = vec![1.0, 4.0, 2.0, 8.0, 5.0];
        let err = least_squares(&[vec![1.0; 5], x.clone(), x], &[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert!(matches!(err, Err(Error::CollinearDesign)));
    }

    #[test]
    fn zero_weights_drop_rows() {
        let x = vec![0.0, 1.0, 2.0, 3.0];
        let y = vec![0.0, 1.0, 2.0, 100.0];
        let fit =
            weighted_least_squares(&[vec![1.0; 4], x], &y, &[1.0, 1.0, 1.0, 0.0]).unwrap();
        assert!((fit.coefficients[1] - 1.0).abs() < 1e-12);
    }
}
