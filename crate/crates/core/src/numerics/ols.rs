use nalgebra::{DMatrix, DVector};

use super::NumericsError;

/// Reciprocal condition (ratio of extreme |R| diagonal entries) below which
/// the least-squares system is reported singular.
const RCOND_MIN: f64 = 1e-12;

/// Linear predictor `y = x . weights + intercept`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub input_dim: usize,
}

impl RegressionModel {
    pub fn predict_row(&self, row: &[f64]) -> Result<f64, NumericsError> {
        if row.len() != self.input_dim {
            return Err(NumericsError::DimensionMismatch {
                expected: self.input_dim,
                found: row.len(),
            });
        }
        Ok(self.intercept + row.iter().zip(&self.weights).map(|(x, w)| x * w).sum::<f64>())
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Result<Vec<f64>, NumericsError> {
        if x.ncols() != self.input_dim {
            return Err(NumericsError::DimensionMismatch {
                expected: self.input_dim,
                found: x.ncols(),
            });
        }
        Ok(x.row_iter()
            .map(|row| {
                self.intercept + row.iter().zip(&self.weights).map(|(x, w)| x * w).sum::<f64>()
            })
            .collect())
    }
}

/// Least squares with intercept and optional ridge penalty on the weights:
/// minimizes `|y - X b - c|^2 + ridge |b|^2`.
///
/// The centered system is solved through a Householder QR factorization;
/// a ridge penalty is applied by appending `sqrt(ridge) I` rows.
pub fn ols_fit(x: &DMatrix<f64>, y: &[f64], ridge: f64) -> Result<RegressionModel, NumericsError> {
    let (n, p) = x.shape();
    if y.len() != n {
        return Err(NumericsError::DimensionMismatch {
            expected: n,
            found: y.len(),
        });
    }
    if !(ridge >= 0.0) || !ridge.is_finite() {
        return Err(NumericsError::InvalidShape(format!("ridge must be >= 0, got {ridge}")));
    }
    if n == 0 || (ridge == 0.0 && n < p + 1) {
        return Err(NumericsError::InvalidShape(format!(
            "{n} observations cannot determine {p} weights and an intercept"
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(NumericsError::NonFinite);
    }

    let y_mean = y.iter().sum::<f64>() / n as f64;
    if p == 0 {
        return Ok(RegressionModel {
            weights: Vec::new(),
            intercept: y_mean,
            input_dim: 0,
        });
    }
    let x_mean = x.row_mean();
    let extra = if ridge > 0.0 { p } else { 0 };
    let mut a = DMatrix::<f64>::zeros(n + extra, p);
    let mut b = DVector::<f64>::zeros(n + extra);
    for i in 0..n {
        for j in 0..p {
            a[(i, j)] = x[(i, j)] - x_mean[j];
        }
        b[i] = y[i] - y_mean;
    }
    let root = ridge.sqrt();
    for j in 0..extra {
        a[(n + j, j)] = root;
    }

    let qr = a.qr();
    let r = qr.r();
    let diag: Vec<f64> = (0..p).map(|i| r[(i, i)].abs()).collect();
    let max = diag.iter().copied().fold(0.0f64, f64::max);
    let min = diag.iter().copied().fold(f64::INFINITY, f64::min);
    let rcond = if max > 0.0 { min / max } else { 0.0 };
    if rcond < RCOND_MIN {
        return Err(NumericsError::SingularSystem { rcond });
    }
    let qtb = qr.q().tr_mul(&b);
    let weights = r
        .solve_upper_triangular(&qtb)
        .ok_or(NumericsError::SingularSystem { rcond })?;

    let intercept = y_mean - x_mean.iter().zip(weights.iter()).map(|(m, w)| m * w).sum::<f64>();
    Ok(RegressionModel {
        weights: weights.iter().copied().collect(),
        intercept,
        input_dim: p,
    })
}
