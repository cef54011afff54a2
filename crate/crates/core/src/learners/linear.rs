//! Least squares, ridge and lasso fits.

use nalgebra::{DMatrix, DVector};

use crate::linalg::{self, column_means};
use crate::{Error, Result};

/// Intercept plus one coefficient per input column, on the raw scale.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearFit {
    pub intercept: f64,
    pub coef: Vec<f64>,
}

impl LinearFit {
    pub fn predict(&self, x: &DMatrix<f64>) -> Vec<f64> {
        (0..x.nrows())
            .map(|i| {
                self.intercept
                    + self
                        .coef
                        .iter()
                        .enumerate()
                        .map(|(j, b)| b * x[(i, j)])
                        .sum::<f64>()
            })
            .collect()
    }
}

fn check_shape(x: &DMatrix<f64>, y: &[f64]) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(Error::Dimension(format!(
            "{} rows vs {} targets",
            x.nrows(),
            y.len()
        )));
    }
    if y.is_empty() {
        return Err(Error::InvalidParameter("no training rows".into()));
    }
    Ok(())
}

/// Centers columns (and the target) when an intercept is fitted.
fn center(x: &DMatrix<f64>, y: &[f64], intercept: bool) -> (DMatrix<f64>, Vec<f64>, Vec<f64>, f64) {
    if !intercept {
        return (x.clone(), y.to_vec(), vec![0.0; x.ncols()], 0.0);
    }
    let means = column_means(x);
    let y_mean = y.iter().sum::<f64>() / y.len() as f64;
    let xc = DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)] - means[j]);
    let yc = y.iter().map(|v| v - y_mean).collect();
    (xc, yc, means, y_mean)
}

fn uncenter(coef: Vec<f64>, means: &[f64], y_mean: f64) -> LinearFit {
    let intercept = y_mean - coef.iter().zip(means).map(|(b, m)| b * m).sum::<f64>();
    LinearFit { intercept, coef }
}

/// Ordinary least squares. Rank-deficient designs get the minimum-norm
/// solution instead of an error.
pub fn fit_ols(x: &DMatrix<f64>, y: &[f64], intercept: bool) -> Result<LinearFit> {
    check_shape(x, y)?;
    let (xc, yc, means, y_mean) = center(x, y, intercept);
    if xc.ncols() == 0 {
        return Ok(uncenter(Vec::new(), &means, y_mean));
    }
    let coef = match linalg::lstsq_qr(&xc, &yc) {
        Ok(b) => b,
        Err(Error::RankDeficient(_)) => {
            let gram = xc.tr_mul(&xc);
            let rhs = xc.tr_mul(&DVector::from_column_slice(&yc));
            linalg::solve_psd(&gram, &rhs).iter().copied().collect()
        }
        Err(e) => return Err(e),
    };
    Ok(uncenter(coef, &means, y_mean))
}

/// Ridge regression minimising `||y - a - Xb||^2 + lambda * ||b||^2` with an
/// unpenalised intercept.
pub fn fit_ridge(x: &DMatrix<f64>, y: &[f64], lambda: f64, intercept: bool) -> Result<LinearFit> {
    check_shape(x, y)?;
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "ridge penalty must be finite and non-negative, got {lambda}"
        )));
    }
    let (xc, yc, means, y_mean) = center(x, y, intercept);
    if lambda == 0.0 {
        let coef = linalg::lstsq_qr(&xc, &yc).map_err(|e| match e {
            Error::RankDeficient(m) => Error::Singular(format!("unpenalised ridge: {m}")),
            other => other,
        })?;
        return Ok(uncenter(coef, &means, y_mean));
    }
    let mut gram = xc.tr_mul(&xc);
    for j in 0..gram.nrows() {
        gram[(j, j)] += lambda;
    }
    let rhs = xc.tr_mul(&DVector::from_column_slice(&yc));
    let coef = linalg::solve_pd(&gram, &rhs)?;
    if coef.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular("ridge system".into()));
    }
    Ok(uncenter(coef.iter().copied().collect(), &means, y_mean))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoFit {
    pub fit: LinearFit,
    /// Coefficients on the standardised scale.
    pub standardized: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Columns standardised to mean zero and unit population variance. Constant
/// columns are kept as zeros and never enter the model.
pub(crate) struct Standardized {
    columns: Vec<Vec<f64>>,
    means: Vec<f64>,
    scales: Vec<f64>,
    target: Vec<f64>,
    y_mean: f64,
}

impl Standardized {
    pub(crate) fn new(x: &DMatrix<f64>, y: &[f64]) -> Self {
        let n = x.nrows() as f64;
        let means = column_means(x);
        let y_mean = y.iter().sum::<f64>() / n;
        let mut scales = Vec::with_capacity(x.ncols());
        let columns = x
            .column_iter()
            .zip(&means)
            .map(|(col, &m)| {
                let sd = (col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n).sqrt();
                let usable = sd > 1e-12 * m.abs().max(1.0);
                scales.push(if usable { sd } else { 0.0 });
                col.iter()
                    .map(|v| if usable { (v - m) / sd } else { 0.0 })
                    .collect()
            })
            .collect();
        Self {
            columns,
            means,
            scales,
            target: y.iter().map(|v| v - y_mean).collect(),
            y_mean,
        }
    }

    /// Smallest penalty at which every coefficient is zero.
    pub(crate) fn lambda_max(&self) -> f64 {
        let n = self.target.len() as f64;
        self.columns
            .iter()
            .map(|z| (z.iter().zip(&self.target).map(|(a, b)| a * b).sum::<f64>() / n).abs())
            .fold(0.0, f64::max)
    }

    fn to_raw(&self, beta: &[f64]) -> LinearFit {
        let coef: Vec<f64> = beta
            .iter()
            .zip(&self.scales)
            .map(|(b, s)| if *s > 0.0 { b / s } else { 0.0 })
            .collect();
        uncenter(coef, &self.means, self.y_mean)
    }
}

fn soft_threshold(v: f64, lambda: f64) -> f64 {
    if v > lambda {
        v - lambda
    } else if v < -lambda {
        v + lambda
    } else {
        0.0
    }
}

/// Cyclic coordinate descent for `(1/2n)||y - a - Zb||^2 + lambda * ||b||_1`
/// on standardised columns, starting from `beta`.
fn coordinate_descent(
    data: &Standardized,
    lambda: f64,
    beta: &mut [f64],
    tol: f64,
    max_iter: usize,
) -> (usize, bool) {
    let n = data.target.len() as f64;
    let mut resid = data.target.clone();
    for (z, b) in data.columns.iter().zip(beta.iter()) {
        if *b != 0.0 {
            resid.iter_mut().zip(z).for_each(|(r, zi)| *r -= b * zi);
        }
    }
    for iter in 1..=max_iter {
        let mut max_step = 0.0_f64;
        for (j, z) in data.columns.iter().enumerate() {
            if data.scales[j] == 0.0 {
                continue;
            }
            let rho = z.iter().zip(&resid).map(|(a, b)| a * b).sum::<f64>() / n + beta[j];
            let updated = soft_threshold(rho, lambda);
            let step = updated - beta[j];
            if step != 0.0 {
                resid.iter_mut().zip(z).for_each(|(r, zi)| *r -= step * zi);
                beta[j] = updated;
                max_step = max_step.max(step.abs());
            }
        }
        if max_step < tol {
            return (iter, true);
        }
    }
    (max_iter, false)
}

pub fn fit_lasso(
    x: &DMatrix<f64>,
    y: &[f64],
    lambda: f64,
    tol: f64,
    max_iter: usize,
) -> Result<LassoFit> {
    check_shape(x, y)?;
    let data = Standardized::new(x, y);
    lasso_on(&data, lambda, None, tol, max_iter)
}

pub(crate) fn lasso_on(
    data: &Standardized,
    lambda: f64,
    warm: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> Result<LassoFit> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "lasso penalty must be finite and non-negative, got {lambda}"
        )));
    }
    let mut beta = warm.map_or_else(|| vec![0.0; data.columns.len()], <[f64]>::to_vec);
    let (iterations, converged) = coordinate_descent(data, lambda, &mut beta, tol, max_iter);
    Ok(LassoFit {
        fit: data.to_raw(&beta),
        standardized: beta,
        iterations,
        converged,
    })
}
