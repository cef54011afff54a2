//! Dense least-squares routines on top of nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Prepends a column of ones.
pub fn with_intercept(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    let mut out = DMatrix::from_element(n, x.ncols() + 1, 1.0);
    out.columns_mut(1, x.ncols()).copy_from(x);
    out
}

pub fn column_means(x: &DMatrix<f64>) -> Vec<f64> {
    let n = x.nrows() as f64;
    x.column_iter().map(|c| c.sum() / n).collect()
}

/// Least squares by Householder QR. Fails when the design is numerically
/// rank deficient.
pub fn lstsq_qr(x: &DMatrix<f64>, y: &[f64]) -> Result<Vec<f64>> {
    let (n, p) = x.shape();
    if y.len() != n {
        return Err(Error::Dimension(format!(
            "{} rows vs {} targets",
            n,
            y.len()
        )));
    }
    if n < p {
        return Err(Error::RankDeficient(format!("{n} rows for {p} columns")));
    }
    let qr = x.clone().qr();
    let r = qr.r();
    let scale = r.diagonal().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let tol = scale * (n.max(p) as f64) * f64::EPSILON * 16.0;
    if let Some(j) = (0..p).find(|&j| r[(j, j)].abs() <= tol) {
        return Err(Error::RankDeficient(format!(
            "column {j} is linearly dependent"
        )));
    }
    let mut qty = DVector::from_column_slice(y);
    qr.q_tr_mul(&mut qty);
    let head = qty.rows(0, p).into_owned();
    let beta = r
        .solve_upper_triangular(&head)
        .ok_or_else(|| Error::RankDeficient("triangular solve failed".into()))?;
    Ok(beta.iter().copied().collect())
}

/// Solves a symmetric positive semi-definite system. Uses Cholesky when the
/// matrix is positive definite and falls back to the minimum-norm solution
/// from a symmetric eigendecomposition otherwise.
pub fn solve_psd(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    if let Some(chol) = a.clone().cholesky() {
        let sol = chol.solve(b);
        if sol.iter().all(|v| v.is_finite()) {
            return sol;
        }
    }
    let eig = a.clone().symmetric_eigen();
    let max_ev = eig.eigenvalues.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let tol = max_ev * a.nrows() as f64 * f64::EPSILON * 64.0;
    let qtb = eig.eigenvectors.tr_mul(b);
    let scaled = DVector::from_iterator(
        qtb.len(),
        qtb.iter()
            .zip(eig.eigenvalues.iter())
            .map(|(v, &ev)| if ev > tol { v / ev } else { 0.0 }),
    );
    &eig.eigenvectors * scaled
}

/// Strict positive-definite solve; errors when Cholesky fails.
pub fn solve_pd(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let chol = a
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Singular("normal equations are not positive definite".into()))?;
    Ok(chol.solve(b))
}

/// Selects a subset of rows.
pub fn select_rows(x: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), x.ncols(), |i, j| x[(rows[i], j)])
}

pub fn select(values: &[f64], rows: &[usize]) -> Vec<f64> {
    rows.iter().map(|&i| values[i]).collect()
}

/// Appends the columns of `extra` to `x`.
pub fn hstack(x: &DMatrix<f64>, extra: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(x.nrows(), extra.nrows());
    let mut out = DMatrix::zeros(x.nrows(), x.ncols() + extra.ncols());
    out.columns_mut(0, x.ncols()).copy_from(x);
    out.columns_mut(x.ncols(), extra.ncols()).copy_from(extra);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qr_recovers_exact_fit() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 1.0, 1.0, 1.0, 2.0, 1.0, 3.0]);
        let y = [1.0, 3.0, 5.0, 7.0];
        let b = lstsq_qr(&x, &y).unwrap();
        assert!((b[0] - 1.0).abs() < 1e-12 && (b[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn qr_rejects_collinear_columns() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]);
        assert!(matches!(
            lstsq_qr(&x, &[1.0, 2.0, 3.0]),
            Err(Error::RankDeficient(_))
        ));
    }

    #[test]
    fn psd_solve_gives_min_norm_for_singular() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let b = DVector::from_column_slice(&[2.0, 2.0]);
        let x = solve_psd(&a, &b);
        assert!((x[0] - 1.0).abs() < 1e-10 && (x[1] - 1.0).abs() < 1e-10);
    }
}
