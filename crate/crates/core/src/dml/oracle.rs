//! Reference estimators: the Frisch-Waugh-Lovell pair and the naive plug-in.

use nalgebra::DMatrix;

use super::estimate::nuisance_covariates;
use crate::dataset::Dataset;
use crate::learners::{self, LearnerSpec, Task};
use crate::linalg::{hstack, lstsq_qr, with_intercept};
use crate::{rng, Error, Result};

/// Treatment coefficient from one regression of `y` on `(d, x, 1)` and from
/// regressing the `x`-residuals of `y` on the `x`-residuals of `d`.
pub fn fwl_oracle(x: &DMatrix<f64>, d: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    let n = x.nrows();
    if d.len() != n || y.len() != n {
        return Err(Error::Dimension("fwl inputs differ in length".into()));
    }
    let dcol = DMatrix::from_column_slice(n, 1, d);
    let full = with_intercept(&hstack(&dcol, x));
    let direct = lstsq_qr(&full, y)?[1];

    let base = with_intercept(x);
    let resid = |target: &[f64]| -> Result<Vec<f64>> {
        let b = lstsq_qr(&base, target)?;
        Ok((0..n)
            .map(|i| target[i] - (0..base.ncols()).map(|j| base[(i, j)] * b[j]).sum::<f64>())
            .collect())
    };
    let ry = resid(y)?;
    let rd = resid(d)?;
    let rd_mat = DMatrix::from_column_slice(n, 1, &rd);
    let partialled = lstsq_qr(&rd_mat, &ry)?[0];
    Ok((direct, partialled))
}

/// Average predicted contrast of a learner fitted to the outcome on the
/// treatment and covariates, without residualisation or sample splitting.
pub fn naive_plugin(dataset: &Dataset, treatment: usize, g_spec: &LearnerSpec) -> Result<f64> {
    let n = dataset.n();
    let x = nuisance_covariates(dataset, treatment);
    let d = DMatrix::from_column_slice(n, 1, &dataset.treatment(treatment));
    let design = hstack(&d, &x);
    let spec = g_spec
        .clone()
        .with_seed(rng::derive_path(g_spec.seed, &[u64::MAX, treatment as u64]));
    let model = learners::fit(&spec, &design, &dataset.outcome, Task::Regression)?;
    // Other treatment columns, when present, are zeroed in both contrasts so
    // each row is compared as "this treatment" against the base category.
    let mut on = design.clone();
    let mut off = design;
    for i in 0..n {
        on[(i, 0)] = 1.0;
        off[(i, 0)] = 0.0;
        for j in dataset.covariates.ncols() + 1..on.ncols() {
            on[(i, j)] = 0.0;
            off[(i, j)] = 0.0;
        }
    }
    let treated = model.predict(&on)?;
    let control = model.predict(&off)?;
    Ok(treated
        .iter()
        .zip(&control)
        .map(|(a, b)| a - b)
        .sum::<f64>()
        / n as f64)
}
