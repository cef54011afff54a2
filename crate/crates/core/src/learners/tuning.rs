//! Penalty choice for ridge and lasso.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::linear::{self, LinearFit, Standardized};
use super::{LearnerKind, LearnerSpec};
use crate::linalg::{column_means, select, select_rows};
use crate::{rng, Error, Result};

/// Penalty strength. Lasso penalties are on the `(1/2n)` loss scale with
/// standardised columns; ridge penalties on the raw sum-of-squares scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Penalty {
    Fixed(f64),
    /// Pick from `values` by K-fold validation error.
    Grid {
        values: Vec<f64>,
        folds: usize,
    },
    /// Log-spaced grid derived from the data, then K-fold selection.
    Auto {
        points: usize,
        folds: usize,
    },
}

impl Penalty {
    pub fn validate(&self) -> Result<()> {
        let bad = |v: f64| !(v >= 0.0) || !v.is_finite();
        match self {
            Penalty::Fixed(v) if bad(*v) => Err(Error::InvalidParameter(format!(
                "penalty must be finite and non-negative, got {v}"
            ))),
            Penalty::Grid { values, folds } => {
                if values.is_empty() || values.iter().any(|&v| bad(v)) {
                    return Err(Error::InvalidParameter(
                        "penalty grid must be non-empty and non-negative".into(),
                    ));
                }
                check_folds(*folds)
            }
            Penalty::Auto { points, folds } => {
                if *points < 2 {
                    return Err(Error::InvalidParameter(
                        "penalty grid needs 2+ points".into(),
                    ));
                }
                check_folds(*folds)
            }
            Penalty::Fixed(_) => Ok(()),
        }
    }
}

fn check_folds(k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::InvalidParameter(
            "penalty selection needs 2+ folds".into(),
        ));
    }
    Ok(())
}

fn log_grid(high: f64, low: f64, points: usize) -> Vec<f64> {
    let (lh, ll) = (high.ln(), low.ln());
    (0..points)
        .map(|i| (lh + (ll - lh) * i as f64 / (points - 1) as f64).exp())
        .collect()
}

fn auto_grid(kind: LearnerKind, x: &DMatrix<f64>, y: &[f64], points: usize) -> Vec<f64> {
    match kind {
        LearnerKind::Lasso => {
            let lmax = Standardized::new(x, y).lambda_max();
            if lmax > 0.0 {
                log_grid(lmax, lmax * 1e-3, points)
            } else {
                vec![0.0]
            }
        }
        _ => {
            let means = column_means(x);
            let p = x.ncols().max(1) as f64;
            let ss: f64 = x
                .column_iter()
                .zip(&means)
                .map(|(c, m)| c.iter().map(|v| (v - m).powi(2)).sum::<f64>())
                .sum::<f64>()
                / p;
            let scale = if ss > 0.0 { ss } else { 1.0 };
            log_grid(scale * 1e2, scale * 1e-4, points)
        }
    }
}

type Solved = (LinearFit, Option<(usize, bool)>);

/// Fits one linear model per penalty, in grid order, warm-starting lasso.
fn fit_path(spec: &LearnerSpec, x: &DMatrix<f64>, y: &[f64], grid: &[f64]) -> Result<Vec<Solved>> {
    let h = &spec.hyperparameters;
    match spec.kind {
        LearnerKind::Lasso => {
            let data = Standardized::new(x, y);
            let mut warm: Option<Vec<f64>> = None;
            grid.iter()
                .map(|&lambda| {
                    let f = linear::lasso_on(&data, lambda, warm.as_deref(), h.tol, h.max_iter)?;
                    warm = Some(f.standardized.clone());
                    Ok((f.fit, Some((f.iterations, f.converged))))
                })
                .collect()
        }
        _ => grid
            .iter()
            .map(|&lambda| Ok((linear::fit_ridge(x, y, lambda, h.intercept)?, None)))
            .collect(),
    }
}

/// Fits ridge or lasso, choosing the penalty first when asked to. Returns the
/// model, the penalty used and lasso convergence info.
#[allow(clippy::type_complexity)]
pub(crate) fn fit_penalized(
    spec: &LearnerSpec,
    x: &DMatrix<f64>,
    y: &[f64],
) -> Result<(LinearFit, f64, Option<(usize, bool)>)> {
    let (grid, folds) = match &spec.hyperparameters.penalty {
        Penalty::Fixed(v) => (vec![*v], 0),
        Penalty::Grid { values, folds } => {
            let mut v = values.clone();
            v.sort_by(|a, b| b.total_cmp(a));
            (v, *folds)
        }
        Penalty::Auto { points, folds } => (auto_grid(spec.kind, x, y, *points), *folds),
    };
    let lambda = if grid.len() == 1 {
        grid[0]
    } else {
        select_by_validation(spec, x, y, &grid, folds)?
    };
    let (fit, conv) = fit_path(spec, x, y, &[lambda])?.remove(0);
    Ok((fit, lambda, conv))
}

fn select_by_validation(
    spec: &LearnerSpec,
    x: &DMatrix<f64>,
    y: &[f64],
    grid: &[f64],
    folds: usize,
) -> Result<f64> {
    let n = y.len();
    if folds > n {
        return Err(Error::InvalidParameter(format!(
            "{folds} penalty folds for {n} rows"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::stream(spec.seed, u64::MAX));
    let mut label = vec![0usize; n];
    for (pos, &i) in order.iter().enumerate() {
        label[i] = pos % folds;
    }
    let mut loss = vec![0.0; grid.len()];
    for k in 0..folds {
        let train: Vec<usize> = (0..n).filter(|&i| label[i] != k).collect();
        let test: Vec<usize> = (0..n).filter(|&i| label[i] == k).collect();
        let xt = select_rows(x, &train);
        let yt = select(y, &train);
        let xv = select_rows(x, &test);
        for (slot, (model, _)) in loss.iter_mut().zip(fit_path(spec, &xt, &yt, grid)?) {
            *slot += model
                .predict(&xv)
                .iter()
                .zip(&test)
                .map(|(p, &i)| (p - y[i]).powi(2))
                .sum::<f64>();
        }
    }
    // Grid runs from strong to weak penalty, so ties keep the stronger one.
    let best = loss
        .iter()
        .enumerate()
        .fold(0, |b, (i, &l)| if l < loss[b] { i } else { b });
    Ok(grid[best])
}
