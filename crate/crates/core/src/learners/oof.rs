//! Cross-fitted predictions.

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::{fit, LearnerSpec, Task};
use crate::linalg::{select, select_rows};
use crate::{rng, Error, Result};

/// Predicts every row from a model fitted on the rows outside its fold.
///
/// `folds[i]` is the fold label of row `i`; labels need not be contiguous.
/// Each fold's model seed is keyed by the smallest row index in the fold, so
/// relabelling the same partition gives identical output.
pub fn out_of_fold_predictions(
    spec: &LearnerSpec,
    x: &DMatrix<f64>,
    y: &[f64],
    task: Task,
    folds: &[usize],
) -> Result<Vec<f64>> {
    let n = y.len();
    if folds.len() != n || x.nrows() != n {
        return Err(Error::Dimension(format!(
            "{} fold labels, {} covariate rows, {} targets",
            folds.len(),
            x.nrows(),
            n
        )));
    }
    let mut labels: Vec<usize> = folds.to_vec();
    labels.sort_unstable();
    labels.dedup();

    let per_fold: Vec<(Vec<usize>, Vec<f64>)> = labels
        .par_iter()
        .map(|&label| {
            let test: Vec<usize> = (0..n).filter(|&i| folds[i] == label).collect();
            let train: Vec<usize> = (0..n).filter(|&i| folds[i] != label).collect();
            let run = || {
                if train.len() < 2 {
                    return Err(Error::InvalidParameter(format!(
                        "only {} training rows outside the fold",
                        train.len()
                    )));
                }
                let fold_spec = spec
                    .clone()
                    .with_seed(rng::derive(spec.seed, test[0] as u64));
                let model = fit(
                    &fold_spec,
                    &select_rows(x, &train),
                    &select(y, &train),
                    task,
                )?;
                model.predict(&select_rows(x, &test))
            };
            run().map(|pred| (test, pred)).map_err(|e| e.in_fold(label))
        })
        .collect::<Result<_>>()?;

    let mut out = vec![f64::NAN; n];
    for (rows, pred) in per_fold {
        for (i, p) in rows.into_iter().zip(pred) {
            out[i] = p;
        }
    }
    Ok(out)
}
