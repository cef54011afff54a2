//! Cross-fitted estimation for one or many treatments.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::plan::CrossFitPlan;
use super::score::{solve_theta, standard_error, ResidualSet};
use crate::dataset::Dataset;
use crate::learners::{self, LearnerKind, LearnerSpec, Task};
use crate::linalg::hstack;
use crate::{rng, stats, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    /// Average of per-fold solutions.
    Dml1,
    /// One solution on the pooled residuals.
    #[default]
    Dml2,
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dml1" => Ok(Algorithm::Dml1),
            "dml2" => Ok(Algorithm::Dml2),
            other => Err(Error::InvalidParameter(format!(
                "unknown algorithm `{other}`"
            ))),
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Algorithm::Dml1 => "dml1",
            Algorithm::Dml2 => "dml2",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepetitionFit {
    pub theta: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DmlFit {
    pub treatment_name: String,
    pub theta: f64,
    pub std_error: f64,
    pub t_value: f64,
    pub p_value: f64,
    /// Per-observation score at the fit's own estimate. After aggregation this
    /// is the average over repetitions of each repetition's scores.
    pub score_values: Vec<f64>,
    /// Mean squared treatment residual.
    pub j_hat: f64,
    pub algorithm: Algorithm,
    pub per_repetition: Vec<RepetitionFit>,
    pub warnings: Vec<String>,
}

fn t_and_p(theta: f64, se: f64) -> (f64, f64) {
    let t = if se > 0.0 { theta / se } else { f64::NAN };
    (t, stats::two_sided_p(t))
}

/// Task used for the treatment nuisance: classification forests see a binary
/// target, every other learner is fitted as a regression (linear probability
/// for the linear learners).
pub fn propensity_task(spec: &LearnerSpec) -> Task {
    if spec.kind == LearnerKind::RandomForestClf {
        Task::BinaryClassification
    } else {
        Task::Regression
    }
}

/// Covariates for the nuisances of treatment `j`: the other treatment
/// columns are appended.
pub fn nuisance_covariates(dataset: &Dataset, j: usize) -> DMatrix<f64> {
    let p = dataset.treatments.ncols();
    if p <= 1 {
        return dataset.covariates.clone();
    }
    let others: Vec<usize> = (0..p).filter(|&k| k != j).collect();
    let extra = dataset.treatments.select_columns(&others);
    hstack(&dataset.covariates, &extra)
}

/// Predictions for every row, out-of-fold unless the plan has a single fold,
/// in which case the model is fitted and evaluated on all rows.
pub fn cross_fit(
    spec: &LearnerSpec,
    x: &DMatrix<f64>,
    y: &[f64],
    task: Task,
    labels: &[usize],
) -> Result<Vec<f64>> {
    if labels.iter().all(|&l| l == labels[0]) {
        return learners::fit(spec, x, y, task)
            .and_then(|m| m.predict(x))
            .map_err(|e| e.in_fold(labels[0]));
    }
    learners::out_of_fold_predictions(spec, x, y, task, labels)
}

/// Learner seed for one nuisance of one treatment in one repetition.
fn nuisance_seed(
    spec: &LearnerSpec,
    repetition: usize,
    treatment: usize,
    which: u64,
) -> LearnerSpec {
    spec.clone().with_seed(rng::derive_path(
        spec.seed,
        &[repetition as u64, treatment as u64, which],
    ))
}

/// Cross-fitted nuisance predictions shared between estimators that use the
/// same learner, plan and treatment on the same dataset.
#[derive(Debug, Default)]
pub struct NuisanceCache {
    entries: Mutex<HashMap<String, Arc<Vec<f64>>>>,
}

impl NuisanceCache {
    pub fn new() -> Self {
        Self::default()
    }

    fn get_or_fit(
        &self,
        key: String,
        fit: impl FnOnce() -> Result<Vec<f64>>,
    ) -> Result<Arc<Vec<f64>>> {
        if let Some(hit) = self.entries.lock().expect("cache lock").get(&key) {
            return Ok(hit.clone());
        }
        let value = Arc::new(fit()?);
        self.entries
            .lock()
            .expect("cache lock")
            .insert(key, value.clone());
        Ok(value)
    }
}

#[allow(clippy::too_many_arguments)]
fn nuisance_predictions(
    cache: Option<&NuisanceCache>,
    spec: &LearnerSpec,
    x: &DMatrix<f64>,
    target: &[f64],
    task: Task,
    plan: &CrossFitPlan,
    repetition: usize,
    tag: &str,
) -> Result<Arc<Vec<f64>>> {
    let labels = plan.labels(repetition);
    let run = || cross_fit(spec, x, target, task, labels);
    match cache {
        None => run().map(Arc::new),
        Some(c) => {
            let key = format!(
                "{tag}|{spec:?}|{task:?}|{}|{}|{repetition}",
                plan.seed, plan.folds
            );
            c.get_or_fit(key, run)
        }
    }
}

pub fn residualize(
    dataset: &Dataset,
    treatment: usize,
    g_spec: &LearnerSpec,
    m_spec: &LearnerSpec,
    plan: &CrossFitPlan,
    repetition: usize,
) -> Result<ResidualSet> {
    residualize_cached(dataset, treatment, g_spec, m_spec, plan, repetition, None)
}

/// [`residualize`] that reuses predictions stored in `cache`. The cache must
/// only ever see one dataset.
pub fn residualize_cached(
    dataset: &Dataset,
    treatment: usize,
    g_spec: &LearnerSpec,
    m_spec: &LearnerSpec,
    plan: &CrossFitPlan,
    repetition: usize,
    cache: Option<&NuisanceCache>,
) -> Result<ResidualSet> {
    check_plan(dataset, plan)?;
    let x = nuisance_covariates(dataset, treatment);
    let d = dataset.treatment(treatment);
    let g = nuisance_seed(g_spec, repetition, treatment, 0);
    let m = nuisance_seed(m_spec, repetition, treatment, 1);
    let (y_tag, d_tag) = (format!("y{treatment}"), format!("d{treatment}"));
    let (l_hat, m_hat) = rayon::join(
        || {
            nuisance_predictions(
                cache,
                &g,
                &x,
                &dataset.outcome,
                Task::Regression,
                plan,
                repetition,
                &y_tag,
            )
        },
        || {
            nuisance_predictions(
                cache,
                &m,
                &x,
                &d,
                propensity_task(m_spec),
                plan,
                repetition,
                &d_tag,
            )
        },
    );
    residuals_from_predictions(
        &dataset.outcome,
        &d,
        &l_hat?,
        &m_hat?,
        plan.labels(repetition),
    )
}

pub fn residuals_from_predictions(
    y: &[f64],
    d: &[f64],
    l_hat: &[f64],
    m_hat: &[f64],
    labels: &[usize],
) -> Result<ResidualSet> {
    ResidualSet::new(
        y.iter().zip(l_hat).map(|(a, b)| a - b).collect(),
        d.iter().zip(m_hat).map(|(a, b)| a - b).collect(),
        labels.to_vec(),
    )
}

fn check_plan(dataset: &Dataset, plan: &CrossFitPlan) -> Result<()> {
    if plan.n != dataset.n() {
        return Err(Error::Dimension(format!(
            "plan covers {} rows, dataset has {}",
            plan.n,
            dataset.n()
        )));
    }
    Ok(())
}

/// Estimate from one repetition's residuals.
pub fn fit_from_residuals(name: &str, res: &ResidualSet, algorithm: Algorithm) -> Result<DmlFit> {
    let theta = match algorithm {
        Algorithm::Dml2 => solve_theta(res)?,
        Algorithm::Dml1 => {
            let ids = res.fold_ids();
            let mut sum = 0.0;
            for &k in &ids {
                sum += solve_theta(&res.fold(k)).map_err(|e| e.in_fold(k))?;
            }
            sum / ids.len() as f64
        }
    };
    let std_error = standard_error(res, theta)?;
    let (t_value, p_value) = t_and_p(theta, std_error);
    Ok(DmlFit {
        treatment_name: name.to_string(),
        theta,
        std_error,
        t_value,
        p_value,
        score_values: res.scores(theta),
        j_hat: res.jacobian(),
        algorithm,
        per_repetition: vec![RepetitionFit { theta, std_error }],
        warnings: Vec::new(),
    })
}

pub fn estimate_dml1(
    dataset: &Dataset,
    treatment: usize,
    g_spec: &LearnerSpec,
    m_spec: &LearnerSpec,
    plan: &CrossFitPlan,
    repetition: usize,
) -> Result<DmlFit> {
    let res = residualize(dataset, treatment, g_spec, m_spec, plan, repetition)?;
    fit_from_residuals(&dataset.treatment_names[treatment], &res, Algorithm::Dml1)
}

pub fn estimate_dml2(
    dataset: &Dataset,
    treatment: usize,
    g_spec: &LearnerSpec,
    m_spec: &LearnerSpec,
    plan: &CrossFitPlan,
    repetition: usize,
) -> Result<DmlFit> {
    let res = residualize(dataset, treatment, g_spec, m_spec, plan, repetition)?;
    fit_from_residuals(&dataset.treatment_names[treatment], &res, Algorithm::Dml2)
}

/// Median estimate across repetitions, with the between-repetition spread
/// added to each repetition's variance before taking the median.
pub fn aggregate_repetitions(fits: &[DmlFit]) -> Result<DmlFit> {
    let first = fits
        .first()
        .ok_or_else(|| Error::InvalidParameter("no repetitions to aggregate".into()))?;
    if fits.len() == 1 {
        return Ok(first.clone());
    }
    if fits
        .iter()
        .any(|f| f.treatment_name != first.treatment_name)
    {
        return Err(Error::InvalidParameter(
            "repetitions disagree on treatment".into(),
        ));
    }
    let n = first.score_values.len();
    if fits.iter().any(|f| f.score_values.len() != n) {
        return Err(Error::Dimension(
            "repetitions have different sample sizes".into(),
        ));
    }
    let thetas: Vec<f64> = fits.iter().map(|f| f.theta).collect();
    let theta = stats::median(&thetas);
    let spread: Vec<f64> = fits
        .iter()
        .map(|f| f.std_error.powi(2) + (f.theta - theta).powi(2))
        .collect();
    let std_error = stats::median(&spread).sqrt();
    let (t_value, p_value) = t_and_p(theta, std_error);
    let r = fits.len() as f64;
    let score_values = (0..n)
        .map(|i| fits.iter().map(|f| f.score_values[i]).sum::<f64>() / r)
        .collect();
    let mut warnings: Vec<String> = Vec::new();
    for w in fits.iter().flat_map(|f| &f.warnings) {
        if !warnings.contains(w) {
            warnings.push(w.clone());
        }
    }
    Ok(DmlFit {
        treatment_name: first.treatment_name.clone(),
        theta,
        std_error,
        t_value,
        p_value,
        score_values,
        j_hat: fits.iter().map(|f| f.j_hat).sum::<f64>() / r,
        algorithm: first.algorithm,
        per_repetition: fits.iter().flat_map(|f| f.per_repetition.clone()).collect(),
        warnings,
    })
}

/// Folds (by repetition) in which a treatment has no treated rows.
fn empty_fold_warnings(dataset: &Dataset, treatment: usize, plan: &CrossFitPlan) -> Vec<String> {
    let d = dataset.treatments.column(treatment);
    let mut out = Vec::new();
    for r in 0..plan.repetitions() {
        let mut treated = vec![0usize; plan.folds];
        for (i, &k) in plan.labels(r).iter().enumerate() {
            if d[i] == 1.0 {
                treated[k] += 1;
            }
        }
        for (k, &c) in treated.iter().enumerate() {
            if c == 0 {
                out.push(format!(
                    "treatment `{}` has no treated rows in fold {k} of repetition {r}",
                    dataset.treatment_names[treatment]
                ));
            }
        }
    }
    out
}

/// Full estimate for one treatment over every repetition of the plan.
pub fn estimate(
    dataset: &Dataset,
    treatment: usize,
    g_spec: &LearnerSpec,
    m_spec: &LearnerSpec,
    plan: &CrossFitPlan,
    algorithm: Algorithm,
) -> Result<DmlFit> {
    estimate_cached(dataset, treatment, g_spec, m_spec, plan, algorithm, None)
}

pub fn estimate_cached(
    dataset: &Dataset,
    treatment: usize,
    g_spec: &LearnerSpec,
    m_spec: &LearnerSpec,
    plan: &CrossFitPlan,
    algorithm: Algorithm,
    cache: Option<&NuisanceCache>,
) -> Result<DmlFit> {
    if treatment >= dataset.treatments.ncols() {
        return Err(Error::InvalidParameter(format!(
            "no treatment column {treatment}"
        )));
    }
    let treated = dataset.treated_count(treatment);
    if treated < 2 {
        return Err(Error::InsufficientTreated {
            name: dataset.treatment_names[treatment].clone(),
            count: treated,
        });
    }
    check_plan(dataset, plan)?;
    let name = &dataset.treatment_names[treatment];
    let fits = (0..plan.repetitions())
        .into_par_iter()
        .map(|r| {
            let res = residualize_cached(dataset, treatment, g_spec, m_spec, plan, r, cache)?;
            fit_from_residuals(name, &res, algorithm)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut fit = aggregate_repetitions(&fits)?;
    fit.warnings = empty_fold_warnings(dataset, treatment, plan);
    Ok(fit)
}

/// One estimate per requested treatment; failures stay with their treatment.
pub fn fit_multi(
    dataset: &Dataset,
    treatments: &[usize],
    g_spec: &LearnerSpec,
    m_spec: &LearnerSpec,
    plan: &CrossFitPlan,
    algorithm: Algorithm,
) -> Vec<Result<DmlFit>> {
    treatments
        .par_iter()
        .map(|&j| estimate(dataset, j, g_spec, m_spec, plan, algorithm))
        .collect()
}
