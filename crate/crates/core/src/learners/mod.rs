//! Nuisance learners behind one fit/predict interface: random forests for
//! regression and classification, OLS, ridge, lasso and a constant baseline.

mod forest;
mod linear;
mod oof;
mod presets;
mod tree;
mod tuning;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use forest::{fit_forest, Forest, ForestFit};
pub use linear::{fit_lasso, fit_ols, fit_ridge, LassoFit, LinearFit};
pub use oof::out_of_fold_predictions;
pub use presets::{preset, PRESET_NAMES};
pub use tree::{Criterion, Tree, TreeParams};
pub use tuning::Penalty;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    RandomForestReg,
    RandomForestClf,
    Lasso,
    Ridge,
    Ols,
    /// Predicts the training mean everywhere.
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Regression,
    BinaryClassification,
}

/// How many candidate features a forest node draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mtry {
    /// Exactly this many; must not exceed the column count.
    Fixed(usize),
    /// `floor(sqrt(p))`, at least one.
    Sqrt,
    /// This many when the design is wide enough, otherwise
    /// `min(cap, 4 * floor(sqrt(p)))` clamped to `p`.
    Capped(usize),
}

impl Mtry {
    pub fn resolve(self, p: usize) -> Result<usize> {
        let root = (p as f64).sqrt().floor() as usize;
        let m = match self {
            Mtry::Fixed(m) => {
                if m == 0 || m > p {
                    return Err(Error::InvalidParameter(format!("mtry {m} outside 1..={p}")));
                }
                m
            }
            Mtry::Sqrt => root.max(1),
            Mtry::Capped(cap) if p >= cap => cap,
            Mtry::Capped(cap) => cap.min(4 * root).clamp(1, p.max(1)),
        };
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparameters {
    pub num_trees: usize,
    pub mtry: Mtry,
    pub min_node_size: usize,
    /// `None` grows until nodes are pure or too small.
    pub max_depth: Option<usize>,
    pub penalty: Penalty,
    pub intercept: bool,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Self {
            num_trees: 500,
            mtry: Mtry::Sqrt,
            min_node_size: 5,
            max_depth: None,
            penalty: Penalty::Fixed(0.0),
            intercept: true,
            tol: 1e-7,
            max_iter: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerSpec {
    pub kind: LearnerKind,
    #[serde(default)]
    pub hyperparameters: Hyperparameters,
    #[serde(default)]
    pub seed: u64,
}

impl LearnerSpec {
    pub fn new(kind: LearnerKind) -> Self {
        Self {
            kind,
            hyperparameters: Hyperparameters::default(),
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn is_forest(&self) -> bool {
        matches!(
            self.kind,
            LearnerKind::RandomForestReg | LearnerKind::RandomForestClf
        )
    }

    pub fn validate(&self) -> Result<()> {
        let h = &self.hyperparameters;
        if self.is_forest() {
            if h.num_trees == 0 {
                return Err(Error::InvalidParameter(
                    "num_trees must be at least 1".into(),
                ));
            }
            if h.max_depth == Some(0) {
                return Err(Error::InvalidParameter(
                    "max_depth must be at least 1".into(),
                ));
            }
            if h.min_node_size == 0 {
                return Err(Error::InvalidParameter(
                    "min_node_size must be at least 1".into(),
                ));
            }
        }
        if matches!(self.kind, LearnerKind::Lasso | LearnerKind::Ridge) {
            h.penalty.validate()?;
            if !(h.tol > 0.0) || h.max_iter == 0 {
                return Err(Error::InvalidParameter(
                    "tol and max_iter must be positive".into(),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Out-of-bag R² for regression forests.
    pub oob_r2: Option<f64>,
    /// Out-of-bag accuracy at threshold 0.5 for classification forests.
    pub oob_accuracy: Option<f64>,
    pub selected_penalty: Option<f64>,
    pub converged: Option<bool>,
    pub iterations: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
enum State {
    Forest(Forest),
    Linear(LinearFit),
    Constant(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FittedModel {
    pub spec: LearnerSpec,
    pub task: Task,
    pub diagnostics: Diagnostics,
    n_features: usize,
    state: State,
}

fn check_inputs(x: &DMatrix<f64>, y: &[f64], task: Task) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(Error::Dimension(format!(
            "{} covariate rows vs {} targets",
            x.nrows(),
            y.len()
        )));
    }
    if y.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 training rows, got {}",
            y.len()
        )));
    }
    if y.iter().any(|v| !v.is_finite()) || x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite training data".into()));
    }
    if task == Task::BinaryClassification && y.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::Domain(
            "classification targets must be 0 or 1".into(),
        ));
    }
    Ok(())
}

pub fn fit(spec: &LearnerSpec, x: &DMatrix<f64>, y: &[f64], task: Task) -> Result<FittedModel> {
    spec.validate()?;
    check_inputs(x, y, task)?;
    let h = &spec.hyperparameters;
    let mut diagnostics = Diagnostics::default();
    let state = match spec.kind {
        LearnerKind::RandomForestReg | LearnerKind::RandomForestClf => {
            let criterion = if spec.kind == LearnerKind::RandomForestClf {
                if task != Task::BinaryClassification {
                    return Err(Error::InvalidParameter(
                        "classification forest needs a binary target".into(),
                    ));
                }
                Criterion::Gini
            } else {
                Criterion::Variance
            };
            let p = x.ncols();
            let mtry = if p == 0 { 1 } else { h.mtry.resolve(p)? };
            let params = TreeParams {
                max_depth: h.max_depth.unwrap_or(usize::MAX),
                min_node_size: h.min_node_size,
                mtry,
                criterion,
            };
            let fitted = fit_forest(x, y, h.num_trees, &params, spec.seed);
            record_oob(&mut diagnostics, &fitted.oob, y, criterion);
            State::Forest(fitted.forest)
        }
        LearnerKind::Ols => State::Linear(fit_ols(x, y, h.intercept)?),
        LearnerKind::Ridge | LearnerKind::Lasso => {
            let (lin, lambda, conv) = tuning::fit_penalized(spec, x, y)?;
            diagnostics.selected_penalty = Some(lambda);
            if let Some((iterations, converged)) = conv {
                diagnostics.iterations = Some(iterations);
                diagnostics.converged = Some(converged);
            }
            State::Linear(lin)
        }
        LearnerKind::Constant => State::Constant(y.iter().sum::<f64>() / y.len() as f64),
    };
    Ok(FittedModel {
        spec: spec.clone(),
        task,
        diagnostics,
        n_features: x.ncols(),
        state,
    })
}

fn record_oob(diag: &mut Diagnostics, oob: &[Option<f64>], y: &[f64], criterion: Criterion) {
    let pairs: Vec<(f64, f64)> = oob
        .iter()
        .zip(y)
        .filter_map(|(p, &t)| p.map(|p| (p, t)))
        .collect();
    if pairs.is_empty() {
        return;
    }
    let n = pairs.len() as f64;
    match criterion {
        Criterion::Variance => {
            let mean = pairs.iter().map(|p| p.1).sum::<f64>() / n;
            let sst: f64 = pairs.iter().map(|p| (p.1 - mean).powi(2)).sum();
            let sse: f64 = pairs.iter().map(|p| (p.1 - p.0).powi(2)).sum();
            if sst > 0.0 {
                diag.oob_r2 = Some(1.0 - sse / sst);
            }
        }
        Criterion::Gini => {
            let hits = pairs
                .iter()
                .filter(|(p, t)| f64::from(*p >= 0.5) == *t)
                .count();
            diag.oob_accuracy = Some(hits as f64 / n);
        }
    }
}

impl FittedModel {
    pub fn predict(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.n_features {
            return Err(Error::Dimension(format!(
                "model trained on {} columns, got {}",
                self.n_features,
                x.ncols()
            )));
        }
        let mut out = match &self.state {
            State::Forest(f) => f.predict(x),
            State::Linear(l) => l.predict(x),
            State::Constant(c) => vec![*c; x.nrows()],
        };
        if self.task == Task::BinaryClassification {
            out.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
        }
        Ok(out)
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Coefficients of a linear model, `None` for other kinds.
    pub fn linear(&self) -> Option<&LinearFit> {
        match &self.state {
            State::Linear(l) => Some(l),
            _ => None,
        }
    }

    pub fn forest(&self) -> Option<&Forest> {
        match &self.state {
            State::Forest(f) => Some(f),
            _ => None,
        }
    }
}
