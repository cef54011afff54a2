//! Partially linear data-generating processes with known truth.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::{rng, Error, Result};

/// Functional form of a nuisance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Linear,
    /// Sinusoid, threshold and interaction terms.
    NonlinearSmooth,
    Step,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mechanism {
    SingleBinary,
    /// One-hot categories with an implicit all-zero base category.
    MutuallyExclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DgpConfig {
    pub n: usize,
    pub p_covariates: usize,
    /// One entry per treatment column.
    pub theta_true: Vec<f64>,
    pub g_shape: Shape,
    pub m_shape: Shape,
    /// Scales how strongly the covariates drive treatment assignment.
    pub confounding_strength: f64,
    pub noise_sd_y: f64,
    pub mechanism: Mechanism,
    /// Logit intercept of the binary mechanism, or of every category score
    /// relative to the base category.
    pub treatment_intercept: f64,
    /// Optional per-category intercepts overriding `treatment_intercept`.
    pub category_intercepts: Option<Vec<f64>>,
    /// Correlation between neighbouring covariates (AR(1) structure).
    pub covariate_correlation: f64,
    pub seed: u64,
}

impl Default for DgpConfig {
    fn default() -> Self {
        Self {
            n: 2000,
            p_covariates: 10,
            theta_true: vec![0.5],
            g_shape: Shape::NonlinearSmooth,
            m_shape: Shape::Step,
            confounding_strength: 0.75,
            noise_sd_y: 1.0,
            mechanism: Mechanism::SingleBinary,
            treatment_intercept: 0.0,
            category_intercepts: None,
            covariate_correlation: 0.5,
            seed: 0,
        }
    }
}

/// Smallest covariate count the shape functions need.
pub const MIN_COVARIATES: usize = 5;

impl DgpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidParameter(
                "need at least 2 observations".into(),
            ));
        }
        if self.p_covariates < MIN_COVARIATES {
            return Err(Error::InvalidParameter(format!(
                "need at least {MIN_COVARIATES} covariates, got {}",
                self.p_covariates
            )));
        }
        if self.theta_true.is_empty() {
            return Err(Error::InvalidParameter("theta_true is empty".into()));
        }
        if self.mechanism == Mechanism::SingleBinary && self.theta_true.len() != 1 {
            return Err(Error::InvalidParameter(
                "single binary mechanism takes exactly one effect".into(),
            ));
        }
        if let Some(c) = &self.category_intercepts {
            if c.len() != self.theta_true.len() {
                return Err(Error::InvalidParameter(
                    "category_intercepts must match theta_true".into(),
                ));
            }
        }
        let finite = [
            self.confounding_strength,
            self.noise_sd_y,
            self.treatment_intercept,
            self.covariate_correlation,
        ];
        if finite.iter().any(|v| !v.is_finite())
            || self.confounding_strength < 0.0
            || self.noise_sd_y < 0.0
            || self.covariate_correlation.abs() >= 1.0
        {
            return Err(Error::InvalidParameter("DGP scalars out of range".into()));
        }
        Ok(())
    }

    pub fn treatments(&self) -> usize {
        self.theta_true.len()
    }
}

/// Outcome nuisance g(x).
pub fn outcome_function(shape: Shape, x: &[f64]) -> f64 {
    match shape {
        Shape::Linear => x[0] - 0.5 * x[1] + 0.5 * x[2] + 0.25 * x[3] - 0.25 * x[4],
        Shape::NonlinearSmooth => {
            (std::f64::consts::PI * x[0] / 2.0).sin()
                + f64::from(x[1] > 0.0)
                + 0.5 * x[2] * x[3]
                + 0.25 * x[4]
        }
        Shape::Step => {
            f64::from(x[0] > 0.0) + f64::from(x[1] > 0.5) - f64::from(x[2] < -0.5)
                + 0.5 * f64::from(x[3] > 0.0)
        }
    }
}

/// Treatment index h(x) entering the assignment logit, centred near zero.
pub fn treatment_index(shape: Shape, x: &[f64]) -> f64 {
    match shape {
        Shape::Linear => 0.5 * x[0] - 0.5 * x[1] + 0.25 * x[2] + 0.25 * x[4],
        Shape::NonlinearSmooth => {
            (std::f64::consts::PI * x[0] / 2.0).sin() + f64::from(x[1] > 0.0) - 0.5
                + 0.25 * x[2] * x[4]
        }
        Shape::Step => f64::from(x[0] > 0.0) + f64::from(x[4] > 0.0) - 1.0,
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// The generating functions of a configuration, evaluable on any row.
#[derive(Debug, Clone, PartialEq)]
pub struct Truth {
    pub config: DgpConfig,
}

impl Truth {
    pub fn theta(&self) -> &[f64] {
        &self.config.theta_true
    }

    pub fn g(&self, x: &[f64]) -> f64 {
        outcome_function(self.config.g_shape, x)
    }

    /// Assignment probabilities for each treatment column; the base category
    /// has the remaining mass.
    pub fn propensities(&self, x: &[f64]) -> Vec<f64> {
        let c = &self.config;
        let h = treatment_index(c.m_shape, x);
        match c.mechanism {
            Mechanism::SingleBinary => {
                vec![sigmoid(c.treatment_intercept + c.confounding_strength * h)]
            }
            Mechanism::MutuallyExclusive => {
                let k = c.treatments();
                let scores: Vec<f64> = (0..k)
                    .map(|j| {
                        let alpha = c
                            .category_intercepts
                            .as_ref()
                            .map_or(c.treatment_intercept, |a| a[j]);
                        let tilt = if k == 1 {
                            1.0
                        } else {
                            -1.0 + 2.0 * j as f64 / (k - 1) as f64
                        };
                        alpha + c.confounding_strength * tilt * h
                    })
                    .collect();
                let top = scores.iter().copied().fold(0.0_f64, f64::max);
                let base = (-top).exp();
                let exps: Vec<f64> = scores.iter().map(|s| (s - top).exp()).collect();
                let total = base + exps.iter().sum::<f64>();
                exps.iter().map(|e| e / total).collect()
            }
        }
    }

    /// E[Y | X = x] for the outcome nuisance that partialling out estimates.
    pub fn outcome_mean(&self, x: &[f64]) -> f64 {
        self.g(x)
            + self
                .propensities(x)
                .iter()
                .zip(self.theta())
                .map(|(m, t)| m * t)
                .sum::<f64>()
    }
}

/// AR(1)-correlated standard normal covariates.
fn covariates(n: usize, p: usize, rho: f64, stream: &mut rng::StreamRng) -> DMatrix<f64> {
    let mut x = DMatrix::zeros(n, p);
    let innovation = (1.0 - rho * rho).sqrt();
    for i in 0..n {
        let mut prev: f64 = stream.sample(StandardNormal);
        x[(i, 0)] = prev;
        for j in 1..p {
            let e: f64 = stream.sample(StandardNormal);
            prev = rho * prev + innovation * e;
            x[(i, j)] = prev;
        }
    }
    x
}

pub fn generate(config: &DgpConfig) -> Result<(Dataset, Truth)> {
    config.validate()?;
    let (n, p, k) = (config.n, config.p_covariates, config.treatments());
    let truth = Truth {
        config: config.clone(),
    };
    let x = covariates(
        n,
        p,
        config.covariate_correlation,
        &mut rng::stream(config.seed, 0),
    );
    let mut assign = rng::stream(config.seed, 1);
    let mut noise = rng::stream(config.seed, 2);
    let mut d = DMatrix::zeros(n, k);
    let mut y = vec![0.0; n];
    let mut row = vec![0.0; p];
    for i in 0..n {
        for (j, v) in row.iter_mut().enumerate() {
            *v = x[(i, j)];
        }
        let probs = truth.propensities(&row);
        let u: f64 = assign.random();
        let mut acc = 0.0;
        for (j, pj) in probs.iter().enumerate() {
            acc += pj;
            if u < acc {
                d[(i, j)] = 1.0;
                break;
            }
        }
        let effect: f64 = (0..k).map(|j| config.theta_true[j] * d[(i, j)]).sum();
        let e: f64 = noise.sample(StandardNormal);
        y[i] = effect + truth.g(&row) + config.noise_sd_y * e;
    }
    let treatment_names = (0..k).map(|j| format!("d{}", j + 1)).collect();
    let covariate_names = (0..p).map(|j| format!("x{j}")).collect();
    let dataset = Dataset::new(y, d, x, treatment_names, covariate_names, true)?;
    Ok((dataset, truth))
}
