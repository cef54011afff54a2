//! Simultaneous inference over several treatment effects: multiplier
//! bootstrap bands and p-values, Romano-Wolf step-down, Holm and Bonferroni.

mod bootstrap;
mod stepdown;

pub use bootstrap::{bootstrap_statistics, multiplier_bootstrap, MultiplierResult, WeightScheme};
pub use stepdown::{bonferroni, holm, romano_wolf, romano_wolf_from_draws};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dml::DmlFit;
use crate::{stats, Error, Result};

/// Per-observation scores and the summaries needed to studentize them.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    /// n x p, one column per treatment.
    pub psi: DMatrix<f64>,
    pub jacobian: Vec<f64>,
    pub theta: Vec<f64>,
    pub std_error: Vec<f64>,
}

impl ScoreMatrix {
    pub fn new(
        psi: DMatrix<f64>,
        jacobian: Vec<f64>,
        theta: Vec<f64>,
        std_error: Vec<f64>,
    ) -> Result<Self> {
        let p = psi.ncols();
        if jacobian.len() != p || theta.len() != p || std_error.len() != p {
            return Err(Error::Dimension(format!(
                "score matrix has {p} columns but {} jacobians, {} estimates, {} standard errors",
                jacobian.len(),
                theta.len(),
                std_error.len()
            )));
        }
        if p == 0 || psi.nrows() < 2 {
            return Err(Error::InvalidParameter(
                "score matrix needs rows and columns".into(),
            ));
        }
        for j in 0..p {
            let col = psi.column(j);
            if col.iter().all(|&v| v == 0.0)
                || col.iter().any(|v| !v.is_finite())
                || !(jacobian[j] > 0.0)
                || !(std_error[j] > 0.0)
            {
                return Err(Error::DegenerateScore(j));
            }
        }
        Ok(Self {
            psi,
            jacobian,
            theta,
            std_error,
        })
    }

    /// Stacks the scores of fits estimated on the same rows.
    pub fn from_fits(fits: &[&DmlFit]) -> Result<Self> {
        let n = fits.first().map_or(0, |f| f.score_values.len());
        if fits.iter().any(|f| f.score_values.len() != n) {
            return Err(Error::Dimension(
                "fits were estimated on different samples".into(),
            ));
        }
        let psi = DMatrix::from_fn(n, fits.len(), |i, j| fits[j].score_values[i]);
        Self::new(
            psi,
            fits.iter().map(|f| f.j_hat).collect(),
            fits.iter().map(|f| f.theta).collect(),
            fits.iter().map(|f| f.std_error).collect(),
        )
    }

    pub fn n(&self) -> usize {
        self.psi.nrows()
    }

    pub fn p(&self) -> usize {
        self.psi.ncols()
    }

    pub fn t_values(&self) -> Vec<f64> {
        self.theta
            .iter()
            .zip(&self.std_error)
            .map(|(t, s)| t / s)
            .collect()
    }

    /// Columns with `order[k]` moved to position `k`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        Self::new(
            self.psi.select_columns(order),
            order.iter().map(|&j| self.jacobian[j]).collect(),
            order.iter().map(|&j| self.theta[j]).collect(),
            order.iter().map(|&j| self.std_error[j]).collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InferenceConfig {
    pub draws: usize,
    pub alpha: f64,
    pub seed: u64,
    pub weights: WeightScheme,
    /// Also report the standard deviation of the bootstrap draws as a
    /// standard error.
    pub bootstrap_se: bool,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        Self {
            draws: 2000,
            alpha: 0.05,
            seed: 0,
            weights: WeightScheme::Gaussian,
            bootstrap_se: false,
        }
    }
}

impl InferenceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.draws < 100 {
            return Err(Error::InvalidParameter(format!(
                "need at least 100 bootstrap draws, got {}",
                self.draws
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha {} outside (0, 1)",
                self.alpha
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjustedInference {
    pub theta: Vec<f64>,
    pub std_error: Vec<f64>,
    pub t_values: Vec<f64>,
    pub raw_p: Vec<f64>,
    pub mb_p: Vec<f64>,
    pub rowo_p: Vec<f64>,
    pub holm_p: Vec<f64>,
    pub bonf_p: Vec<f64>,
    pub joint_ci: Vec<(f64, f64)>,
    pub critical_value: f64,
    pub draws: usize,
    pub weights: WeightScheme,
    pub bootstrap_se: Option<Vec<f64>>,
}

impl AdjustedInference {
    /// Whether every true value lies inside the joint band.
    pub fn band_covers(&self, truth: &[f64]) -> bool {
        self.joint_ci
            .iter()
            .zip(truth)
            .all(|(&(lo, hi), &t)| lo <= t && t <= hi)
    }
}

/// Runs every adjustment from one set of bootstrap draws.
pub fn adjust(scores: &ScoreMatrix, config: &InferenceConfig) -> Result<AdjustedInference> {
    config.validate()?;
    let t_values = scores.t_values();
    let raw_p: Vec<f64> = t_values.iter().map(|&t| stats::two_sided_p(t)).collect();
    let draws = bootstrap_statistics(scores, config.draws, config.seed, config.weights)?;
    let mb = bootstrap::summarize(scores, &draws, config.alpha);
    let rowo_p = romano_wolf_from_draws(&t_values, &draws);
    Ok(AdjustedInference {
        theta: scores.theta.clone(),
        std_error: scores.std_error.clone(),
        holm_p: holm(&raw_p),
        bonf_p: bonferroni(&raw_p),
        t_values,
        raw_p,
        mb_p: mb.mb_p,
        rowo_p,
        joint_ci: mb.joint_ci,
        critical_value: mb.critical_value,
        draws: config.draws,
        weights: config.weights,
        bootstrap_se: config.bootstrap_se.then_some(mb.bootstrap_se),
    })
}
