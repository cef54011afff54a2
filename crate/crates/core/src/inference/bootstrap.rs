//! Multiplier bootstrap of studentized scores.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ScoreMatrix;
use crate::{rng, stats, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightScheme {
    #[default]
    Gaussian,
    Rademacher,
    /// Two-point weights with mean 0 and unit second and third moments.
    Mammen,
}

impl std::str::FromStr for WeightScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(WeightScheme::Gaussian),
            "rademacher" => Ok(WeightScheme::Rademacher),
            "mammen" => Ok(WeightScheme::Mammen),
            other => Err(Error::InvalidParameter(format!(
                "unknown weight scheme `{other}`"
            ))),
        }
    }
}

impl WeightScheme {
    pub(crate) fn draw(self, rng: &mut rng::StreamRng) -> f64 {
        match self {
            WeightScheme::Gaussian => rng.sample(StandardNormal),
            WeightScheme::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            WeightScheme::Mammen => {
                let s5 = 5f64.sqrt();
                let p = (s5 + 1.0) / (2.0 * s5);
                if rng.random::<f64>() < p {
                    -(s5 - 1.0) / 2.0
                } else {
                    (s5 + 1.0) / 2.0
                }
            }
        }
    }
}

/// Bootstrap t-statistics, one row per draw and one column per treatment:
/// `T[b, j] = sum_i xi[b, i] * psi[i, j] / (n * J_j * SE_j)`.
pub fn bootstrap_statistics(
    scores: &ScoreMatrix,
    draws: usize,
    seed: u64,
    weights: WeightScheme,
) -> Result<DMatrix<f64>> {
    if draws == 0 {
        return Err(Error::InvalidParameter(
            "need at least one bootstrap draw".into(),
        ));
    }
    let (n, p) = (scores.n(), scores.p());
    let scaled: Vec<Vec<f64>> = (0..p)
        .map(|j| {
            let denom = n as f64 * scores.jacobian[j] * scores.std_error[j];
            scores.psi.column(j).iter().map(|v| v / denom).collect()
        })
        .collect();
    let rows: Vec<Vec<f64>> = (0..draws)
        .into_par_iter()
        .map(|b| {
            let mut stream = rng::stream(seed, b as u64);
            let xi: Vec<f64> = (0..n).map(|_| weights.draw(&mut stream)).collect();
            scaled
                .iter()
                .map(|col| col.iter().zip(&xi).map(|(a, b)| a * b).sum())
                .collect()
        })
        .collect();
    Ok(DMatrix::from_fn(draws, p, |b, j| rows[b][j]))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierResult {
    pub mb_p: Vec<f64>,
    pub critical_value: f64,
    pub joint_ci: Vec<(f64, f64)>,
    pub bootstrap_se: Vec<f64>,
}

/// Share of draws at or above `stat`, never below `1 / draws`.
pub(crate) fn exceedance(sorted_max: &[f64], stat: f64) -> f64 {
    let b = sorted_max.len();
    let below = sorted_max.partition_point(|&m| m < stat);
    ((b - below) as f64 / b as f64).max(1.0 / b as f64)
}

pub(crate) fn summarize(
    scores: &ScoreMatrix,
    draws: &DMatrix<f64>,
    alpha: f64,
) -> MultiplierResult {
    let mut max_abs: Vec<f64> = draws
        .row_iter()
        .map(|r| r.iter().fold(0.0_f64, |m, v| m.max(v.abs())))
        .collect();
    max_abs.sort_by(f64::total_cmp);
    let critical_value = stats::quantile_sorted(&max_abs, 1.0 - alpha);
    let mb_p = scores
        .t_values()
        .iter()
        .map(|t| exceedance(&max_abs, t.abs()))
        .collect();
    let joint_ci = scores
        .theta
        .iter()
        .zip(&scores.std_error)
        .map(|(t, s)| (t - critical_value * s, t + critical_value * s))
        .collect();
    let bootstrap_se = draws
        .column_iter()
        .zip(&scores.std_error)
        .map(|(c, s)| {
            let v: Vec<f64> = c.iter().copied().collect();
            stats::sample_sd(&v) * s
        })
        .collect();
    MultiplierResult {
        mb_p,
        critical_value,
        joint_ci,
        bootstrap_se,
    }
}

/// Single-step max-t p-values and the joint confidence band.
pub fn multiplier_bootstrap(
    scores: &ScoreMatrix,
    draws: usize,
    alpha: f64,
    seed: u64,
    weights: WeightScheme,
) -> Result<MultiplierResult> {
    if draws < 100 {
        return Err(Error::InvalidParameter(format!(
            "need at least 100 bootstrap draws, got {draws}"
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha {alpha} outside (0, 1)"
        )));
    }
    let stats = bootstrap_statistics(scores, draws, seed, weights)?;
    Ok(summarize(scores, &stats, alpha))
}
