//! The partialling-out score and the estimators built on it.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreFunction {
    /// `psi = (y_resid - theta * d_resid) * d_resid`.
    #[default]
    PartiallingOut,
}

impl ScoreFunction {
    #[inline]
    pub fn evaluate(self, y_resid: f64, d_resid: f64, theta: f64) -> f64 {
        match self {
            ScoreFunction::PartiallingOut => (y_resid - theta * d_resid) * d_resid,
        }
    }

    /// Derivative of the score in `theta`, negated.
    #[inline]
    pub fn jacobian(self, d_resid: f64) -> f64 {
        match self {
            ScoreFunction::PartiallingOut => d_resid * d_resid,
        }
    }
}

/// Out-of-fold residuals of outcome and treatment for one repetition.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualSet {
    pub y_resid: Vec<f64>,
    pub d_resid: Vec<f64>,
    pub fold_labels: Vec<usize>,
}

impl ResidualSet {
    pub fn new(y_resid: Vec<f64>, d_resid: Vec<f64>, fold_labels: Vec<usize>) -> Result<Self> {
        let n = y_resid.len();
        if d_resid.len() != n || fold_labels.len() != n {
            return Err(Error::Dimension(format!(
                "residual lengths {n}, {}, labels {}",
                d_resid.len(),
                fold_labels.len()
            )));
        }
        if y_resid.iter().chain(&d_resid).any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite residual".into()));
        }
        Ok(Self {
            y_resid,
            d_resid,
            fold_labels,
        })
    }

    pub fn len(&self) -> usize {
        self.y_resid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y_resid.is_empty()
    }

    /// Residuals restricted to one fold.
    pub fn fold(&self, label: usize) -> ResidualSet {
        let keep: Vec<usize> = (0..self.len())
            .filter(|&i| self.fold_labels[i] == label)
            .collect();
        ResidualSet {
            y_resid: keep.iter().map(|&i| self.y_resid[i]).collect(),
            d_resid: keep.iter().map(|&i| self.d_resid[i]).collect(),
            fold_labels: vec![label; keep.len()],
        }
    }

    pub fn fold_ids(&self) -> Vec<usize> {
        let mut ids = self.fold_labels.clone();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    pub fn scores(&self, theta: f64) -> Vec<f64> {
        self.y_resid
            .iter()
            .zip(&self.d_resid)
            .map(|(&y, &d)| ScoreFunction::PartiallingOut.evaluate(y, d, theta))
            .collect()
    }

    /// Mean squared treatment residual.
    pub fn jacobian(&self) -> f64 {
        self.d_resid.iter().map(|d| d * d).sum::<f64>() / self.len() as f64
    }
}

fn zero_variance(sum_sq: f64, n: usize, scale: f64) -> bool {
    !(sum_sq > 1e-14 * n as f64 * scale.max(f64::MIN_POSITIVE))
}

/// No-intercept slope of outcome residuals on treatment residuals.
pub fn solve_theta(res: &ResidualSet) -> Result<f64> {
    let (mut sdd, mut sdy) = (0.0, 0.0);
    for (&y, &d) in res.y_resid.iter().zip(&res.d_resid) {
        sdd += d * d;
        sdy += d * y;
    }
    if res.is_empty() || zero_variance(sdd, res.len(), 1.0) {
        return Err(Error::ZeroTreatmentVariance);
    }
    Ok(sdy / sdd)
}

/// Sandwich standard error `sqrt(mean(psi^2) / (J^2 n))`.
pub fn standard_error(res: &ResidualSet, theta: f64) -> Result<f64> {
    let n = res.len();
    if n < 2 {
        return Err(Error::InvalidParameter(
            "standard error needs at least 2 rows".into(),
        ));
    }
    let j = res.jacobian();
    if zero_variance(j * n as f64, n, 1.0) {
        return Err(Error::ZeroTreatmentVariance);
    }
    let psi2 = res.scores(theta).iter().map(|s| s * s).sum::<f64>() / n as f64;
    Ok((psi2 / (j * j * n as f64)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(y: &[f64], d: &[f64]) -> ResidualSet {
        ResidualSet::new(y.to_vec(), d.to_vec(), vec![0; y.len()]).unwrap()
    }

    #[test]
    fn exact_multiple() {
        let d = [0.5, -1.0, 2.0, 0.1];
        let y: Vec<f64> = d.iter().map(|v| 2.0 * v).collect();
        assert_eq!(solve_theta(&set(&y, &d)).unwrap(), 2.0);
    }

    #[test]
    fn orthogonal_residuals_give_zero() {
        let res = set(&[1.0, 1.0, -1.0, -1.0], &[1.0, -1.0, 1.0, -1.0]);
        assert_eq!(solve_theta(&res).unwrap(), 0.0);
    }

    #[test]
    fn five_point_ratio() {
        let y = [0.3, -0.2, 0.8, -0.5, 0.1];
        let d = [0.4, -0.1, 0.6, -0.7, 0.2];
        // sum d*y = 0.12 + 0.02 + 0.48 + 0.35 + 0.02 = 0.99
        // sum d^2 = 0.16 + 0.01 + 0.36 + 0.49 + 0.04 = 1.06
        let theta = solve_theta(&set(&y, &d)).unwrap();
        assert!((theta - 0.99 / 1.06).abs() < 1e-15);
    }

    #[test]
    fn zero_treatment_residual_is_an_error() {
        let err = solve_theta(&set(&[1.0, 2.0], &[0.0, 0.0])).unwrap_err();
        assert!(matches!(err, Error::ZeroTreatmentVariance));
        assert_eq!(err.to_string(), "treatment fully explained by covariates");
        assert!(standard_error(&set(&[1.0, 2.0], &[0.0, 0.0]), 0.0).is_err());
    }

    #[test]
    fn score_sums_to_zero_at_solution() {
        let y = [0.3, -0.2, 0.8, -0.5, 0.1, 2.0];
        let d = [0.4, -0.1, 0.6, -0.7, 0.2, -0.3];
        let res = set(&y, &d);
        let theta = solve_theta(&res).unwrap();
        assert!(res.scores(theta).iter().sum::<f64>().abs() < 1e-14);
    }

    #[test]
    fn standard_error_homogeneity_and_duplication() {
        let y = [0.3, -0.2, 0.8, -0.5, 0.1, 2.0];
        let d = [0.4, -0.1, 0.6, -0.7, 0.2, -0.3];
        let res = set(&y, &d);
        let theta = solve_theta(&res).unwrap();
        let se = standard_error(&res, theta).unwrap();

        let scaled = set(&y.map(|v| 3.0 * v), &d);
        let se3 = standard_error(&scaled, solve_theta(&scaled).unwrap()).unwrap();
        assert!((se3 - 3.0 * se).abs() < 1e-14);

        let yy: Vec<f64> = y.iter().chain(&y).copied().collect();
        let dd: Vec<f64> = d.iter().chain(&d).copied().collect();
        let doubled = set(&yy, &dd);
        let se_d = standard_error(&doubled, solve_theta(&doubled).unwrap()).unwrap();
        assert!((se_d * se_d - se * se / 2.0).abs() < 1e-15);
    }

    #[test]
    fn matches_hc0_of_residual_regression() {
        let y = [1.2, -0.7, 0.4, 2.2, -1.9, 0.05, 0.9, -0.3];
        let d = [0.9, -0.4, 0.1, 1.1, -1.3, 0.2, 0.3, -0.6];
        let res = set(&y, &d);
        let theta = solve_theta(&res).unwrap();
        // HC0 for a one-regressor no-intercept OLS: sum(d^2 e^2) / (sum d^2)^2.
        let sdd: f64 = d.iter().map(|v| v * v).sum();
        let meat: f64 = y
            .iter()
            .zip(&d)
            .map(|(y, d)| (d * (y - theta * d)).powi(2))
            .sum();
        let hc0 = (meat / (sdd * sdd)).sqrt();
        assert!((standard_error(&res, theta).unwrap() - hc0).abs() < 1e-10);
    }
}
