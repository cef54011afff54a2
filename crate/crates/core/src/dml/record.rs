//! Flat per-treatment result rows.

use serde::{Deserialize, Serialize};

use super::estimate::{Algorithm, DmlFit};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub treatment: String,
    pub theta: f64,
    pub std_error: f64,
    pub t_value: f64,
    pub p_value: f64,
    pub folds: usize,
    pub repetitions: usize,
    pub algorithm: Algorithm,
    pub learner_g: String,
    pub learner_m: String,
}

impl FitRecord {
    pub fn from_fit(fit: &DmlFit, folds: usize, learner_g: &str, learner_m: &str) -> Self {
        Self {
            treatment: fit.treatment_name.clone(),
            theta: fit.theta,
            std_error: fit.std_error,
            t_value: fit.t_value,
            p_value: fit.p_value,
            folds,
            repetitions: fit.per_repetition.len(),
            algorithm: fit.algorithm,
            learner_g: learner_g.to_string(),
            learner_m: learner_m.to_string(),
        }
    }
}
