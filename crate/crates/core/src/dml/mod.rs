//! Double/debiased estimation of the partially linear model: cross-fitted
//! residuals, the partialling-out score and repetition aggregation.

mod estimate;
mod oracle;
mod plan;
mod record;
mod score;

pub use estimate::{
    aggregate_repetitions, cross_fit, estimate, estimate_cached, estimate_dml1, estimate_dml2,
    fit_from_residuals, fit_multi, nuisance_covariates, propensity_task, residualize,
    residualize_cached, residuals_from_predictions, Algorithm, DmlFit, NuisanceCache,
    RepetitionFit,
};
pub use oracle::{fwl_oracle, naive_plugin};
pub use plan::CrossFitPlan;
pub use record::FitRecord;
pub use score::{solve_theta, standard_error, ResidualSet, ScoreFunction};
