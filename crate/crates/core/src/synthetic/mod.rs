//! Synthetic partially linear data with known effects, Monte Carlo studies
//! of the estimators, and an exact check of score orthogonality.

mod dgp;
mod orthogonality;
mod study;

pub use dgp::{
    generate, outcome_function, treatment_index, DgpConfig, Mechanism, Shape, Truth, MIN_COVARIATES,
};
pub use orthogonality::{
    outcome_direction, score_sensitivity, treatment_direction, OrthogonalityCheck, Sensitivity,
};
pub use study::{
    heterogeneity_study, run_study, EstimateRecord, EstimatorConfig, EstimatorSummary, FwerSummary,
    HeterogeneityReport, McReport, Method, OrderingSummary, RepRecord, StudyConfig,
    TreatmentSummary, MAX_FAILURE_RATE, ORDERING_GAP_SES,
};
