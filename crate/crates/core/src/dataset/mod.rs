//! Firm-year ingestion: delimited input, sample filters, leverage ratios,
//! feature engineering and treatment encoding.

mod features;
mod filters;
mod ratings;
mod ratios;
pub mod schema;
mod summary;
mod table;

pub use features::{
    encode_treatments, engineer_features, FeatureConfig, OutcomeKind, TreatmentEncoding,
};
pub use filters::{apply_sample_filters, FilterRules};
pub use ratings::{parse_rating_cell, BroadRating, Rating, TreatmentGranularity};
pub use ratios::{compute_intcov, compute_lda, compute_ldma};
pub use summary::{summarize, GroupSummary, SummaryTable};
pub use table::{load_csv, parse_csv, Cell, ColumnKind, ColumnSpec, RawTable};

use nalgebra::DMatrix;

use crate::{Error, Result};

/// Outcome, treatment dummies and covariates for one estimation sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub outcome: Vec<f64>,
    pub treatments: DMatrix<f64>,
    pub covariates: DMatrix<f64>,
    pub treatment_names: Vec<String>,
    pub covariate_names: Vec<String>,
    /// Whether treatment rows are one-hot or all-zero (rating categories).
    pub mutually_exclusive: bool,
}

impl Dataset {
    pub fn new(
        outcome: Vec<f64>,
        treatments: DMatrix<f64>,
        covariates: DMatrix<f64>,
        treatment_names: Vec<String>,
        covariate_names: Vec<String>,
        mutually_exclusive: bool,
    ) -> Result<Self> {
        let n = outcome.len();
        if treatments.nrows() != n || covariates.nrows() != n {
            return Err(Error::Dimension(format!(
                "outcome has {n} rows, treatments {}, covariates {}",
                treatments.nrows(),
                covariates.nrows()
            )));
        }
        if treatment_names.len() != treatments.ncols()
            || covariate_names.len() != covariates.ncols()
        {
            return Err(Error::Dimension(
                "column labels do not match matrix widths".into(),
            ));
        }
        if outcome
            .iter()
            .chain(covariates.iter())
            .any(|v| !v.is_finite())
        {
            return Err(Error::Domain(
                "non-finite value in outcome or covariates".into(),
            ));
        }
        if treatments.iter().any(|&v| v != 0.0 && v != 1.0) {
            return Err(Error::Domain("treatment entries must be 0 or 1".into()));
        }
        if mutually_exclusive && treatments.row_iter().any(|r| r.sum() > 1.0) {
            return Err(Error::Domain(
                "mutually exclusive treatments overlap in a row".into(),
            ));
        }
        Ok(Self {
            outcome,
            treatments,
            covariates,
            treatment_names,
            covariate_names,
            mutually_exclusive,
        })
    }

    pub fn n(&self) -> usize {
        self.outcome.len()
    }

    pub fn treatment(&self, j: usize) -> Vec<f64> {
        self.treatments.column(j).iter().copied().collect()
    }

    pub fn treated_count(&self, j: usize) -> usize {
        self.treatments
            .column(j)
            .iter()
            .filter(|&&v| v == 1.0)
            .count()
    }
}
