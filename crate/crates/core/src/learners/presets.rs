//! Named learner configurations.

use super::{Hyperparameters, LearnerKind, LearnerSpec, Mtry, Penalty};
use crate::{Error, Result};

pub const PRESET_NAMES: &[&str] = &[
    "rf-g",
    "rf-m",
    "rf-g-restrained",
    "rf-m-restrained",
    "lasso-g",
    "ridge-g",
    "ols",
    "constant",
];

fn forest(depth: usize) -> Hyperparameters {
    Hyperparameters {
        num_trees: 500,
        mtry: Mtry::Capped(50),
        min_node_size: 10,
        max_depth: Some(depth),
        ..Hyperparameters::default()
    }
}

/// Looks up a preset by name.
pub fn preset(name: &str, seed: u64) -> Result<LearnerSpec> {
    use LearnerKind::*;
    let (kind, hyperparameters) = match name {
        "rf-g" => (RandomForestReg, forest(7)),
        "rf-m" => (RandomForestClf, forest(5)),
        "rf-g-restrained" => (RandomForestReg, forest(5)),
        "rf-m-restrained" => (RandomForestClf, forest(3)),
        "lasso-g" => (
            Lasso,
            Hyperparameters {
                penalty: Penalty::Auto {
                    points: 20,
                    folds: 3,
                },
                ..Hyperparameters::default()
            },
        ),
        "ridge-g" => (
            Ridge,
            Hyperparameters {
                penalty: Penalty::Auto {
                    points: 20,
                    folds: 3,
                },
                ..Hyperparameters::default()
            },
        ),
        "ols" => (Ols, Hyperparameters::default()),
        "constant" => (Constant, Hyperparameters::default()),
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown learner preset `{other}` (known: {})",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    Ok(LearnerSpec {
        kind,
        hyperparameters,
        seed,
    })
}
