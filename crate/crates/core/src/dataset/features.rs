use std::collections::BTreeSet;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::ratings::{parse_rating_cell, TreatmentGranularity};
use super::ratios::{compute_intcov, compute_lda, compute_ldma};
use super::schema;
use super::table::RawTable;
use super::Dataset;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum OutcomeKind {
    Lda,
    Ldma,
}

impl std::str::FromStr for OutcomeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "LDA" => Ok(Self::Lda),
            "LDMA" => Ok(Self::Ldma),
            other => Err(Error::InvalidParameter(format!(
                "unknown outcome `{other}`"
            ))),
        }
    }
}

/// Which columns become covariates and how.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    pub outcome: OutcomeKind,
    pub granularity: TreatmentGranularity,
    /// Items divided by each scaling denominator.
    pub scaled_items: Vec<String>,
    pub scale_by: Vec<String>,
    /// Items entering as natural logs (size measures).
    pub log_items: Vec<String>,
    pub categorical: Vec<String>,
    pub sic_column: Option<String>,
    pub rating_column: String,
    pub include_intcov: bool,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            outcome: OutcomeKind::Lda,
            granularity: TreatmentGranularity::Any,
            scaled_items: schema::SCALED_ITEMS.iter().map(|s| s.to_string()).collect(),
            scale_by: vec![schema::SALES.into(), schema::ASSETS.into()],
            log_items: vec![schema::SALES.into(), schema::ASSETS.into()],
            categorical: schema::CATEGORICAL_ITEMS
                .iter()
                .map(|s| s.to_string())
                .collect(),
            sic_column: Some(schema::SIC.into()),
            rating_column: schema::RATING.into(),
            include_intcov: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreatmentEncoding {
    pub matrix: DMatrix<f64>,
    pub labels: Vec<String>,
}

/// One-hot rating dummies at the requested granularity. Unrated rows are
/// all zero; that category is the baseline and never gets a column.
pub fn encode_treatments(
    table: &RawTable,
    rating_column: &str,
    level: TreatmentGranularity,
) -> Result<TreatmentEncoding> {
    let col = table.require(rating_column)?;
    let labels: Vec<String> = level.labels().iter().map(|s| s.to_string()).collect();
    let mut matrix = DMatrix::zeros(table.row_count(), labels.len());
    for r in 0..table.row_count() {
        if let Some(rating) = parse_rating_cell(table.text(r, col))? {
            matrix[(r, level.column_of(rating))] = 1.0;
        }
    }
    Ok(TreatmentEncoding { matrix, labels })
}

fn imputed(table: &RawTable, row: usize, col: Option<usize>) -> f64 {
    col.and_then(|c| table.numeric(row, c)).unwrap_or(0.0)
}

struct DummyBlock {
    names: Vec<String>,
    /// Column within the block for each row.
    active: Vec<usize>,
}

/// Levels sorted lexically with an explicit trailing `missing` level.
fn dummy_block(prefix: &str, values: &[Option<String>]) -> DummyBlock {
    let levels: Vec<&str> = values
        .iter()
        .flatten()
        .map(String::as_str)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let missing = levels.len();
    let active = values
        .iter()
        .map(|v| match v {
            Some(v) => levels.binary_search(&v.as_str()).expect("level present"),
            None => missing,
        })
        .collect();
    let mut names: Vec<String> = levels.iter().map(|l| format!("{prefix}_{l}")).collect();
    names.push(format!("{prefix}_missing"));
    DummyBlock { names, active }
}

/// Builds the estimation dataset from a filtered table.
///
/// Covariates, in order: each scaled item divided by each denominator
/// (`item_by_denominator`, missing items imputed as zero), logs of the size
/// items (`log_item`), optional interest coverage, then dummy blocks for SIC
/// at 1-, 2- and 3-digit level and for each categorical column.
pub fn engineer_features(table: &RawTable, config: &FeatureConfig) -> Result<Dataset> {
    let n = table.row_count();
    let lookup = |name: &str| table.require(name);

    let dltt = lookup(schema::LONG_TERM_DEBT)?;
    let dlc = lookup(schema::SHORT_TERM_DEBT)?;
    let at = lookup(schema::ASSETS)?;
    let mut outcome = Vec::with_capacity(n);
    match config.outcome {
        OutcomeKind::Lda => {
            for r in 0..n {
                let assets = imputed(table, r, Some(at));
                outcome.push(compute_lda(
                    imputed(table, r, Some(dltt)),
                    imputed(table, r, Some(dlc)),
                    assets,
                )?);
            }
        }
        OutcomeKind::Ldma => {
            let ceq = lookup(schema::BOOK_EQUITY)?;
            let prcc = lookup(schema::PRICE_CLOSE)?;
            let csho = lookup(schema::SHARES_OUTSTANDING)?;
            for r in 0..n {
                let market = imputed(table, r, Some(prcc)) * imputed(table, r, Some(csho));
                outcome.push(compute_ldma(
                    imputed(table, r, Some(dltt)),
                    imputed(table, r, Some(dlc)),
                    imputed(table, r, Some(at)),
                    imputed(table, r, Some(ceq)),
                    market,
                )?);
            }
        }
    }

    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut names: Vec<String> = Vec::new();

    let denominators: Vec<(String, Vec<f64>)> = config
        .scale_by
        .iter()
        .map(|d| {
            let c = lookup(d)?;
            let vals: Vec<f64> = (0..n).map(|r| imputed(table, r, Some(c))).collect();
            if let Some(r) = vals.iter().position(|v| !(*v > 0.0)) {
                return Err(Error::Domain(format!(
                    "scaling denominator `{d}` is not positive in row {}",
                    r + 1
                )));
            }
            Ok((d.clone(), vals))
        })
        .collect::<Result<_>>()?;

    for item in &config.scaled_items {
        let c = lookup(item)?;
        let raw: Vec<f64> = (0..n).map(|r| imputed(table, r, Some(c))).collect();
        for (dname, dvals) in &denominators {
            columns.push(raw.iter().zip(dvals).map(|(v, d)| v / d).collect());
            names.push(format!("{item}_by_{dname}"));
        }
    }

    for item in &config.log_items {
        let c = lookup(item)?;
        let vals: Vec<f64> = (0..n).map(|r| imputed(table, r, Some(c))).collect();
        if let Some(r) = vals.iter().position(|v| !(*v > 0.0)) {
            return Err(Error::Domain(format!(
                "log item `{item}` is not positive in row {}",
                r + 1
            )));
        }
        columns.push(vals.iter().map(|v| v.ln()).collect());
        names.push(format!("log_{item}"));
    }

    if config.include_intcov {
        let ebitda = lookup(schema::EBITDA)?;
        let xint = lookup(schema::INTEREST_EXPENSE)?;
        let vals = (0..n)
            .map(|r| {
                compute_intcov(
                    imputed(table, r, Some(ebitda)),
                    imputed(table, r, Some(xint)),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        columns.push(vals);
        names.push("intcov".into());
    }

    let mut blocks = Vec::new();
    if let Some(sic_name) = &config.sic_column {
        let c = lookup(sic_name)?;
        for digits in 1..=3usize {
            let values: Vec<Option<String>> = (0..n)
                .map(|r| {
                    table
                        .text(r, c)
                        .filter(|s| s.len() >= digits && s.is_char_boundary(digits))
                        .map(|s| s[..digits].to_string())
                })
                .collect();
            blocks.push(dummy_block(&format!("sic{digits}"), &values));
        }
    }
    for cat in &config.categorical {
        let c = lookup(cat)?;
        let values: Vec<Option<String>> = (0..n)
            .map(|r| match table.cell(r, c) {
                super::Cell::Text(s) => Some(s.clone()),
                super::Cell::Num(v) => Some(v.to_string()),
                super::Cell::Missing => None,
            })
            .collect();
        blocks.push(dummy_block(cat, &values));
    }
    for block in blocks {
        let start = columns.len();
        for name in block.names {
            columns.push(vec![0.0; n]);
            names.push(name);
        }
        for (r, &k) in block.active.iter().enumerate() {
            columns[start + k][r] = 1.0;
        }
    }

    let covariates = DMatrix::from_fn(n, columns.len(), |r, c| columns[c][r]);
    let enc = encode_treatments(table, &config.rating_column, config.granularity)?;
    Dataset::new(outcome, enc.matrix, covariates, enc.labels, names, true)
}
