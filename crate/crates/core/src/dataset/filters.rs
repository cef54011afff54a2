use serde::{Deserialize, Serialize};

use super::schema::{
    ASSETS, INTEREST_EXPENSE, LONG_TERM_DEBT, SALES, SHORT_TERM_DEBT, SIC, STOCKHOLDERS_EQUITY,
};
use super::table::RawTable;
use crate::{Error, Result};

/// Sample construction rules. Money thresholds are in the unit named by the
/// field; table items are in millions of USD.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterRules {
    pub excluded_sic_prefixes: Vec<String>,
    pub min_sales_musd: f64,
    pub min_assets_musd: f64,
    pub require_nonneg_equity: bool,
    pub require_nonneg_debt: bool,
    pub min_interest_expense_kusd: Option<f64>,
}

impl Default for FilterRules {
    /// Financial (6xxx) and public (9xxx) sectors out, sales and assets of at
    /// least USD 1m, non-negative equity and total debt.
    fn default() -> Self {
        Self {
            excluded_sic_prefixes: vec!["6".into(), "9".into()],
            min_sales_musd: 1.0,
            min_assets_musd: 1.0,
            require_nonneg_equity: true,
            require_nonneg_debt: true,
            min_interest_expense_kusd: None,
        }
    }
}

impl FilterRules {
    /// Default rules plus the interest-coverage sample restriction
    /// (interest expense of at least USD 10k).
    pub fn with_interest_coverage() -> Self {
        Self {
            min_interest_expense_kusd: Some(10.0),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let thresholds = [
            self.min_sales_musd,
            self.min_assets_musd,
            self.min_interest_expense_kusd.unwrap_or(0.0),
        ];
        if thresholds.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(Error::InvalidParameter(
                "filter thresholds must be finite and non-negative".into(),
            ));
        }
        if self
            .excluded_sic_prefixes
            .iter()
            .any(|p| p.is_empty() || !p.chars().all(|c| c.is_ascii_digit()))
        {
            return Err(Error::InvalidParameter(
                "SIC prefixes must be non-empty digit strings".into(),
            ));
        }
        Ok(())
    }
}

/// Returns exactly the rows passing every rule, in their original order.
///
/// Filters see raw missingness: a missing sales or assets value cannot
/// satisfy a minimum and drops the row, a missing equity or debt item is not
/// evidence of a negative balance and keeps it. Missing interest expense fails
/// the interest rule when that rule is active.
pub fn apply_sample_filters(table: &RawTable, rules: &FilterRules) -> Result<RawTable> {
    rules.validate()?;
    let sic = table.require(SIC)?;
    let sale = table.require(SALES)?;
    let at = table.require(ASSETS)?;
    let seq = table.require(STOCKHOLDERS_EQUITY)?;
    let dltt = table.require(LONG_TERM_DEBT)?;
    let dlc = table.require(SHORT_TERM_DEBT)?;
    let xint = match rules.min_interest_expense_kusd {
        Some(_) => Some(table.require(INTEREST_EXPENSE)?),
        None => None,
    };

    Ok(table.retain(|r| {
        if let Some(code) = table.text(r, sic) {
            if rules
                .excluded_sic_prefixes
                .iter()
                .any(|p| code.starts_with(p.as_str()))
            {
                return false;
            }
        }
        let at_least = |col: usize, min: f64| table.numeric(r, col).is_some_and(|v| v >= min);
        if !at_least(sale, rules.min_sales_musd) || !at_least(at, rules.min_assets_musd) {
            return false;
        }
        if rules.require_nonneg_equity && table.numeric(r, seq).is_some_and(|v| v < 0.0) {
            return false;
        }
        if rules.require_nonneg_debt {
            let lt = table.numeric(r, dltt);
            let st = table.numeric(r, dlc);
            let negative_part = lt.is_some_and(|v| v < 0.0) || st.is_some_and(|v| v < 0.0);
            let total = lt.unwrap_or(0.0) + st.unwrap_or(0.0);
            if negative_part || total < 0.0 {
                return false;
            }
        }
        if let (Some(col), Some(min_k)) = (xint, rules.min_interest_expense_kusd) {
            if !at_least(col, min_k / 1000.0) {
                return false;
            }
        }
        true
    }))
}
