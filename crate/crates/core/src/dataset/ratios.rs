//! Leverage and coverage ratios.

use crate::{Error, Result};

/// Book leverage: total debt over total assets.
pub fn compute_lda(long_term_debt: f64, short_term_debt: f64, total_assets: f64) -> Result<f64> {
    if !(total_assets > 0.0) {
        return Err(Error::Domain(format!(
            "total assets must be positive, got {total_assets}"
        )));
    }
    if long_term_debt < 0.0 || short_term_debt < 0.0 {
        return Err(Error::Domain("debt items must be non-negative".into()));
    }
    Ok((long_term_debt + short_term_debt) / total_assets)
}

/// Quasi-market leverage: total debt over assets with book equity replaced
/// by market equity.
pub fn compute_ldma(
    long_term_debt: f64,
    short_term_debt: f64,
    total_assets: f64,
    book_equity: f64,
    market_equity: f64,
) -> Result<f64> {
    let denominator = total_assets - book_equity + market_equity;
    if !(denominator > 0.0) {
        return Err(Error::Domain(format!(
            "market-value denominator must be positive, got {denominator}"
        )));
    }
    if long_term_debt < 0.0 || short_term_debt < 0.0 {
        return Err(Error::Domain("debt items must be non-negative".into()));
    }
    Ok((long_term_debt + short_term_debt) / denominator)
}

/// Interest coverage, EBITDA over interest expense. Negative for loss makers.
pub fn compute_intcov(ebitda: f64, interest_expense: f64) -> Result<f64> {
    if !(interest_expense > 0.0) {
        return Err(Error::Domain(format!(
            "interest expense must be positive, got {interest_expense}"
        )));
    }
    Ok(ebitda / interest_expense)
}
