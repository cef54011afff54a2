//! The bundled firm-year column layout.
//!
//! A subset of Compustat Fundamentals Annual items. Monetary items are in
//! millions of USD. Liability-side items (`dltt`, `dlc`, `seq`, `ceq`, `xint`)
//! feed the outcome and the sample filters but never the covariates.

use super::table::{ColumnKind, ColumnSpec};

pub const GVKEY: &str = "gvkey";
pub const FYEAR: &str = "fyear";
pub const SIC: &str = "sic";
pub const RATING: &str = "splticrm";
pub const SALES: &str = "sale";
pub const ASSETS: &str = "at";
pub const LONG_TERM_DEBT: &str = "dltt";
pub const SHORT_TERM_DEBT: &str = "dlc";
pub const STOCKHOLDERS_EQUITY: &str = "seq";
pub const BOOK_EQUITY: &str = "ceq";
pub const PRICE_CLOSE: &str = "prcc_f";
pub const SHARES_OUTSTANDING: &str = "csho";
pub const EBITDA: &str = "ebitda";
pub const INTEREST_EXPENSE: &str = "xint";

/// Asset-side, income and cash-flow items scaled by sales and by assets.
pub const SCALED_ITEMS: &[&str] = &[
    "che", "rect", "invt", "act", "ppent", "intan", "ao", "cogs", "xsga", "dp", "capx", "xrd",
    "txt", "ib", "oancf", "ivncf", "aqc", "dv",
];

/// Non-financial descriptors dummy-coded with an explicit missing level.
pub const CATEGORICAL_ITEMS: &[&str] = &[
    "auditor", "auop", "acctchg", "ceoso", "cfoso", "exchg", "fic", "stko",
];

pub fn fixture_schema() -> Vec<ColumnSpec> {
    let mut cols = vec![
        ColumnSpec::new(GVKEY, ColumnKind::Identifier),
        ColumnSpec::new(FYEAR, ColumnKind::Identifier),
        ColumnSpec::new(SIC, ColumnKind::Categorical),
        ColumnSpec::new(RATING, ColumnKind::Categorical),
    ];
    cols.extend(
        CATEGORICAL_ITEMS
            .iter()
            .map(|c| ColumnSpec::new(*c, ColumnKind::Categorical)),
    );
    for name in [
        SALES,
        ASSETS,
        LONG_TERM_DEBT,
        SHORT_TERM_DEBT,
        STOCKHOLDERS_EQUITY,
        BOOK_EQUITY,
        PRICE_CLOSE,
        SHARES_OUTSTANDING,
        EBITDA,
        INTEREST_EXPENSE,
    ] {
        cols.push(ColumnSpec::new(name, ColumnKind::Numeric));
    }
    cols.extend(
        SCALED_ITEMS
            .iter()
            .map(|c| ColumnSpec::new(*c, ColumnKind::Numeric)),
    );
    cols
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_schema_has_unique_names() {
        let s = fixture_schema();
        assert_eq!(s.len(), 40);
        let mut names: Vec<_> = s.iter().map(|c| c.name.as_str()).collect();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), s.len());
    }
}
