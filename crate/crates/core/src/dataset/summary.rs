use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::stats::{mean, quantile_sorted};
use crate::{Error, Result};

/// One row of an outcome summary. Statistics are `None` for empty groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub group: String,
    pub q1: Option<f64>,
    pub median: Option<f64>,
    pub mean: Option<f64>,
    pub q3: Option<f64>,
    pub count: usize,
    /// Fraction of all observations (not a percentage).
    pub share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryTable {
    pub rows: Vec<GroupSummary>,
}

pub const TOTAL_RATED: &str = "Total ratings";
pub const UNRATED: &str = "No rating";
pub const GRAND_TOTAL: &str = "Grand total";

fn summarize_group(name: &str, values: &mut [f64], total: usize) -> GroupSummary {
    values.sort_by(f64::total_cmp);
    let count = values.len();
    let stat = |f: &dyn Fn(&[f64]) -> f64| (count > 0).then(|| f(values));
    GroupSummary {
        group: name.to_string(),
        q1: stat(&|v| quantile_sorted(v, 0.25)),
        median: stat(&|v| quantile_sorted(v, 0.5)),
        mean: stat(&|v| mean(v)),
        q3: stat(&|v| quantile_sorted(v, 0.75)),
        count,
        share: if total == 0 {
            0.0
        } else {
            count as f64 / total as f64
        },
    }
}

/// Outcome quartiles, mean, count and share per treatment group, followed by
/// rated total, unrated and grand-total rows.
pub fn summarize(dataset: &Dataset, group_by: &[String]) -> Result<SummaryTable> {
    let n = dataset.n();
    let mut rows = Vec::with_capacity(group_by.len() + 3);
    for label in group_by {
        let j = dataset
            .treatment_names
            .iter()
            .position(|t| t == label)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown treatment label `{label}`")))?;
        let mut vals: Vec<f64> = (0..n)
            .filter(|&i| dataset.treatments[(i, j)] == 1.0)
            .map(|i| dataset.outcome[i])
            .collect();
        rows.push(summarize_group(label, &mut vals, n));
    }
    let rated: Vec<bool> = (0..n)
        .map(|i| dataset.treatments.row(i).iter().any(|&v| v == 1.0))
        .collect();
    let mut with: Vec<f64> = (0..n)
        .filter(|&i| rated[i])
        .map(|i| dataset.outcome[i])
        .collect();
    let mut without: Vec<f64> = (0..n)
        .filter(|&i| !rated[i])
        .map(|i| dataset.outcome[i])
        .collect();
    let mut all = dataset.outcome.clone();
    rows.push(summarize_group(TOTAL_RATED, &mut with, n));
    rows.push(summarize_group(UNRATED, &mut without, n));
    rows.push(summarize_group(GRAND_TOTAL, &mut all, n));
    Ok(SummaryTable { rows })
}

impl SummaryTable {
    /// Delimited text with full-precision numbers; absent statistics are empty.
    pub fn to_delimited(&self, delimiter: char) -> String {
        let d = delimiter;
        let mut out = format!("group{d}q1{d}median{d}mean{d}q3{d}count{d}share\n");
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rows {
            out.push_str(&format!(
                "{}{d}{}{d}{}{d}{}{d}{}{d}{}{d}{}\n",
                r.group,
                opt(r.q1),
                opt(r.median),
                opt(r.mean),
                opt(r.q3),
                r.count,
                r.share
            ));
        }
        out
    }

    pub fn row(&self, group: &str) -> Option<&GroupSummary> {
        self.rows.iter().find(|r| r.group == group)
    }
}
