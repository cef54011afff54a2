//! Result files written by `estimate` and read back by `report`.
//!
//! Delimited and JSON artifacts carry full precision. The `.txt` renderings
//! show coefficients to 4 decimals and p-values to 3.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use ratingdml::dml::FitRecord;
use ratingdml::inference::AdjustedInference;
use serde::{Deserialize, Serialize};

pub const FITS_CSV: &str = "fits.csv";
pub const FITS_JSON: &str = "fits.json";
pub const FITS_TXT: &str = "fits.txt";
pub const INFERENCE_CSV: &str = "inference.csv";
pub const INFERENCE_JSON: &str = "inference.json";
pub const INFERENCE_TXT: &str = "inference.txt";
pub const PLOT_CSV: &str = "plot.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailedFit {
    pub treatment: String,
    pub error: String,
}

/// Per-treatment outcome of one estimate run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitTable {
    pub observations: usize,
    pub records: Vec<FitRecord>,
    #[serde(default)]
    pub failures: Vec<FailedFit>,
    /// Treated rows per record, in record order.
    pub treated: Vec<usize>,
}

/// One row of the simultaneous-inference table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceRow {
    pub label: String,
    pub coefficient: f64,
    /// Sandwich standard error unless the bootstrap SD was requested.
    pub mb_std_error: f64,
    pub raw_p: f64,
    pub mb_p: f64,
    pub rowo_p: f64,
    pub holm_p: f64,
    pub bonf_p: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    pub observations: usize,
    pub share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceTable {
    pub draws: usize,
    pub critical_value: f64,
    pub rows: Vec<InferenceRow>,
}

impl InferenceTable {
    pub fn new(labels: &[String], treated: &[usize], n: usize, adj: &AdjustedInference) -> Self {
        let se = adj.bootstrap_se.as_ref().unwrap_or(&adj.std_error);
        let rows = labels
            .iter()
            .enumerate()
            .map(|(j, label)| InferenceRow {
                label: label.clone(),
                coefficient: adj.theta[j],
                mb_std_error: se[j],
                raw_p: adj.raw_p[j],
                mb_p: adj.mb_p[j],
                rowo_p: adj.rowo_p[j],
                holm_p: adj.holm_p[j],
                bonf_p: adj.bonf_p[j],
                ci_lower: adj.joint_ci[j].0,
                ci_upper: adj.joint_ci[j].1,
                observations: treated[j],
                share: treated[j] as f64 / n as f64,
            })
            .collect();
        Self {
            draws: adj.draws,
            critical_value: adj.critical_value,
            rows,
        }
    }
}

/// Parses the JSON fit table written by `estimate`.
pub fn parse_fit_table(text: &str) -> Result<FitTable> {
    let table: FitTable = serde_json::from_str(text).context("malformed fit records")?;
    if table.treated.len() != table.records.len() {
        bail!(
            "fit records list {} treated counts for {} records",
            table.treated.len(),
            table.records.len()
        );
    }
    for r in &table.records {
        if r.treatment.is_empty() {
            bail!("fit record without a treatment label");
        }
        if !(r.theta.is_finite() && r.std_error.is_finite() && r.std_error >= 0.0) {
            bail!("fit record `{}` has non-finite estimates", r.treatment);
        }
    }
    Ok(table)
}

pub fn parse_inference_table(text: &str) -> Result<InferenceTable> {
    serde_json::from_str(text).context("malformed inference table")
}

pub fn read_fit_table(dir: &Path) -> Result<FitTable> {
    let path = dir.join(FITS_JSON);
    let text = std::fs::read_to_string(&path)
        .with_context(|| format!("missing artifact {}", path.display()))?;
    parse_fit_table(&text).with_context(|| format!("in {}", path.display()))
}

pub fn read_inference_table(dir: &Path) -> Result<Option<InferenceTable>> {
    let path = dir.join(INFERENCE_JSON);
    if !path.exists() {
        return Ok(None);
    }
    let text = std::fs::read_to_string(&path)?;
    parse_inference_table(&text)
        .with_context(|| format!("in {}", path.display()))
        .map(Some)
}

pub fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn csv_string(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

pub fn fits_csv(table: &FitTable) -> Result<String> {
    let n = table.observations;
    let ok = table.records.iter().zip(&table.treated).map(|(r, &t)| {
        vec![
            r.treatment.clone(),
            r.theta.to_string(),
            r.std_error.to_string(),
            r.t_value.to_string(),
            r.p_value.to_string(),
            r.folds.to_string(),
            r.repetitions.to_string(),
            r.algorithm.to_string(),
            r.learner_g.clone(),
            r.learner_m.clone(),
            t.to_string(),
            (t as f64 / n as f64).to_string(),
            "ok".into(),
        ]
    });
    let failed = table.failures.iter().map(|f| {
        let mut row = vec![f.treatment.clone()];
        row.extend(std::iter::repeat_n(String::new(), 11));
        row.push(f.error.clone());
        row
    });
    csv_string(
        &[
            "treatment",
            "theta",
            "std_error",
            "t_value",
            "p_value",
            "folds",
            "repetitions",
            "algorithm",
            "learner_g",
            "learner_m",
            "observations",
            "share",
            "status",
        ],
        ok.chain(failed),
    )
}

pub fn inference_csv(table: &InferenceTable) -> Result<String> {
    csv_string(
        &[
            "label",
            "coefficient",
            "mb_std_error",
            "mb_p",
            "rowo_p",
            "bonf_p",
            "holm_p",
            "raw_p",
            "ci_lower",
            "ci_upper",
            "observations",
            "share",
        ],
        table.rows.iter().map(|r| {
            vec![
                r.label.clone(),
                r.coefficient.to_string(),
                r.mb_std_error.to_string(),
                r.mb_p.to_string(),
                r.rowo_p.to_string(),
                r.bonf_p.to_string(),
                r.holm_p.to_string(),
                r.raw_p.to_string(),
                r.ci_lower.to_string(),
                r.ci_upper.to_string(),
                r.observations.to_string(),
                r.share.to_string(),
            ]
        }),
    )
}

/// Bar-chart series: one bar per label with its multiplier-bootstrap p-value.
pub fn plot_csv(labels: &[String], estimates: &[f64], mb_p: &[f64]) -> Result<String> {
    csv_string(
        &["label", "estimate", "mb_p"],
        labels
            .iter()
            .zip(estimates)
            .zip(mb_p)
            .map(|((l, e), p)| vec![l.clone(), e.to_string(), p.to_string()]),
    )
}

pub fn fits_text(table: &FitTable) -> String {
    let mut out = String::new();
    let width = table
        .records
        .iter()
        .map(|r| r.treatment.len())
        .chain(table.failures.iter().map(|f| f.treatment.len()))
        .chain(std::iter::once(9))
        .max()
        .unwrap_or(9);
    let _ = writeln!(
        out,
        "{:<width$}  {:>10}  {:>10}  {:>9}  {:>7}  {:>6}  {:>7}",
        "treatment", "estimate", "std.err", "t-value", "p-value", "obs", "share"
    );
    for (r, &t) in table.records.iter().zip(&table.treated) {
        let _ = writeln!(
            out,
            "{:<width$}  {:>10.4}  {:>10.4}  {:>9.2}  {:>7.3}  {:>6}  {:>7.4}",
            r.treatment,
            r.theta,
            r.std_error,
            r.t_value,
            r.p_value,
            t,
            t as f64 / table.observations as f64
        );
    }
    for f in &table.failures {
        let _ = writeln!(out, "{:<width$}  failed: {}", f.treatment, f.error);
    }
    if let Some(r) = table.records.first() {
        let _ = writeln!(
            out,
            "\n{} observations; {}, K = {}, R = {}; g: {}, m: {}",
            table.observations, r.algorithm, r.folds, r.repetitions, r.learner_g, r.learner_m
        );
    }
    out
}

pub fn inference_text(table: &InferenceTable) -> String {
    let mut out = String::new();
    let width = table
        .rows
        .iter()
        .map(|r| r.label.len())
        .max()
        .unwrap_or(5)
        .max(5);
    let _ = writeln!(
        out,
        "{:<width$}  {:>10}  {:>10}  {:>7}  {:>7}  {:>7}  {:>6}  {:>7}",
        "label", "coef.", "MB s.e.", "MB p", "RoWo p", "Bonf p", "obs", "share"
    );
    for r in &table.rows {
        let _ = writeln!(
            out,
            "{:<width$}  {:>10.4}  {:>10.4}  {:>7.3}  {:>7.3}  {:>7.3}  {:>6}  {:>7.4}",
            r.label,
            r.coefficient,
            r.mb_std_error,
            r.mb_p,
            r.rowo_p,
            r.bonf_p,
            r.observations,
            r.share
        );
    }
    let _ = writeln!(
        out,
        "\n{} multiplier draws; joint critical value {:.4}",
        table.draws, table.critical_value
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ratingdml::dml::Algorithm;

    fn record(label: &str, theta: f64) -> FitRecord {
        FitRecord {
            treatment: label.into(),
            theta,
            std_error: 0.01,
            t_value: theta / 0.01,
            p_value: 0.5,
            folds: 5,
            repetitions: 2,
            algorithm: Algorithm::Dml2,
            learner_g: "rf-g".into(),
            learner_m: "rf-m".into(),
        }
    }

    fn table() -> FitTable {
        FitTable {
            observations: 100,
            records: vec![record("AA", 0.05), record("B, weird", -0.1)],
            failures: vec![FailedFit {
                treatment: "SD".into(),
                error: "treatment `SD` has 1 treated rows, need at least 2".into(),
            }],
            treated: vec![10, 20],
        }
    }

    #[test]
    fn fit_table_json_round_trip() {
        let t = table();
        let back = parse_fit_table(&to_json(&t).unwrap()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn rejects_inconsistent_fit_tables() {
        let mut t = table();
        t.treated.pop();
        assert!(parse_fit_table(&to_json(&t).unwrap()).is_err());
        assert!(parse_fit_table("{}").is_err());
        assert!(parse_fit_table("[").is_err());
    }

    #[test]
    fn csv_quotes_awkward_labels_and_keeps_failures() {
        let csv = fits_csv(&table()).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[2].starts_with("\"B, weird\",-0.1,"));
        assert!(lines[3].starts_with("SD,,,"));
        assert!(lines[1].ends_with(",10,0.1,ok"));
    }

    #[test]
    fn text_rounds_to_display_precision() {
        let txt = fits_text(&table());
        assert!(txt.contains("0.0500"));
        assert!(txt.contains("0.500"));
        assert!(txt.contains("failed: treatment `SD`"));
    }
}
