//! `report`: human-readable summary of one run, or side-by-side overlays of
//! several runs aligned by treatment label.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Result};

use crate::artifacts::{self, FitTable, InferenceTable};

pub struct RunArtifacts {
    pub name: String,
    pub fits: FitTable,
    pub inference: Option<InferenceTable>,
}

impl RunArtifacts {
    pub fn load(dir: &Path) -> Result<Self> {
        Ok(Self {
            name: dir
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| dir.display().to_string()),
            fits: artifacts::read_fit_table(dir)?,
            inference: artifacts::read_inference_table(dir)?,
        })
    }

    fn labels(&self) -> Vec<&str> {
        self.fits
            .records
            .iter()
            .map(|r| r.treatment.as_str())
            .collect()
    }

    /// Multiplier-bootstrap p-value when a joint table exists, else the
    /// pointwise p-value.
    fn p_value(&self, index: usize) -> f64 {
        match &self.inference {
            Some(inf) => inf.rows[index].mb_p,
            None => self.fits.records[index].p_value,
        }
    }
}

/// Column prefixes for the runs; repeated directory names get their position
/// appended.
fn series_names(runs: &[RunArtifacts]) -> Vec<String> {
    runs.iter()
        .enumerate()
        .map(|(i, r)| {
            let clash = runs.iter().filter(|o| o.name == r.name).count() > 1;
            let base: String = r
                .name
                .chars()
                .map(|c| {
                    if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                        c
                    } else {
                        '_'
                    }
                })
                .collect();
            if clash || base.is_empty() {
                format!("{base}{}", i + 1)
            } else {
                base
            }
        })
        .collect()
}

pub fn overlay_csv(runs: &[RunArtifacts]) -> Result<String> {
    let first = runs[0].labels();
    let reference: BTreeSet<&str> = first.iter().copied().collect();
    let mut unmatched = BTreeSet::new();
    for run in &runs[1..] {
        let other: BTreeSet<&str> = run.labels().into_iter().collect();
        unmatched.extend(reference.symmetric_difference(&other).copied());
    }
    if !unmatched.is_empty() {
        bail!(
            "runs do not share treatment labels; unmatched: {}",
            unmatched.into_iter().collect::<Vec<_>>().join(", ")
        );
    }
    let names = series_names(runs);
    let mut header = vec!["label".to_string()];
    for n in &names {
        header.push(format!("{n}_estimate"));
        header.push(format!("{n}_std_error"));
        header.push(format!("{n}_p"));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header)?;
    for label in first {
        let mut row = vec![label.to_string()];
        for run in runs {
            let i = run
                .labels()
                .iter()
                .position(|l| *l == label)
                .expect("labels matched");
            let r = &run.fits.records[i];
            row.push(r.theta.to_string());
            row.push(r.std_error.to_string());
            row.push(run.p_value(i).to_string());
        }
        w.write_record(&row)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

pub fn summary_text(runs: &[RunArtifacts]) -> String {
    let mut out = String::new();
    for run in runs {
        let _ = writeln!(out, "== {} ==", run.name);
        out.push_str(&artifacts::fits_text(&run.fits));
        if let Some(inf) = &run.inference {
            out.push('\n');
            out.push_str(&artifacts::inference_text(inf));
        }
        out.push('\n');
    }
    out
}

pub fn run_report(dirs: &[PathBuf], out: &Path) -> Result<String> {
    if dirs.is_empty() {
        bail!("no runs given");
    }
    let runs = dirs
        .iter()
        .map(|d| RunArtifacts::load(d))
        .collect::<Result<Vec<_>>>()?;
    let overlay = overlay_csv(&runs)?;
    let text = summary_text(&runs);
    std::fs::create_dir_all(out)?;
    artifacts::write(out, "overlay.csv", &overlay)?;
    artifacts::write(out, "report.txt", &text)?;
    Ok(text)
}
