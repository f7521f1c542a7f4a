//! Report files.
//!
//! CSV has one row per (run, slot) with the columns
//! `policy,slot,hits,cost,reward,cum_reward,window_hit_ratio`; the last is
//! the hit ratio of the metrics window containing the slot and is empty when
//! that window saw no requests. JSON carries per-run summaries, pairwise
//! margins and every run with its manifest and per-slot accounting.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{windowed_hit_ratio, ComparisonReport, Margin, RunResult};
use crate::error::{Error, Result};

pub const REPORT_FORMAT: &str = "edgecache-report";
const REPORT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            _ => Err(Error::Config(format!("unknown report format {s:?}; expected csv or json"))),
        }
    }
}

impl ReportFormat {
    /// Format implied by a file extension.
    pub fn from_path(path: &Path) -> Option<Self> {
        path.extension()?.to_str()?.parse().ok()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub policy: String,
    pub slot: usize,
    pub hits: u64,
    pub cost: u64,
    pub reward: f64,
    pub cum_reward: f64,
    pub window_hit_ratio: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct Summary {
    label: String,
    overall_hit_ratio: f64,
    cumulative_reward: f64,
    hits: u64,
    cost: u64,
    requests: u64,
}

#[derive(Serialize, Deserialize)]
struct ReportFile {
    format: String,
    version: u32,
    summary: Vec<Summary>,
    margins: Vec<Margin>,
    runs: Vec<RunResult>,
}

fn rows(label: &str, run: &RunResult) -> Result<Vec<CsvRow>> {
    let window = run.manifest.config.window.min(run.per_slot.len());
    let points = windowed_hit_ratio(&run.per_slot, window)?;
    let mut cum = 0.0;
    Ok(run
        .per_slot
        .iter()
        .enumerate()
        .map(|(i, a)| {
            cum += a.reward;
            CsvRow {
                policy: label.to_string(),
                slot: a.slot,
                hits: a.hits,
                cost: a.cost,
                reward: a.reward,
                cum_reward: cum,
                window_hit_ratio: points[i / window].ratio,
            }
        })
        .collect())
}

pub fn report_to_csv(report: &ComparisonReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for (label, run) in report.labels.iter().zip(&report.runs) {
        for row in rows(label, run)? {
            w.serialize(row)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Serde(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Serde(e.to_string()))
}

pub fn report_to_json(report: &ComparisonReport) -> Result<String> {
    let file = ReportFile {
        format: REPORT_FORMAT.into(),
        version: REPORT_VERSION,
        summary: report
            .labels
            .iter()
            .zip(&report.runs)
            .map(|(label, r)| Summary {
                label: label.clone(),
                overall_hit_ratio: r.overall_hit_ratio,
                cumulative_reward: r.cumulative_reward,
                hits: r.total_hits(),
                cost: r.total_cost(),
                requests: r.total_requests(),
            })
            .collect(),
        margins: report.margins.clone(),
        runs: report.runs.clone(),
    };
    let mut s = serde_json::to_string_pretty(&file)?;
    s.push('\n');
    Ok(s)
}

pub fn export_report(report: &ComparisonReport, format: ReportFormat, path: &Path) -> Result<()> {
    let text = match format {
        ReportFormat::Csv => report_to_csv(report)?,
        ReportFormat::Json => report_to_json(report)?,
    };
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Parse a JSON report; run logs are not stored and come back empty.
pub fn read_report(text: &str) -> Result<ComparisonReport> {
    let file: ReportFile = serde_json::from_str(text)?;
    if file.format != REPORT_FORMAT || file.version != REPORT_VERSION {
        return Err(Error::Input(format!("unsupported report {} v{}", file.format, file.version)));
    }
    if file.summary.len() != file.runs.len() {
        return Err(Error::Input("report summary and runs differ in length".into()));
    }
    Ok(ComparisonReport {
        labels: file.summary.into_iter().map(|s| s.label).collect(),
        runs: file.runs,
        margins: file.margins,
    })
}

pub fn read_report_csv(text: &str) -> Result<Vec<CsvRow>> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}
