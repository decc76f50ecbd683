//! Report rows and their CSV/JSON serialization.

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::Context;
use serde::Serialize;

use crate::args::ReportFormat;

/// One per-file (or per sweep cell) result row. Every command emits the same
/// column set; fields a command does not measure stay empty/null.
#[derive(Serialize, Debug, Clone)]
pub struct ReportRow {
    pub dataset: String,
    pub codec: Option<String>,
    pub e_abs: Option<f64>,
    pub cr: Option<f64>,
    pub rel_improvement: Option<f64>,
    pub compress_ms: Option<f64>,
    pub decompress_ms: Option<f64>,
    pub ssim: Option<f64>,
    pub spatial_reduction: Option<f64>,
}

pub const REPORT_COLUMNS: [&str; 9] = [
    "dataset",
    "codec",
    "e_abs",
    "cr",
    "rel_improvement",
    "compress_ms",
    "decompress_ms",
    "ssim",
    "spatial_reduction",
];

/// Full similarity report for one image pair.
#[derive(Serialize, Debug, Clone)]
pub struct MetricsRow {
    pub dsc: Option<f64>,
    pub iou: Option<f64>,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub accuracy: Option<f64>,
    pub f_c: Option<f64>,
    pub kappa: Option<f64>,
    pub auc: Option<f64>,
    pub ahd: Option<f64>,
    pub ssim: Option<f64>,
}

pub const METRICS_COLUMNS: [&str; 10] = [
    "dsc",
    "iou",
    "sensitivity",
    "specificity",
    "accuracy",
    "f_c",
    "kappa",
    "auc",
    "ahd",
    "ssim",
];

fn to_csv<T: Serialize>(rows: &[T], columns: &[&str]) -> anyhow::Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    if rows.is_empty() {
        // serde-driven headers only appear with the first row; keep the
        // header line even for an empty table so the shape is stable.
        writer.write_record(columns)?;
    }
    for row in rows {
        writer.serialize(row)?;
    }
    Ok(String::from_utf8(writer.into_inner()?)?)
}

fn to_json<T: Serialize>(rows: &[T]) -> anyhow::Result<String> {
    let mut text = serde_json::to_string_pretty(rows)?;
    text.push('\n');
    Ok(text)
}

/// Serialize `rows` and write them to `path`, or to stdout when no path is
/// given.
pub fn write_report<T: Serialize>(
    rows: &[T],
    columns: &[&str],
    format: ReportFormat,
    path: Option<&Path>,
) -> anyhow::Result<()> {
    let text = match format {
        ReportFormat::Csv => to_csv(rows, columns)?,
        ReportFormat::Json => to_json(rows)?,
    };
    match path {
        Some(path) => fs::write(path, text)
            .with_context(|| format!("writing report to {}", path.display()))?,
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .context("writing report to stdout")?,
    }
    Ok(())
}
