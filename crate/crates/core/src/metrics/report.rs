use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

/// Per-image evaluation. Full-reference scores are absent when no reference
/// was supplied.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalRow {
    pub sample_id: String,
    pub psnr_mu: Option<f64>,
    pub ssim_mu: Option<f64>,
    pub ag: f64,
    pub sf: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalSummary {
    pub count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub psnr_mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ssim_mu: Option<f64>,
    pub ag: f64,
    pub sf: f64,
    /// Metrics that depend on third-party calibrated models.
    pub external: Vec<ExternalMetric>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExternalMetric {
    pub name: &'static str,
    pub status: &'static str,
}

const EXTERNAL: [&str; 6] = ["HDR-VDP-2", "NIQE", "CLIP-IQA+", "MANIQA", "MUSIQ", "LIQE"];

impl EvalSummary {
    pub fn from_rows(rows: &[EvalRow]) -> Self {
        let mean = |xs: Vec<f64>| -> Option<f64> {
            (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
        };
        let with_ref = rows.iter().all(|r| r.psnr_mu.is_some()) && !rows.is_empty();
        Self {
            count: rows.len(),
            psnr_mu: if with_ref { mean(rows.iter().filter_map(|r| r.psnr_mu).collect()) } else { None },
            ssim_mu: if with_ref { mean(rows.iter().filter_map(|r| r.ssim_mu).collect()) } else { None },
            ag: mean(rows.iter().map(|r| r.ag).collect()).unwrap_or(0.0),
            sf: mean(rows.iter().map(|r| r.sf).collect()).unwrap_or(0.0),
            external: EXTERNAL
                .iter()
                .map(|&name| ExternalMetric {
                    name,
                    status: "external — not computed",
                })
                .collect(),
        }
    }
}

/// Writes `eval.csv` and `summary.json` into `dir`. Rows without references
/// produce a CSV with only the no-reference columns.
pub fn write_report(dir: &Path, rows: &[EvalRow]) -> Result<EvalSummary> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let with_ref = !rows.is_empty() && rows.iter().all(|r| r.psnr_mu.is_some());
    let csv_path = dir.join("eval.csv");
    let mut w = csv::Writer::from_path(&csv_path)
        .map_err(|e| Error::format(&csv_path, e.to_string()))?;
    let header: &[&str] = if with_ref {
        &["sample_id", "psnr_mu", "ssim_mu", "ag", "sf"]
    } else {
        &["sample_id", "ag", "sf"]
    };
    let csv_err = |e: csv::Error| Error::format(&csv_path, e.to_string());
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        let mut rec = vec![r.sample_id.clone()];
        if with_ref {
            rec.push(format!("{}", r.psnr_mu.unwrap_or(f64::NAN)));
            rec.push(format!("{}", r.ssim_mu.unwrap_or(f64::NAN)));
        }
        rec.push(format!("{}", r.ag));
        rec.push(format!("{}", r.sf));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(&csv_path, e))?;
    let summary = EvalSummary::from_rows(rows);
    let json_path = dir.join("summary.json");
    fs::write(&json_path, serde_json::to_string_pretty(&summary)? + "\n")
        .map_err(|e| Error::io(&json_path, e))?;
    Ok(summary)
}
