use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::config::ReportFormat;
use super::workflow::{ResultRow, RowStatus};
use crate::error::{Error, Result};

/// Formats a value with 12 significant digits: fixed notation for
/// magnitudes in [1e-4, 1e12), scientific otherwise.
pub fn format_sig12(x: f64) -> String {
    if x == 0.0 {
        return "0.00000000000".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.11e}");
    let exp: i32 = sci.split_once('e').and_then(|(_, e)| e.parse().ok()).unwrap_or(0);
    if (-4..12).contains(&exp) {
        format!("{x:.*}", (11 - exp) as usize)
    } else {
        sci
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(format_sig12).unwrap_or_default()
}

fn status(s: RowStatus) -> &'static str {
    match s {
        RowStatus::Ok => "ok",
        RowStatus::Failed => "failed",
    }
}

fn csv_error(e: impl std::fmt::Display) -> Error {
    Error::Config(format!("report serialisation failed: {e}"))
}

/// Serialises rows as CSV (one header line, one line per row) or as a JSON
/// array.
pub fn emit_report(rows: &[ResultRow], format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Json => serde_json::to_string_pretty(rows).map_err(csv_error),
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record([
                "geometry", "method", "repeat", "e_total", "delta_e", "partition", "seed", "status", "diagnostics",
            ])
            .map_err(csv_error)?;
            for r in rows {
                w.write_record([
                    r.geometry.clone(),
                    r.method.clone(),
                    r.repeat.to_string(),
                    opt(r.e_total),
                    opt(r.delta_e),
                    r.partition.clone(),
                    r.seed.to_string(),
                    status(r.status).to_string(),
                    r.diagnostics.clone(),
                ])
                .map_err(csv_error)?;
            }
            let bytes = w.into_inner().map_err(csv_error)?;
            String::from_utf8(bytes).map_err(csv_error)
        }
    }
}

pub fn parse_rows_json(text: &str) -> Result<Vec<ResultRow>> {
    serde_json::from_str(text).map_err(|e| Error::Config(format!("cannot read result rows: {e}")))
}

/// Energy of one method relative to the exact result of the same geometry
/// and repeat.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationRow {
    pub geometry: String,
    pub method: String,
    pub repeat: usize,
    pub e_total: f64,
    pub e_exact: f64,
    pub deviation: f64,
}

/// Pairs every successful row with the `fci-oracle` row of its geometry and
/// repeat. Rows without an oracle counterpart are skipped.
pub fn deviation_rows(rows: &[ResultRow]) -> Vec<DeviationRow> {
    let exact: HashMap<(&str, usize), f64> = rows
        .iter()
        .filter(|r| r.method == "fci-oracle")
        .filter_map(|r| r.e_total.map(|e| ((r.geometry.as_str(), r.repeat), e)))
        .collect();
    rows.iter()
        .filter(|r| r.method != "fci-oracle")
        .filter_map(|r| {
            let e = r.e_total?;
            let e_exact = *exact.get(&(r.geometry.as_str(), r.repeat))?;
            Some(DeviationRow {
                geometry: r.geometry.clone(),
                method: r.method.clone(),
                repeat: r.repeat,
                e_total: e,
                e_exact,
                deviation: e - e_exact,
            })
        })
        .collect()
}

/// CSV rendering of [`deviation_rows`].
pub fn emit_deviations(rows: &[DeviationRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["geometry", "method", "repeat", "e_total", "e_exact", "deviation"]).map_err(csv_error)?;
    for r in rows {
        w.write_record([
            r.geometry.clone(),
            r.method.clone(),
            r.repeat.to_string(),
            format_sig12(r.e_total),
            format_sig12(r.e_exact),
            format_sig12(r.deviation),
        ])
        .map_err(csv_error)?;
    }
    String::from_utf8(w.into_inner().map_err(csv_error)?).map_err(csv_error)
}
