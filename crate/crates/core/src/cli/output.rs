//! Result rows and their CSV / JSON encodings.

use std::io::Write;

use serde::Serialize;

use crate::risk_model::Distribution;

pub const OUTPUT_SCHEMA: &str = "gsqmc-output/1";

/// One output row. Column order is fixed: the first fifteen columns are the
/// documented table, the rest make the row reproducible.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputRow {
    pub generator: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub k_levels: usize,
    pub x: f64,
    pub lambda: f64,
    pub mu: f64,
    pub delta: f64,
    pub penalty: String,
    pub estimate: f64,
    pub stderr: Option<f64>,
    pub ci_lo: Option<f64>,
    pub ci_hi: Option<f64>,
    pub reference: Option<f64>,
    pub abs_error: Option<f64>,
    pub seconds: f64,
    pub c_tilde: f64,
    pub a: f64,
    pub epsilon: f64,
    pub seed: Option<u64>,
    pub skip: u64,
    pub scramble: bool,
    pub interarrival: String,
    pub claim: String,
    pub schema: &'static str,
}

pub fn distribution_label(d: &Distribution) -> String {
    match *d {
        Distribution::Exponential { rate } => format!("exponential({rate})"),
        Distribution::Gamma { shape, rate } => format!("gamma({shape},{rate})"),
    }
}

pub fn write_csv<W: Write>(rows: &[OutputRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<W: Write>(rows: &[OutputRow], mut out: W) -> std::io::Result<()> {
    serde_json::to_writer_pretty(&mut out, rows)?;
    writeln!(out)
}
