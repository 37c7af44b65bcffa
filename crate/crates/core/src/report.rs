//! Config hashing and CSV output.
//!
//! Floats are written as `{:.16e}` (17 significant digits), which round-trips
//! every `f64`.

use std::io::Write;

use serde::Serialize;

use crate::error::Result;
use crate::link::BerRecord;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

/// FNV-1a over the compact JSON encoding of `value` (struct fields in
/// declaration order, no whitespace), as 16 lowercase hex digits.
pub fn config_hash<S: Serialize>(value: &S) -> String {
    let bytes = serde_json::to_vec(value).expect("config types always serialize");
    format!("{:016x}", fnv1a64(&bytes))
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Header of BER result CSVs.
pub const BER_HEADER: [&str; 15] = [
    "n_p",
    "sync_mode",
    "m",
    "snr_db_target",
    "snr_db_measured",
    "n_bits",
    "bit_errors",
    "ber",
    "ber_analytic",
    "papr_measured",
    "sync_failures",
    "config_hash",
    "seed",
    "generator",
    "status",
];

pub fn write_ber_csv<W: Write>(out: W, records: &[BerRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(BER_HEADER)?;
    for r in records {
        w.write_record([
            r.n_p.to_string(),
            r.sync_mode.as_str().to_string(),
            r.m.to_string(),
            fmt_f64(r.snr_db_target),
            fmt_f64(r.snr_db_measured),
            r.n_bits.to_string(),
            r.bit_errors.to_string(),
            fmt_f64(r.ber),
            fmt_f64(r.ber_analytic),
            fmt_f64(r.papr_measured),
            r.sync_failures.to_string(),
            r.config_hash.clone(),
            r.seed.to_string(),
            r.generator.clone(),
            r.status.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One named scalar measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub metric_name: String,
    pub value: f64,
    pub config_hash: String,
    pub seed: u64,
}

pub fn write_metrics_csv<W: Write>(out: W, rows: &[MetricRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["metric_name", "value", "config_hash", "seed"])?;
    for r in rows {
        w.write_record([
            r.metric_name.clone(),
            fmt_f64(r.value),
            r.config_hash.clone(),
            r.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Cell of a generic table.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => fmt_f64(*v),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

pub fn write_table<W: Write>(out: W, header: &[&str], rows: &[Vec<Cell>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(Cell::render))?;
    }
    w.flush()?;
    Ok(())
}
