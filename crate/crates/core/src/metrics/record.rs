use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::ber::BerCount;
use crate::error::Result;

/// One BER measurement. CSV header:
/// `channel_id,compensated,esn0_db,bits,errors,ber,penalty_db,floor_db`.
/// Empty `penalty_db` or `floor_db` cells mean "not computed".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub channel_id: String,
    pub compensated: bool,
    pub esn0_db: f64,
    pub bits: u64,
    pub errors: u64,
    pub ber: f64,
    pub penalty_db: Option<f64>,
    /// Error power of `x_hat` against `x`, dB.
    pub floor_db: Option<f64>,
}

impl MetricsRecord {
    pub fn new(channel_id: impl Into<String>, compensated: bool, esn0_db: f64, count: BerCount) -> Self {
        Self {
            channel_id: channel_id.into(),
            compensated,
            esn0_db,
            bits: count.bits,
            errors: count.errors,
            ber: count.ber(),
            penalty_db: None,
            floor_db: None,
        }
    }

    pub fn count(&self) -> BerCount {
        BerCount {
            bits: self.bits,
            errors: self.errors,
        }
    }
}

/// Writes `rows` as CSV, preceded by `#`-prefixed comment lines.
pub fn write_csv<T: Serialize>(mut w: impl Write, comments: &[String], rows: &[T]) -> Result<()> {
    for c in comments {
        writeln!(w, "# {c}")?;
    }
    let mut cw = csv::Writer::from_writer(w);
    for r in rows {
        cw.serialize(r)?;
    }
    cw.flush()?;
    Ok(())
}

/// Reads CSV written by [`write_csv`], skipping comment lines.
pub fn read_csv<T: for<'de> Deserialize<'de>>(r: impl std::io::Read) -> Result<Vec<T>> {
    let mut cr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(r);
    let mut out = Vec::new();
    for row in cr.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

/// The `#` comment lines at the top of a CSV file.
pub fn read_csv_comments(r: impl BufRead) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for line in r.lines() {
        let line = line?;
        match line.strip_prefix('#') {
            Some(c) => out.push(c.trim().to_string()),
            None => break,
        }
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(mut w: impl Write, rows: &[T]) -> Result<()> {
    for r in rows {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}
