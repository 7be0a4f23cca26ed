use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentKind;
use super::run::SweepRow;
use crate::error::{Error, Result};
use crate::metrics::{read_csv, read_csv_comments, write_csv, MetricsRecord};

/// Histogram range and resolution.
pub const HIST_MIN: f64 = 1e-5;
pub const HIST_MAX: f64 = 1e-1;
pub const HIST_BINS_PER_DECADE: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltyRow {
    pub value: f64,
    pub penalty_uncompensated_db: f64,
    pub penalty_compensated_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramRow {
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub uncompensated: u64,
    pub compensated: u64,
}

/// Log-spaced bin edges over `[HIST_MIN, HIST_MAX]`.
pub fn histogram_edges() -> Vec<f64> {
    let decades = (HIST_MAX / HIST_MIN).log10().round() as usize;
    let n = decades * HIST_BINS_PER_DECADE;
    (0..=n)
        .map(|i| 10f64.powf(HIST_MIN.log10() + i as f64 / HIST_BINS_PER_DECADE as f64))
        .collect()
}

/// Bin of `ber`; values outside the range land in the end bins.
pub fn histogram_bin(ber: f64, n_bins: usize) -> usize {
    if !(ber > HIST_MIN) {
        return 0;
    }
    let pos = (ber.log10() - HIST_MIN.log10()) * HIST_BINS_PER_DECADE as f64;
    (pos.floor() as usize).min(n_bins - 1)
}

pub fn ber_histogram(records: &[MetricsRecord]) -> Vec<HistogramRow> {
    let edges = histogram_edges();
    let n = edges.len() - 1;
    let mut rows: Vec<HistogramRow> = edges
        .windows(2)
        .map(|w| HistogramRow {
            bin_lo: w[0],
            bin_hi: w[1],
            uncompensated: 0,
            compensated: 0,
        })
        .collect();
    for r in records.iter().filter(|r| r.channel_id != "nominal") {
        let b = histogram_bin(r.ber, n);
        if r.compensated {
            rows[b].compensated += 1;
        } else {
            rows[b].uncompensated += 1;
        }
    }
    rows
}

fn source_comments(path: &Path) -> Result<Vec<String>> {
    read_csv_comments(BufReader::new(File::open(path)?))
}

/// Reads the per-experiment results under `results` (one subdirectory per
/// experiment, as written by `run`) and writes one plot-ready CSV per figure
/// into `out`: `penalty_vs_{gain,phase,bw}.csv` sorted by impairment value and
/// `ber_histogram.csv`. Each file starts with `#` lines naming its columns
/// and the provenance of its source.
pub fn emit_plotdata(results: &Path, out: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let sweeps = [
        (ExperimentKind::SweepGain, "gain", "mixer gain imbalance delta"),
        (ExperimentKind::SweepPhase, "phase", "mixer phase imbalance in degrees"),
        (ExperimentKind::SweepBw, "bw", "relative bandwidth change of the B1Q and B2I paths"),
    ];
    let mut found = false;
    for (kind, short, axis) in sweeps {
        let src = results.join(kind.name()).join(format!("{kind}.csv"));
        if !src.exists() {
            continue;
        }
        found = true;
        let mut rows: Vec<SweepRow> = read_csv(File::open(&src)?)?;
        rows.sort_by(|a, b| a.value.total_cmp(&b.value));
        let plot: Vec<PenaltyRow> = rows
            .iter()
            .map(|r| PenaltyRow {
                value: r.value,
                penalty_uncompensated_db: r.penalty_uncompensated_db,
                penalty_compensated_db: r.penalty_compensated_db,
            })
            .collect();
        let mut comments = vec![
            format!("value: {axis}"),
            "penalty_*_db: Es/N0 penalty at the target BER against the ideal transmitter; inf = target never reached".to_string(),
        ];
        comments.extend(source_comments(&src)?.into_iter().map(|c| format!("source {c}")));
        std::fs::create_dir_all(out)?;
        let dst = out.join(format!("penalty_vs_{short}.csv"));
        write_csv(BufWriter::new(File::create(&dst)?), &comments, &plot)?;
        written.push(dst);
    }
    let mc = results.join(ExperimentKind::Montecarlo.name()).join("montecarlo.csv");
    if mc.exists() {
        found = true;
        let records: Vec<MetricsRecord> = read_csv(File::open(&mc)?)?;
        let hist = ber_histogram(&records);
        let reference = records.iter().find(|r| r.channel_id == "nominal").map_or(f64::NAN, |r| r.ber);
        let mut comments = vec![
            format!("channel counts per BER bin, {HIST_BINS_PER_DECADE} log bins per decade over [{HIST_MIN:e}, {HIST_MAX:e}]; values outside go to the end bins"),
            format!("reference_ber={reference:e}"),
        ];
        comments.extend(source_comments(&mc)?.into_iter().map(|c| format!("source {c}")));
        std::fs::create_dir_all(out)?;
        let dst = out.join("ber_histogram.csv");
        write_csv(BufWriter::new(File::create(&dst)?), &comments, &hist)?;
        written.push(dst);
    }
    if !found {
        return Err(Error::MissingInput(format!(
            "no sweep or montecarlo results under {}",
            results.display()
        )));
    }
    Ok(written)
}
