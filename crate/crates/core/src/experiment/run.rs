use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ExperimentKind};
use crate::channel::{build_equivalent_mimo, equivalence_nmse_db, ImpairmentChannelSpec, PathLabel, F_LEAD, F_TAPS};
use crate::compensation::{calibrate, ie_init, run_adaptation, train_estimator_white, AdaptConfig, AdaptOutcome, ChannelEstimate, TracePoint};
use crate::error::{Error, Result};
use crate::link::Link;
use crate::metrics::{channel_id, derive_seed, montecarlo, write_csv, write_jsonl, MetricsRecord, MonteCarloResult, NoiseLoader};
use crate::mimo::MimoFir;

/// Worker count for trial-level parallelism.
pub const WORKERS_ENV: &str = "FIDAC_WORKERS";

const TAG_FRAME: u64 = 11;
const TAG_CAL: u64 = 12;
const TAG_NOISE: u64 = 13;
const TAG_ADAPT: u64 = 14;
const TAG_SPEC: u64 = 15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub experiment: ExperimentKind,
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub checks: Vec<Check>,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// One point of a penalty sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub required_uncompensated_db: f64,
    pub required_compensated_db: f64,
    pub penalty_uncompensated_db: f64,
    pub penalty_compensated_db: f64,
    pub floor_uncompensated_db: f64,
    pub floor_compensated_db: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub run: String,
    pub samples: u64,
    pub model_mse_db: f64,
    pub physical_mse_db: f64,
    pub ce_mse_db: f64,
}

fn trace_rows(run: &str, trace: &[TracePoint]) -> Vec<TraceRow> {
    trace
        .iter()
        .map(|p| TraceRow {
            run: run.to_string(),
            samples: p.samples,
            model_mse_db: p.model_mse_db,
            physical_mse_db: p.physical_mse_db,
            ce_mse_db: p.ce_mse_db,
        })
        .collect()
}

/// `FIDAC_WORKERS` if set, else the available parallelism.
pub fn workers_from_env() -> Result<usize> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(Error::Config(format!("{WORKERS_ENV} must be a positive integer, got `{v}`"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

/// Nominal channel with one impairment of the sweep applied. Mixer errors go
/// to both mixers; bandwidth changes only to the B1Q and B2I paths.
pub fn impaired_spec(kind: ExperimentKind, nominal: &ImpairmentChannelSpec, value: f64) -> ImpairmentChannelSpec {
    let mut s = nominal.clone();
    match kind {
        ExperimentKind::SweepGain => {
            s.delta1 = value;
            s.delta2 = value;
        }
        ExperimentKind::SweepPhase => {
            s.phi1_deg = value;
            s.phi2_deg = value;
        }
        ExperimentKind::SweepBw => {
            for p in [PathLabel::B1Q, PathLabel::B2I] {
                s.bw_scale[p.index()] *= 1.0 + value;
            }
        }
        _ => {}
    }
    s
}

struct Output {
    dir: PathBuf,
    comments: Vec<String>,
    files: Vec<PathBuf>,
}

impl Output {
    fn new(dir: &Path, cfg: &ExperimentConfig) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        let mut out = Self {
            dir: dir.to_path_buf(),
            comments: vec![
                format!("experiment={}", cfg.experiment),
                format!("seed={}", cfg.seed),
                format!("config_sha256={}", cfg.digest()),
                "config=resolved_config.json".to_string(),
            ],
            files: Vec::new(),
        };
        let p = out.path("resolved_config.json");
        std::fs::write(&p, cfg.to_json() + "\n")?;
        out.files.push(p);
        Ok(out)
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<()> {
        let p = self.path(name);
        write_csv(BufWriter::new(File::create(&p)?), &self.comments, rows)?;
        self.files.push(p);
        Ok(())
    }

    fn jsonl<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<()> {
        let p = self.path(name);
        write_jsonl(BufWriter::new(File::create(&p)?), rows)?;
        self.files.push(p);
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let p = self.path(name);
        std::fs::write(&p, serde_json::to_string_pretty(value)? + "\n")?;
        self.files.push(p);
        Ok(())
    }
}

/// Runs `cfg` on a pool sized by [`WORKERS_ENV`], writing into `out_dir`.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunReport> {
    run_experiment_with_workers(cfg, out_dir, workers_from_env()?)
}

pub fn run_experiment_with_workers(cfg: &ExperimentConfig, out_dir: &Path, workers: usize) -> Result<RunReport> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    pool.install(|| {
        let mut out = Output::new(out_dir, cfg)?;
        let checks = match cfg.experiment {
            k if k.is_sweep() => run_sweep(cfg, &mut out)?,
            ExperimentKind::Montecarlo => run_montecarlo(cfg, &mut out)?,
            ExperimentKind::Convergence => run_convergence(cfg, &mut out)?,
            ExperimentKind::EquivalenceCheck => run_equivalence(cfg, &mut out)?,
            _ => unreachable!("all kinds handled"),
        };
        out.json("checks.json", &checks)?;
        Ok(RunReport {
            experiment: cfg.experiment,
            out_dir: out_dir.to_path_buf(),
            files: out.files,
            checks,
        })
    })
}

fn link_and_calibration(cfg: &ExperimentConfig) -> Result<(Link, AdaptOutcome)> {
    let link = Link::new(&cfg.tx, &cfg.link, derive_seed(cfg.seed, TAG_FRAME, 0))?;
    let cal = calibrate(&cfg.calibration, &cfg.tx, &cfg.channel, derive_seed(cfg.seed, TAG_CAL, 0))?;
    Ok((link, cal))
}

fn calibration_check(cal: &AdaptOutcome) -> Check {
    let last = cal.trace.last().map_or(f64::NAN, |p| p.physical_mse_db);
    Check::new("calibration_converged", cal.converged, format!("nominal calibration error {last:.2} dB"))
}

struct SweepPoint {
    row: SweepRow,
    records: [MetricsRecord; 2],
    trace: Vec<TracePoint>,
}

fn run_sweep(cfg: &ExperimentConfig, out: &mut Output) -> Result<Vec<Check>> {
    let (link, cal) = link_and_calibration(cfg)?;
    let noise_seed = derive_seed(cfg.seed, TAG_NOISE, 0);
    let reference = link.required_snr(link.reference_signal(), &cfg.search, noise_seed)?.esn0_db;
    let values = cfg.sweep_values().to_vec();
    let points = values
        .par_iter()
        .enumerate()
        .map(|(i, &v)| -> Result<SweepPoint> {
            let spec = impaired_spec(cfg.experiment, &cfg.channel, v);
            let id = format!("{}={v}", cfg.experiment);
            let xu = link.transmit(&cal.ie.h, &spec)?;
            let ru = link.required_snr(&xu, &cfg.search, noise_seed)?.esn0_db;
            let (h, converged, trace) = match run_adaptation(&cfg.adapt, &cfg.tx, &spec, cal.ie.clone(), cal.est.clone(), derive_seed(cfg.seed, TAG_ADAPT, i as u64)) {
                Ok(o) => (o.ie.h, o.converged, o.trace),
                Err(Error::Diverged { .. }) => (cal.ie.h.clone(), false, Vec::new()),
                Err(e) => return Err(e),
            };
            let xc = link.transmit(&h, &spec)?;
            let rc = link.required_snr(&xc, &cfg.search, noise_seed)?.esn0_db;
            let noise = NoiseLoader::new(reference, noise_seed);
            let records = [(false, &xu, ru), (true, &xc, rc)].map(|(comp, x, req)| -> Result<MetricsRecord> {
                let mut r = MetricsRecord::new(&id, comp, reference, link.ber(x, &noise)?);
                r.penalty_db = Some(req - reference);
                r.floor_db = Some(link.nmse_db(x));
                Ok(r)
            });
            let [a, b] = records;
            let records = [a?, b?];
            Ok(SweepPoint {
                row: SweepRow {
                    value: v,
                    required_uncompensated_db: ru,
                    required_compensated_db: rc,
                    penalty_uncompensated_db: ru - reference,
                    penalty_compensated_db: rc - reference,
                    floor_uncompensated_db: records[0].floor_db.unwrap_or(f64::NAN),
                    floor_compensated_db: records[1].floor_db.unwrap_or(f64::NAN),
                    converged,
                },
                records,
                trace,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let rows: Vec<SweepRow> = points.iter().map(|p| p.row.clone()).collect();
    let records: Vec<MetricsRecord> = points.iter().flat_map(|p| p.records.clone()).collect();
    let mut traces = trace_rows("calibration", &cal.trace);
    for p in &points {
        traces.extend(trace_rows(&format!("{}={}", cfg.experiment, p.row.value), &p.trace));
    }
    out.csv(&format!("{}.csv", cfg.experiment), &rows)?;
    out.csv("records.csv", &records)?;
    out.jsonl("records.jsonl", &records)?;
    out.csv("traces.csv", &traces)?;
    out.json("calibration.json", &cal)?;
    Ok(sweep_checks(cfg, &cal, reference, &rows))
}

fn sweep_checks(cfg: &ExperimentConfig, cal: &AdaptOutcome, reference: f64, rows: &[SweepRow]) -> Vec<Check> {
    let s = &cfg.sweep;
    let mut checks = vec![calibration_check(cal)];
    let closed = crate::metrics::esn0_for_ber_16qam(cfg.search.target_ber).unwrap_or(f64::NAN);
    checks.push(Check::new(
        "reference_matches_closed_form",
        (reference - closed).abs() <= 0.2,
        format!("back-to-back requirement {reference:.3} dB, closed form {closed:.3} dB"),
    ));
    for r in rows.iter().filter(|r| r.value == 0.0) {
        checks.push(Check::new(
            "zero_impairment_penalty",
            r.penalty_uncompensated_db.abs() <= s.zero_tolerance_db && r.penalty_compensated_db.abs() <= s.zero_tolerance_db,
            format!("uncompensated {:.3} dB, compensated {:.3} dB", r.penalty_uncompensated_db, r.penalty_compensated_db),
        ));
    }
    let worst = rows.iter().map(|r| r.penalty_compensated_db).fold(f64::NEG_INFINITY, f64::max);
    checks.push(Check::new(
        "compensated_penalty_bound",
        worst < s.max_compensated_penalty_db,
        format!("largest compensated penalty {worst:.3} dB (bound {})", s.max_compensated_penalty_db),
    ));
    let max_mag = rows.iter().map(|r| r.value.abs()).fold(0.0, f64::max);
    for r in rows.iter().filter(|r| r.value.abs() == max_mag && max_mag > 0.0) {
        let gap = r.penalty_uncompensated_db - r.penalty_compensated_db;
        checks.push(Check::new(
            format!("compensation_gain_at_{}", r.value),
            gap >= s.min_gap_db,
            format!("uncompensated {:.3} dB vs compensated {:.3} dB", r.penalty_uncompensated_db, r.penalty_compensated_db),
        ));
    }
    for sign in [1.0, -1.0] {
        let mut side: Vec<&SweepRow> = rows.iter().filter(|r| r.value * sign >= 0.0).collect();
        if side.len() < 2 {
            continue;
        }
        side.sort_by(|a, b| a.value.abs().total_cmp(&b.value.abs()));
        let bad: Vec<String> = side
            .windows(2)
            .filter(|w| w[1].required_uncompensated_db < w[0].required_uncompensated_db - s.monotone_slack_db)
            .map(|w| format!("{} -> {}", w[0].value, w[1].value))
            .collect();
        checks.push(Check::new(
            if sign > 0.0 { "uncompensated_monotone" } else { "uncompensated_monotone_negative" },
            bad.is_empty(),
            if bad.is_empty() { "non-decreasing in magnitude".to_string() } else { format!("decreases at {}", bad.join(", ")) },
        ));
    }
    let stuck: Vec<String> = rows.iter().filter(|r| !r.converged).map(|r| r.value.to_string()).collect();
    checks.push(Check::new(
        "adaptation_converged",
        stuck.is_empty(),
        if stuck.is_empty() { "all points".to_string() } else { format!("not converged at {}", stuck.join(", ")) },
    ));
    checks
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ChannelRow {
    channel_id: String,
    spec: ImpairmentChannelSpec,
    converged: bool,
    adapt_error: Option<String>,
    final_physical_mse_db: Option<f64>,
}

fn run_montecarlo(cfg: &ExperimentConfig, out: &mut Output) -> Result<Vec<Check>> {
    let (link, cal) = link_and_calibration(cfg)?;
    let res = montecarlo(&link, &cfg.channel, &cal, &cfg.adapt, &cfg.montecarlo, cfg.seed)?;
    let mut records = vec![res.reference.clone()];
    for t in &res.trials {
        records.push(t.uncompensated.clone());
        records.push(t.compensated.clone());
    }
    let channels: Vec<ChannelRow> = res
        .trials
        .iter()
        .map(|t| ChannelRow {
            channel_id: channel_id(t.index),
            spec: t.spec.clone(),
            converged: t.converged,
            adapt_error: t.adapt_error.clone(),
            final_physical_mse_db: t.trace.last().map(|p| p.physical_mse_db),
        })
        .collect();
    out.csv("montecarlo.csv", &records)?;
    out.jsonl("montecarlo.jsonl", &records)?;
    out.jsonl("channels.jsonl", &channels)?;
    out.json("calibration.json", &cal)?;
    let mut checks = vec![calibration_check(&cal)];
    checks.extend(montecarlo_checks(cfg, &res));
    Ok(checks)
}

/// Fraction of adapted channels within the ratio bound, and the median
/// uncompensated BER over the reference.
pub fn montecarlo_summary(res: &MonteCarloResult, compensated_ratio: f64) -> (f64, f64) {
    let r = res.reference.ber;
    let n = res.trials.len().max(1) as f64;
    let ok = res.trials.iter().filter(|t| t.compensated.ber <= compensated_ratio * r).count() as f64;
    let mut unc: Vec<f64> = res.trials.iter().map(|t| t.uncompensated.ber).collect();
    unc.sort_by(f64::total_cmp);
    let median = match unc.len() {
        0 => f64::NAN,
        m if m % 2 == 1 => unc[m / 2],
        m => 0.5 * (unc[m / 2 - 1] + unc[m / 2]),
    };
    (ok / n, median / r)
}

fn montecarlo_checks(cfg: &ExperimentConfig, res: &MonteCarloResult) -> Vec<Check> {
    let c = &cfg.montecarlo_checks;
    let (fraction, median_ratio) = montecarlo_summary(res, c.compensated_ratio);
    let failed = res.trials.iter().filter(|t| !t.converged).count();
    vec![
        Check::new(
            "compensated_within_ratio",
            fraction >= c.min_fraction,
            format!(
                "{:.1}% of {} channels at or below {}x reference BER {:.3e} (Es/N0 {:.3} dB)",
                100.0 * fraction,
                res.trials.len(),
                c.compensated_ratio,
                res.reference.ber,
                res.esn0_db
            ),
        ),
        Check::new(
            "uncompensated_median_ratio",
            median_ratio >= c.uncompensated_median_ratio,
            format!("median uncompensated BER is {median_ratio:.1}x reference"),
        ),
        Check::new("adaptation_converged", failed == 0, format!("{failed} channels did not converge")),
    ]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CeRow {
    samples: u64,
    nmse_db: f64,
}

fn settled_db(trace: &[TracePoint]) -> f64 {
    let tail = &trace[trace.len().saturating_sub(4)..];
    let lin: f64 = tail.iter().map(|p| 10f64.powf(p.physical_mse_db / 10.0)).sum::<f64>() / tail.len().max(1) as f64;
    10.0 * lin.log10()
}

fn run_convergence(cfg: &ExperimentConfig, out: &mut Output) -> Result<Vec<Check>> {
    let c = &cfg.convergence;
    let omega = cfg.tx.omega0();
    let mut checks = Vec::new();

    // estimator alone, alpha = 1, against the exact equivalent model
    let mut base = cfg.channel.clone();
    base.alpha = 1;
    base.dac_bits = None;
    let spec = ImpairmentChannelSpec::random(&base, &cfg.montecarlo.ranges, derive_seed(cfg.seed, TAG_SPEC, 0));
    let truth = build_equivalent_mimo(&spec, omega, F_TAPS, F_LEAD)?;
    let mut est = ChannelEstimate::new(MimoFir::zeros(4, 4, F_TAPS, F_LEAD), cfg.adapt.ce_step, cfg.adapt.feedback_m)?;
    let ce = train_estimator_white(&spec, omega, &mut est, &truth, c.ce_samples, c.ce_sigma, c.ce_trace_every, derive_seed(cfg.seed, TAG_NOISE, 1))?;
    let ce_final = ce.last().map_or(f64::NAN, |p| p.nmse_db);
    checks.push(Check::new(
        "estimator_nmse",
        ce_final < c.ce_max_nmse_db,
        format!("NMSE {ce_final:.2} dB after {} samples at M = {}", c.ce_samples, cfg.adapt.feedback_m),
    ));
    out.csv("ce_convergence.csv", &ce.iter().map(|p| CeRow { samples: p.samples, nmse_db: p.nmse_db }).collect::<Vec<_>>())?;

    // ideal channel: no error to remove
    let ideal = ImpairmentChannelSpec::ideal();
    let short = AdaptConfig {
        ce_only_samples: 1 << 15,
        joint_samples: 1 << 16,
        trace_every: 1 << 14,
        ..cfg.adapt.clone()
    };
    let ideal_est = ChannelEstimate::new(build_equivalent_mimo(&ideal, omega, F_TAPS, F_LEAD)?, cfg.adapt.ce_step, cfg.adapt.feedback_m)?;
    let ideal_run = run_adaptation(&short, &cfg.tx, &ideal, ie_init(cfg.calibration.ie_taps), ideal_est, derive_seed(cfg.seed, TAG_ADAPT, 0))?;
    let ideal_worst = ideal_run.trace.iter().map(|p| p.physical_mse_db).fold(f64::NEG_INFINITY, f64::max);
    checks.push(Check::new("ideal_channel_flat", ideal_worst < -100.0, format!("largest error {ideal_worst:.1} dB")));

    let cal = calibrate(&cfg.calibration, &cfg.tx, &cfg.channel, derive_seed(cfg.seed, TAG_CAL, 0))?;
    checks.push(calibration_check(&cal));

    let mut spec = cfg.channel.clone();
    spec.delta1 = c.loop_delta1;
    let runs = [1usize, 2]
        .par_iter()
        .map(|&k| {
            let a = AdaptConfig {
                update_decimation: cfg.adapt.update_decimation * k,
                joint_samples: cfg.adapt.joint_samples * k,
                ..cfg.adapt.clone()
            };
            run_adaptation(&a, &cfg.tx, &spec, cal.ie.clone(), cal.est.clone(), derive_seed(cfg.seed, TAG_ADAPT, 1))
        })
        .collect::<Result<Vec<_>>>()?;
    let first = runs[0].trace.first().map_or(f64::NAN, |p| p.physical_mse_db);
    let settled = settled_db(&runs[0].trace);
    checks.push(Check::new(
        "loop_improvement",
        first - settled >= c.loop_min_improvement_db,
        format!("delta1 = {}: {first:.2} dB -> {settled:.2} dB", c.loop_delta1),
    ));
    let settled2 = settled_db(&runs[1].trace);
    checks.push(Check::new(
        "decimation_invariance",
        (settled - settled2).abs() <= c.decimation_tolerance_db,
        format!("decimation {}: {settled:.2} dB, decimation {}: {settled2:.2} dB", cfg.adapt.update_decimation, 2 * cfg.adapt.update_decimation),
    ));

    let mut traces = trace_rows("calibration", &cal.trace);
    traces.extend(trace_rows("ideal", &ideal_run.trace));
    traces.extend(trace_rows("delta1", &runs[0].trace));
    traces.extend(trace_rows("delta1-double-decimation", &runs[1].trace));
    out.csv("traces.csv", &traces)?;
    out.json("calibration.json", &cal)?;
    Ok(checks)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct EquivalenceRow {
    channel_id: String,
    delta1: f64,
    delta2: f64,
    phi1_deg: f64,
    phi2_deg: f64,
    nmse_db: f64,
}

fn run_equivalence(cfg: &ExperimentConfig, out: &mut Output) -> Result<Vec<Check>> {
    let e = &cfg.equivalence;
    let mut base = cfg.channel.clone();
    base.alpha = 1;
    base.dac_bits = None;
    let omega = cfg.tx.omega0();
    let rows = (0..e.specs)
        .into_par_iter()
        .map(|i| -> Result<EquivalenceRow> {
            let spec = ImpairmentChannelSpec::random(&base, &cfg.montecarlo.ranges, derive_seed(cfg.seed, TAG_SPEC, i as u64));
            let nmse_db = equivalence_nmse_db(&spec, omega, e.samples, derive_seed(cfg.seed, TAG_NOISE, i as u64))?;
            Ok(EquivalenceRow {
                channel_id: channel_id(i),
                delta1: spec.delta1,
                delta2: spec.delta2,
                phi1_deg: spec.phi1_deg,
                phi2_deg: spec.phi2_deg,
                nmse_db,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    out.csv("equivalence.csv", &rows)?;
    let worst = rows.iter().map(|r| r.nmse_db).fold(f64::NEG_INFINITY, f64::max);
    Ok(vec![Check::new(
        "equivalence_nmse",
        worst < e.max_nmse_db,
        format!("worst NMSE {worst:.2} dB over {} channels (bound {})", rows.len(), e.max_nmse_db),
    )])
}
