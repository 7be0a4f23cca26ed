//! Background adaptation loop: channel estimation from subsampled feedback
//! and equalizer updates driven by the backpropagated model error.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::backprop::band_gradient;
use super::equalizer::{ie_init, ie_lms_step, ImpairmentEqualizer, IE_TAPS};
use super::estimate::{ce_lms_step, rotating_instant, ChannelEstimate};
use crate::channel::{build_equivalent_mimo, ChannelStream, ImpairmentChannelSpec, CHANNEL_LATENCY, F_LEAD, F_TAPS};
use crate::dsp::lo_phasor;
use crate::error::{invalid, Result};
use crate::mimo::MimoFir;
use crate::signal::MultiStream;
use crate::splitter::{generate_frame, pulse_shape, split_bands, ConstellationMap, TxParams};

/// Samples at each end of a training frame that never drive an update.
const WARM: usize = 128;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdaptConfig {
    /// Full-rate samples per training frame.
    pub frame_samples: usize,
    /// Samples of estimator-only training before the equalizer adapts.
    pub ce_only_samples: usize,
    /// Samples of joint training afterwards.
    pub joint_samples: usize,
    /// Equalizer output computed this many samples at a time.
    pub block: usize,
    /// Normalized equalizer step.
    pub ie_step: f64,
    /// Normalized estimator step.
    pub ce_step: f64,
    pub update_decimation: usize,
    pub feedback_m: usize,
    /// Equalizer length used by [`calibrate`].
    pub ie_taps: usize,
    /// Samples per trace point.
    pub trace_every: usize,
    /// Required drop of the physical error before a run counts as converged
    /// (unless it is already below `floor_db`).
    pub min_improvement_db: f64,
    pub floor_db: f64,
}

impl Default for AdaptConfig {
    fn default() -> Self {
        Self {
            frame_samples: 1 << 15,
            ce_only_samples: 1 << 18,
            joint_samples: 1 << 20,
            block: 256,
            ie_step: 0.5,
            ce_step: 0.5,
            update_decimation: 16,
            feedback_m: 128,
            ie_taps: IE_TAPS,
            trace_every: 1 << 16,
            min_improvement_db: 1.0,
            floor_db: -25.0,
        }
    }
}

impl AdaptConfig {
    /// Schedule for calibrating the identity equalizer against the nominal
    /// channel, starting from an exact channel estimate.
    pub fn calibration() -> Self {
        Self {
            ce_only_samples: 0,
            joint_samples: 4 << 20,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.frame_samples < 8 * WARM {
            return Err(invalid("frame_samples", format!("need at least {}", 8 * WARM)));
        }
        if self.ie_taps.is_multiple_of(2) {
            return Err(invalid("ie_taps", format!("must be odd, got {}", self.ie_taps)));
        }
        if self.block == 0 || self.update_decimation == 0 || self.feedback_m == 0 || self.trace_every == 0 {
            return Err(invalid("block", "block, update_decimation, feedback_m and trace_every must be positive"));
        }
        for (name, v) in [("ie_step", self.ie_step), ("ce_step", self.ce_step)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("must be a finite non-negative step, got {v}")));
            }
        }
        Ok(())
    }
}

/// Error powers over one trace window, in dB relative to the reference
/// signal power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub samples: u64,
    /// `remodulate(F_hat s) - x`, the error the equalizer minimizes.
    pub model_mse_db: f64,
    /// `x_hat - x` at the modulator input.
    pub physical_mse_db: f64,
    /// Feedback prediction error of the estimator.
    pub ce_mse_db: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdaptOutcome {
    pub ie: ImpairmentEqualizer,
    pub est: ChannelEstimate,
    pub trace: Vec<TracePoint>,
    pub converged: bool,
    pub dac_saturations: u64,
}

#[derive(Default)]
struct Acc {
    model: f64,
    phys: f64,
    sig: f64,
    ce: f64,
    ce_sig: f64,
    n: u64,
}

impl Acc {
    fn point(&self, samples: u64) -> TracePoint {
        let db = |a: f64, b: f64| if b > 0.0 { 10.0 * (a / b).log10() } else { f64::NAN };
        TracePoint {
            samples,
            model_mse_db: db(self.model, self.sig),
            physical_mse_db: db(self.phys, self.sig),
            ce_mse_db: db(self.ce, self.ce_sig),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorTracePoint {
    pub samples: u64,
    pub nmse_db: f64,
}

/// Trains `est` alone on white Gaussian DAC inputs of standard deviation
/// `sigma` through `spec`, with feedback at rotating instants, and records
/// the tap NMSE against `truth` every `trace_every` samples.
pub fn train_estimator_white(
    spec: &ImpairmentChannelSpec,
    omega0: f64,
    est: &mut ChannelEstimate,
    truth: &MimoFir,
    samples: usize,
    sigma: f64,
    trace_every: usize,
    seed: u64,
) -> Result<Vec<EstimatorTracePoint>> {
    if trace_every == 0 {
        return Err(invalid("trace_every", "must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s: Vec<Vec<f64>> = (0..4)
        .map(|_| {
            (0..samples)
                .map(|_| {
                    let v: f64 = StandardNormal.sample(&mut rng);
                    sigma * v
                })
                .collect()
        })
        .collect();
    let mut ch = ChannelStream::new(spec, omega0, 0)?;
    let lat = CHANNEL_LATENCY as usize;
    let history = est.f.len() + lat;
    let mut trace = vec![EstimatorTracePoint {
        samples: 0,
        nmse_db: est.f.nmse_db(truth),
    }];
    let mut k: u64 = 0;
    let mut next = rotating_instant(0, est.m) as usize;
    for t in 0..samples {
        let x_hat = ch.step([s[0][t], s[1][t], s[2][t], s[3][t]]);
        if t >= lat {
            let n = t - lat;
            if n == next {
                if n >= history && n + est.f.len() < samples {
                    ce_lms_step(est, &s, n, n as i64, x_hat, omega0)?;
                }
                k += 1;
                next = rotating_instant(k, est.m) as usize;
            }
        }
        if (t + 1) % trace_every == 0 {
            trace.push(EstimatorTracePoint {
                samples: t as u64 + 1,
                nmse_db: est.f.nmse_db(truth),
            });
        }
    }
    Ok(trace)
}

/// One training frame: reference `x` and equalizer input `r`, both starting
/// at time 0 and free of edge transients.
pub fn training_frame(tx: &TxParams, n_samples: usize, seed: u64) -> Result<(Vec<Complex64>, MultiStream)> {
    let map = ConstellationMap::qam16();
    let guard = 2 * tx.rrc_span_symbols;
    let n_sym = n_samples.div_ceil(tx.sps) + 2 * guard;
    let frame = generate_frame(seed, n_sym, &map)?;
    let x = pulse_shape(&frame.symbols, &tx.rrc()?, tx.sps, tx.rate_hz())?;
    let start = (guard * tx.sps) as i64;
    let x = x.shifted(-start);
    let r = split_bands(&x, &tx.split_config()?)?.window(0, n_samples);
    let xs = (0..n_samples as i64).map(|t| x.at(t)).collect();
    Ok((xs, r))
}

/// Adapts an identity equalizer to `nominal`. The estimator starts from the
/// equivalent model of the nominal channel, standing in for a factory
/// characterization.
pub fn calibrate(cfg: &AdaptConfig, tx: &TxParams, nominal: &ImpairmentChannelSpec, seed: u64) -> Result<AdaptOutcome> {
    cfg.validate()?;
    let f = build_equivalent_mimo(nominal, tx.omega0(), F_TAPS, F_LEAD)?;
    let est = ChannelEstimate::new(f, cfg.ce_step, cfg.feedback_m)?;
    run_adaptation(cfg, tx, nominal, ie_init(cfg.ie_taps), est, seed)
}

/// Runs estimator-only and then joint adaptation against the physical
/// channel `spec`, starting from `ie` and `est`.
pub fn run_adaptation(
    cfg: &AdaptConfig,
    tx: &TxParams,
    spec: &ImpairmentChannelSpec,
    mut ie: ImpairmentEqualizer,
    mut est: ChannelEstimate,
    seed: u64,
) -> Result<AdaptOutcome> {
    cfg.validate()?;
    let omega = tx.omega0();
    let n = cfg.frame_samples;
    let usable = (n - 2 * WARM) as u64;
    let total = (cfg.ce_only_samples + cfg.joint_samples) as u64;
    let lf = est.f.len();
    let df = est.f.delay();
    let dh = ie.h.delay();
    est.m = cfg.feedback_m;
    est.mu = cfg.ce_step;
    ie.beta = cfg.ie_step;
    ie.update_decimation = cfg.update_decimation;

    let mut trace = Vec::new();
    let mut acc = Acc::default();
    let mut fb_k: u64 = 0;
    let mut next_fb = rotating_instant(0, cfg.feedback_m);
    let mut saturations = 0;
    let mut updates = 0usize;
    // update instants rotate through every phase of the carrier and hold
    let mut up_j: u64 = 0;
    let mut next_up = cfg.ce_only_samples as u64;
    let mut done: u64 = 0;
    let mut frame_idx: u64 = 0;

    let mut s_buf = vec![vec![0.0; n]; 4];
    let mut g_buf = vec![vec![0.0; n]; 4];
    let mut xphys = vec![Complex64::new(0.0, 0.0); n];

    while done < total {
        let frame_seed = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(frame_idx);
        let (x, r) = training_frame(tx, n, frame_seed)?;
        let r_buf = r.streams();
        let mut ch = ChannelStream::new(spec, omega, 0)?;
        for v in g_buf.iter_mut().chain(s_buf.iter_mut()) {
            v.fill(0.0);
        }
        let mut g_next = 0usize;
        let mut ie_next = WARM;
        let mut phys_next = WARM;
        let g_of = |g: u64| (g % usable) as usize + WARM;
        let frame_start = frame_idx * usable;

        for b in (0..n).step_by(cfg.block) {
            let end = (b + cfg.block).min(n);
            let mut y = [0.0; 4];
            for k in b..end {
                ie.h.output_at(r_buf, k, &mut y);
                for u in 0..4 {
                    s_buf[u][k] = y[u];
                }
                let out = ch.step(y);
                let t = k as i64 - CHANNEL_LATENCY;
                if t >= 0 {
                    xphys[t as usize] = out;
                }
            }
            let phys_end = (end as i64 - CHANNEL_LATENCY).max(0) as usize;
            let g_end = (end as i64 - df).max(0) as usize;
            let stop = n - WARM;

            for k in g_next..g_end {
                est.f.output_at(&s_buf, k, &mut y);
                let c = lo_phasor(omega, k as i64);
                let pred = Complex64::new(y[0], y[1]) * c + Complex64::new(y[2], y[3]) * c.conj();
                let e = pred - x[k];
                let g = band_gradient(e, omega, k as i64);
                for u in 0..4 {
                    g_buf[u][k] = g[u];
                }
                if (WARM..stop).contains(&k) {
                    acc.model += e.norm_sqr();
                }
            }
            g_next = g_end.max(g_next);

            for k in phys_next..phys_end.min(stop) {
                let gpos = frame_start + (k - WARM) as u64;
                if gpos >= total {
                    break;
                }
                acc.phys += (xphys[k] - x[k]).norm_sqr();
                acc.sig += x[k].norm_sqr();
                acc.n += 1;
                if acc.n as usize >= cfg.trace_every {
                    trace.push(acc.point(gpos + 1));
                    acc = Acc::default();
                }
            }
            phys_next = phys_next.max(phys_end.min(stop));

            // estimator: feedback samples whose measurement and regressor exist
            let ce_end = phys_end.min(g_end).min(stop);
            while next_fb < frame_start + usable && g_of(next_fb) < ce_end && next_fb >= frame_start {
                let k = g_of(next_fb);
                if frame_start + (k - WARM) as u64 >= total {
                    break;
                }
                if cfg.ce_step > 0.0 {
                    let e2 = ce_lms_step(&mut est, &s_buf, k, k as i64, xphys[k], omega)?;
                    acc.ce += e2;
                    acc.ce_sig += xphys[k].norm_sqr();
                }
                fb_k += 1;
                next_fb = rotating_instant(fb_k, cfg.feedback_m);
            }

            // equalizer: needs the band errors over the whole F_hat span
            let ie_end = ((g_end as i64) - (lf as i64 - 1) + df).clamp(0, stop as i64) as usize;
            while ie_next < ie_end {
                let k = ie_next;
                ie_next += 1;
                let gpos = frame_start + (k - WARM) as u64;
                if gpos != next_up || gpos >= total {
                    continue;
                }
                up_j += 1;
                next_up = cfg.ce_only_samples as u64 + rotating_instant(up_j, cfg.update_decimation);
                if cfg.ie_step == 0.0 {
                    continue;
                }
                let mut et = [0.0; 4];
                est.f.adjoint_at(&g_buf, k, &mut et);
                let lo = (k as i64 + dh - (ie.h.len() as i64 - 1)).max(0) as usize;
                let hi = ((k as i64 + dh) as usize).min(n - 1);
                let energy: f64 = r_buf.iter().map(|rv| rv[lo..=hi].iter().map(|v| v * v).sum::<f64>()).sum();
                if energy > 0.0 {
                    updates += 1;
                    ie_lms_step(&mut ie, r_buf, k, &et, cfg.ie_step / energy, updates)?;
                }
            }
        }
        saturations += ch.saturated();
        done = (done + usable).min(total);
        frame_idx += 1;
        while next_up < frame_idx * usable {
            up_j += 1;
            next_up = cfg.ce_only_samples as u64 + rotating_instant(up_j, cfg.update_decimation);
        }
        // estimator schedule never lags a frame behind
        if next_fb < frame_idx * usable {
            while rotating_instant(fb_k, cfg.feedback_m) < frame_idx * usable {
                fb_k += 1;
            }
            next_fb = rotating_instant(fb_k, cfg.feedback_m);
        }
    }
    if acc.n > 0 {
        trace.push(acc.point(done));
    }
    let converged = match (trace.first(), trace.last()) {
        (Some(a), Some(z)) => z.physical_mse_db <= cfg.floor_db || z.physical_mse_db <= a.physical_mse_db - cfg.min_improvement_db,
        _ => false,
    };
    Ok(AdaptOutcome {
        ie,
        est,
        trace,
        converged,
        dac_saturations: saturations,
    })
}
