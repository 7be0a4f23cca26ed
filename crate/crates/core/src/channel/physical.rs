//! Sample-by-sample model of the analog transmitter chain.

use num_complex::Complex64;

use super::spec::{ImpairmentChannelSpec, PathLabel, PathResponse, SKEW_TAPS};
use crate::dsp::{fir_filter, hold_upsample, quantize_uniform, FirTaps, IirState, UniformQuantizer};
use crate::error::{Error, Result};
use crate::signal::{MultiStream, SampledSignal};

/// Latency of one skew stage in samples.
pub const STAGE_LATENCY: i64 = (SKEW_TAPS as i64 - 1) / 2;
/// Latency from IE output to modulator input.
pub const CHANNEL_LATENCY: i64 = 2 * STAGE_LATENCY;

#[derive(Debug, Clone)]
struct SkewLine {
    taps: Vec<f64>,
    buf: Vec<f64>,
    pos: usize,
    pure: bool,
}

impl SkewLine {
    fn new(h: &FirTaps<f64>) -> Self {
        Self {
            taps: h.coeffs().to_vec(),
            buf: vec![0.0; h.len()],
            pos: 0,
            pure: h.is_pure_delay(),
        }
    }

    #[inline]
    fn step(&mut self, x: f64) -> f64 {
        let n = self.buf.len();
        self.buf[self.pos] = x;
        let y = if self.pure {
            self.buf[(self.pos + n - STAGE_LATENCY as usize) % n]
        } else {
            let mut acc = 0.0;
            let mut j = self.pos;
            for &h in &self.taps {
                acc += h * self.buf[j];
                j = if j == 0 { n - 1 } else { j - 1 };
            }
            acc
        };
        self.pos = (self.pos + 1) % n;
        y
    }
}

#[derive(Debug, Clone)]
struct PathState {
    iir: Option<IirState>,
    skew: SkewLine,
}

impl PathState {
    fn new(p: &PathResponse) -> Self {
        Self {
            iir: p.base.as_ref().map(IirState::new),
            skew: SkewLine::new(&p.skew),
        }
    }

    #[inline]
    fn step(&mut self, x: f64) -> f64 {
        let v = match &mut self.iir {
            Some(s) => s.step(x),
            None => x,
        };
        self.skew.step(v)
    }
}

/// Streaming physical channel. Feed IE output samples (full rate) one time
/// step at a time; each call returns the modulator input
/// [`CHANNEL_LATENCY`] samples earlier.
#[derive(Debug, Clone)]
pub struct ChannelStream {
    alpha: i64,
    quantizer: Option<UniformQuantizer>,
    held: [f64; 4],
    b: Vec<PathState>,
    c: Vec<PathState>,
    k: [(Complex64, Complex64); 2],
    omega: f64,
    t: i64,
    saturated: u64,
}

impl ChannelStream {
    /// `t0` is the time index of the first input sample.
    pub fn new(spec: &ImpairmentChannelSpec, omega0: f64, t0: i64) -> Result<Self> {
        spec.validate()?;
        let paths = spec.paths()?;
        let quantizer = spec
            .dac_bits
            .map(|b| UniformQuantizer::new(b, spec.full_scale))
            .transpose()?;
        Ok(Self {
            alpha: spec.alpha as i64,
            quantizer,
            held: [0.0; 4],
            b: paths[..4].iter().map(PathState::new).collect(),
            c: paths[4..].iter().map(PathState::new).collect(),
            k: [spec.mixer(1).constants(), spec.mixer(2).constants()],
            omega: omega0,
            t: t0,
            saturated: 0,
        })
    }

    /// Time index of the next input sample.
    pub fn time(&self) -> i64 {
        self.t
    }

    /// DAC samples clipped so far.
    pub fn saturated(&self) -> u64 {
        self.saturated
    }

    /// Pushes the IE output at the current time and returns the modulator
    /// input at `time() - CHANNEL_LATENCY` (before the increment).
    #[inline]
    pub fn step(&mut self, s: [f64; 4]) -> Complex64 {
        let t = self.t;
        if t.rem_euclid(self.alpha) == 0 {
            for (h, &v) in self.held.iter_mut().zip(&s) {
                *h = match &self.quantizer {
                    Some(q) => {
                        let (y, sat) = q.quantize(v);
                        self.saturated += u64::from(sat);
                        y
                    }
                    None => v,
                };
            }
        }
        let mut b = [0.0; 4];
        for (i, p) in self.b.iter_mut().enumerate() {
            b[i] = p.step(self.held[i]);
        }
        let e = crate::dsp::lo_phasor(self.omega, t - STAGE_LATENCY);
        let mut out = Complex64::new(0.0, 0.0);
        for a in 0..2 {
            let (k1, k2) = self.k[a];
            let z = Complex64::new(b[2 * a], b[2 * a + 1]) * (k1 * e + k2 * e.conj());
            let re = self.c[2 * a].step(z.re);
            let im = self.c[2 * a + 1].step(z.im);
            out += Complex64::new(re, im);
        }
        self.t += 1;
        out
    }
}

/// Runs the physical channel over a whole block of IE output.
///
/// The result covers `[s.origin() - CHANNEL_LATENCY, s.end() + CHANNEL_LATENCY)`;
/// the lowpass tails beyond that are cut.
pub fn run_physical_channel(s: &MultiStream, spec: &ImpairmentChannelSpec, omega0: f64) -> Result<SampledSignal<Complex64>> {
    if s.n_streams() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: s.n_streams(),
        });
    }
    let mut ch = ChannelStream::new(spec, omega0, s.origin())?;
    let n = s.len() + 2 * CHANNEL_LATENCY as usize;
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let x = if k < s.len() {
            [s.stream(0)[k], s.stream(1)[k], s.stream(2)[k], s.stream(3)[k]]
        } else {
            [0.0; 4]
        };
        out.push(ch.step(x));
    }
    SampledSignal::with_origin(out, s.rate_hz(), s.origin() - CHANNEL_LATENCY)
}

/// One DAC path: quantize, hold up to the full rate, lowpass, skew.
/// `s` is at the DAC rate; the result is at `alpha` times that rate.
pub fn apply_dac_path(
    s: &SampledSignal<f64>,
    path: &PathResponse,
    dac_bits: Option<u32>,
    full_scale: f64,
    alpha: usize,
) -> Result<SampledSignal<f64>> {
    if !path.label.is_dac_path() {
        return Err(Error::LabelMismatch {
            expected: "DAC (B)",
            got: path.label.to_string(),
        });
    }
    let q = match dac_bits {
        Some(b) => quantize_uniform(s, b, full_scale)?.signal,
        None => s.clone(),
    };
    Ok(path.apply(&hold_upsample(&q, alpha)?))
}

/// Even and odd parts of a pair of mixer-to-modulator responses:
/// `u = (c_I + c_Q) / 2`, `ubar = (c_I - c_Q) / 2`.
pub fn mzm_path_pair(c_i: &FirTaps<f64>, c_q: &FirTaps<f64>) -> Result<(FirTaps<f64>, FirTaps<f64>)> {
    let lo = (-c_i.delay()).min(-c_q.delay());
    let hi = (c_i.len() as i64 - c_i.delay()).max(c_q.len() as i64 - c_q.delay());
    let get = |h: &FirTaps<f64>, n: i64| {
        let m = n + h.delay();
        if (0..h.len() as i64).contains(&m) { h.coeffs()[m as usize] } else { 0.0 }
    };
    let u = (lo..hi).map(|n| 0.5 * (get(c_i, n) + get(c_q, n))).collect();
    let ub = (lo..hi).map(|n| 0.5 * (get(c_i, n) - get(c_q, n))).collect();
    Ok((FirTaps::new(u, -lo)?, FirTaps::new(ub, -lo)?))
}

/// Mixer-to-modulator electrical paths in widely-linear form:
/// `x = z * u + conj(z) * ubar`.
pub fn apply_mixer_mzm_path(z: &SampledSignal<Complex64>, u: &FirTaps<f64>, ubar: &FirTaps<f64>) -> Result<SampledSignal<Complex64>> {
    if u.delay() != ubar.delay() || u.len() != ubar.len() {
        return Err(Error::Misaligned("u and ubar must share length and delay".into()));
    }
    let a: SampledSignal<Complex64> = fir_filter(z, u)?;
    let b: SampledSignal<Complex64> = fir_filter(&z.conj(), ubar)?;
    a.checked_add(&b)
}

/// Labels of the C paths of band `a`.
pub(crate) fn c_labels(band: u8) -> (PathLabel, PathLabel) {
    if band == 1 {
        (PathLabel::C1I, PathLabel::C1Q)
    } else {
        (PathLabel::C2I, PathLabel::C2Q)
    }
}
