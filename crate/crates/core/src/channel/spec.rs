use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::mixer::QuadMixerModel;
use crate::dsp::{design_butterworth_lp, fir_filter, fractional_delay, FirTaps, IirBiquadChain};
use crate::error::{invalid, Result};
use crate::signal::SampledSignal;

/// Taps of every skew filter; the filter centre (16 samples) is the
/// per-stage latency of the physical model.
pub const SKEW_TAPS: usize = 33;

/// The eight analog paths of the two-band transmitter, in the fixed order
/// used by every per-path array.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PathLabel {
    B1I,
    B1Q,
    B2I,
    B2Q,
    C1I,
    C1Q,
    C2I,
    C2Q,
}

impl PathLabel {
    pub const ALL: [PathLabel; 8] = [
        PathLabel::B1I,
        PathLabel::B1Q,
        PathLabel::B2I,
        PathLabel::B2Q,
        PathLabel::C1I,
        PathLabel::C1Q,
        PathLabel::C2I,
        PathLabel::C2Q,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// DAC-to-mixer path (as opposed to mixer-to-modulator).
    pub fn is_dac_path(self) -> bool {
        self.index() < 4
    }

    pub fn band(self) -> u8 {
        (self.index() % 4 / 2) as u8 + 1
    }

    pub fn is_quadrature(self) -> bool {
        self.index() % 2 == 1
    }
}

impl fmt::Display for PathLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// Response of one analog path: an optional Butterworth lowpass followed
/// by a fractional-delay skew.
#[derive(Debug, Clone)]
pub struct PathResponse {
    pub label: PathLabel,
    pub base: Option<IirBiquadChain>,
    pub skew: FirTaps<f64>,
}

impl PathResponse {
    pub fn response(&self, f_hz: f64, rate_hz: f64) -> Complex64 {
        let b = self.base.as_ref().map_or(Complex64::new(1.0, 0.0), |c| c.response(f_hz));
        b * self.skew.response(f_hz / rate_hz)
    }

    /// Impulse response over `len` samples of the lowpass, with the skew
    /// delay bookkeeping reflected in the origin.
    pub fn impulse_response(&self, len: usize, rate_hz: f64) -> SampledSignal<f64> {
        let base = match &self.base {
            Some(c) => c.impulse_response(len),
            None => {
                let mut v = vec![0.0; len];
                v[0] = 1.0;
                v
            }
        };
        let base = SampledSignal::new(base, rate_hz).expect("valid rate");
        fir_filter(&base, &self.skew).expect("skew taps are finite")
    }

    /// Applies the path to `x`, carrying the skew latency in the origin.
    pub fn apply(&self, x: &SampledSignal<f64>) -> SampledSignal<f64> {
        let y = match &self.base {
            Some(c) => c.filter(x),
            None => x.clone(),
        };
        fir_filter(&y, &self.skew).expect("skew taps are finite")
    }
}

fn default_bw_scale() -> [f64; 8] {
    [1.0; 8]
}
fn default_dac_bits() -> Option<u32> {
    Some(8)
}
fn default_alpha() -> usize {
    2
}
fn default_full_scale() -> f64 {
    std::f64::consts::SQRT_2
}
fn default_rate() -> f64 {
    256e9
}
fn default_b_bw() -> Option<f64> {
    Some(32e9)
}
fn default_order() -> usize {
    3
}

/// Complete description of the analog impairments of one transmitter.
///
/// Per-path arrays follow [`PathLabel::ALL`]: `B1I, B1Q, B2I, B2Q, C1I, C1Q,
/// C2I, C2Q`. `bw_scale` multiplies the nominal bandwidth of that path
/// (ignored on a path without a nominal lowpass); `skew_ps` is its delay in
/// picoseconds. `dac_bits = null` disables quantization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImpairmentChannelSpec {
    #[serde(default)]
    pub delta1: f64,
    #[serde(default)]
    pub delta2: f64,
    #[serde(default)]
    pub phi1_deg: f64,
    #[serde(default)]
    pub phi2_deg: f64,
    #[serde(default = "default_bw_scale")]
    pub bw_scale: [f64; 8],
    #[serde(default)]
    pub skew_ps: [f64; 8],
    #[serde(default = "default_dac_bits")]
    pub dac_bits: Option<u32>,
    #[serde(default = "default_alpha")]
    pub alpha: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_full_scale")]
    pub full_scale: f64,
    /// Full simulation rate; the DACs run at `rate_hz / alpha`.
    #[serde(default = "default_rate")]
    pub rate_hz: f64,
    #[serde(default = "default_b_bw")]
    pub b_nominal_bw_hz: Option<f64>,
    #[serde(default)]
    pub c_nominal_bw_hz: Option<f64>,
    #[serde(default = "default_order")]
    pub filter_order: usize,
}

impl Default for ImpairmentChannelSpec {
    fn default() -> Self {
        Self {
            delta1: 0.0,
            delta2: 0.0,
            phi1_deg: 0.0,
            phi2_deg: 0.0,
            bw_scale: default_bw_scale(),
            skew_ps: [0.0; 8],
            dac_bits: default_dac_bits(),
            alpha: default_alpha(),
            seed: 0,
            full_scale: default_full_scale(),
            rate_hz: default_rate(),
            b_nominal_bw_hz: default_b_bw(),
            c_nominal_bw_hz: None,
            filter_order: default_order(),
        }
    }
}

/// Uniform ranges for random channel draws: `delta ~ U[-delta_max, delta_max]`
/// per band, likewise `phi`, and `bw_scale = 1 + U[-bw_max, bw_max]` on each
/// DAC path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImpairmentRanges {
    pub delta_max: f64,
    pub phi_max_deg: f64,
    pub bw_max: f64,
}

impl Default for ImpairmentRanges {
    fn default() -> Self {
        Self {
            delta_max: 0.25,
            phi_max_deg: 22.0,
            bw_max: 0.25,
        }
    }
}

impl ImpairmentChannelSpec {
    /// Nominal transmitter: 32 GHz DAC paths, 8-bit DACs at half rate, no
    /// impairments.
    pub fn nominal() -> Self {
        Self::default()
    }

    /// Flat paths, no quantization, DACs at full rate.
    pub fn ideal() -> Self {
        Self {
            dac_bits: None,
            alpha: 1,
            b_nominal_bw_hz: None,
            ..Self::default()
        }
    }

    /// Draws impairments uniformly within `ranges` on top of `base`.
    pub fn random(base: &Self, ranges: &ImpairmentRanges, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sym = |m: f64| if m > 0.0 { rng.random_range(-m..=m) } else { 0.0 };
        let delta1 = sym(ranges.delta_max);
        let delta2 = sym(ranges.delta_max);
        let phi1_deg = sym(ranges.phi_max_deg);
        let phi2_deg = sym(ranges.phi_max_deg);
        let mut bw_scale = base.bw_scale;
        for s in bw_scale.iter_mut().take(4) {
            *s *= 1.0 + sym(ranges.bw_max);
        }
        Self {
            delta1,
            delta2,
            phi1_deg,
            phi2_deg,
            bw_scale,
            seed,
            ..base.clone()
        }
    }

    pub fn dac_rate_hz(&self) -> f64 {
        self.rate_hz / self.alpha as f64
    }

    pub fn mixer(&self, band: u8) -> QuadMixerModel {
        match band {
            1 => QuadMixerModel::new(1, self.delta1, self.phi1_deg.to_radians()),
            _ => QuadMixerModel::new(2, self.delta2, self.phi2_deg.to_radians()),
        }
    }

    pub fn skew_samples(&self, label: PathLabel) -> f64 {
        self.skew_ps[label.index()] * 1e-12 * self.rate_hz
    }

    pub fn path(&self, label: PathLabel) -> Result<PathResponse> {
        let nominal = if label.is_dac_path() {
            self.b_nominal_bw_hz
        } else {
            self.c_nominal_bw_hz
        };
        let base = nominal
            .map(|bw| design_butterworth_lp(self.filter_order, bw * self.bw_scale[label.index()], self.rate_hz))
            .transpose()?;
        let skew = fractional_delay(self.skew_samples(label), SKEW_TAPS)?;
        Ok(PathResponse { label, base, skew })
    }

    pub fn paths(&self) -> Result<Vec<PathResponse>> {
        PathLabel::ALL.iter().map(|&l| self.path(l)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.alpha == 0 {
            return Err(invalid("alpha", "must be at least 1"));
        }
        if !(self.rate_hz > 0.0 && self.rate_hz.is_finite()) {
            return Err(invalid("rate_hz", format!("must be positive, got {}", self.rate_hz)));
        }
        if !(self.full_scale > 0.0 && self.full_scale.is_finite()) {
            return Err(invalid("full_scale", format!("must be positive, got {}", self.full_scale)));
        }
        for (name, v) in [
            ("delta1", self.delta1),
            ("delta2", self.delta2),
            ("phi1_deg", self.phi1_deg),
            ("phi2_deg", self.phi2_deg),
        ] {
            if !v.is_finite() {
                return Err(invalid(name, format!("must be finite, got {v}")));
            }
        }
        if self.delta1.abs() >= 1.0 || self.delta2.abs() >= 1.0 {
            return Err(invalid("delta", "gain imbalance must satisfy |delta| < 1"));
        }
        if let Some(b) = self.dac_bits {
            if b == 0 || b > 52 {
                return Err(invalid("dac_bits", format!("must lie in 1..=52, got {b}")));
            }
        }
        for &s in &self.bw_scale {
            if !(s > 0.0 && s.is_finite()) {
                return Err(invalid("bw_scale", format!("entries must be positive, got {s}")));
            }
        }
        // building every path checks cutoffs, stability and skew range
        self.paths().map(|_| ())
    }
}
