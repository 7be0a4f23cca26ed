//! FIR taps, linear convolution, and the window-method designs used by the
//! transmitter (pulse shaping, band split) and the channel (skews).

use std::f64::consts::PI;
use std::ops::{AddAssign, Mul};

use num_complex::Complex64;
use num_traits::Zero;

use crate::error::{invalid, Error, Result};
use crate::signal::{Sample, SampledSignal};

/// FIR coefficients with a declared group delay in samples.
///
/// Filtering with these taps moves the output origin back by `delay`, so the
/// filtered signal stays aligned with its input on the absolute time axis.
#[derive(Debug, Clone, PartialEq)]
pub struct FirTaps<T> {
    coeffs: Vec<T>,
    delay: i64,
}

impl<T: Sample> FirTaps<T> {
    pub fn new(coeffs: Vec<T>, delay: i64) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::EmptyInput("FIR taps"));
        }
        if let Some(i) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFiniteTaps(i));
        }
        Ok(Self { coeffs, delay })
    }

    /// Taps with the delay of a linear-phase design: `(len - 1) / 2`.
    pub fn centered(coeffs: Vec<T>) -> Result<Self> {
        let delay = (coeffs.len() as i64 - 1) / 2;
        Self::new(coeffs, delay)
    }

    pub fn identity() -> Self {
        Self {
            coeffs: vec![T::one()],
            delay: 0,
        }
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn delay(&self) -> i64 {
        self.delay
    }

    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(Sample::norm_sqr).sum()
    }

    /// True for a single unit tap at the declared delay, possibly zero padded.
    pub fn is_pure_delay(&self) -> bool {
        self.coeffs.iter().enumerate().all(|(i, c)| {
            if i as i64 == self.delay {
                (*c - T::one()).norm_sqr() == 0.0
            } else {
                c.norm_sqr() == 0.0
            }
        })
    }
}

impl FirTaps<f64> {
    /// DTFT at `f` cycles/sample, referenced to the declared delay.
    pub fn response(&self, f: f64) -> Complex64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, &c)| c * Complex64::from_polar(1.0, -2.0 * PI * f * (k as f64 - self.delay as f64)))
            .sum()
    }

    pub fn to_complex(&self) -> FirTaps<Complex64> {
        FirTaps {
            coeffs: self.coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect(),
            delay: self.delay,
        }
    }
}

impl FirTaps<Complex64> {
    pub fn response(&self, f: f64) -> Complex64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, &c)| c * Complex64::from_polar(1.0, -2.0 * PI * f * (k as f64 - self.delay as f64)))
            .sum()
    }
}

/// Full linear convolution `y[n] = sum_m h[m] x[n - m]`, length `N + L - 1`.
pub fn convolve<S, T, O>(x: &[S], h: &[T]) -> Vec<O>
where
    S: Copy,
    T: Copy + Mul<S, Output = O>,
    O: Copy + Zero + AddAssign,
{
    if x.is_empty() || h.is_empty() {
        return Vec::new();
    }
    let mut y = vec![O::zero(); x.len() + h.len() - 1];
    for (m, &hm) in h.iter().enumerate() {
        for (n, &xn) in x.iter().enumerate() {
            y[n + m] += hm * xn;
        }
    }
    y
}

/// Linear convolution with origin bookkeeping.
///
/// The output holds the full convolution and its origin is moved back by the
/// declared delay of `h`.
pub fn fir_filter<S, T, O>(x: &SampledSignal<S>, h: &FirTaps<T>) -> Result<SampledSignal<O>>
where
    S: Sample,
    T: Sample + Mul<S, Output = O>,
    O: Sample,
{
    if x.is_empty() {
        return Err(Error::EmptyInput("signal"));
    }
    if let Some(i) = h.coeffs().iter().position(|c| !c.is_finite()) {
        return Err(Error::NonFiniteTaps(i));
    }
    let y = convolve(x.samples(), h.coeffs());
    SampledSignal::with_origin(y, x.rate_hz(), x.origin() - h.delay())
}

/// Root-raised-cosine pulse with unit energy reaching `span_symbols` on
/// each side of the peak (`2 * span_symbols * sps + 1` taps).
pub fn design_rrc(rolloff: f64, span_symbols: usize, sps: usize) -> Result<FirTaps<f64>> {
    if !(rolloff > 0.0 && rolloff <= 1.0) {
        return Err(invalid("rolloff", format!("must lie in (0, 1], got {rolloff}")));
    }
    if sps < 2 {
        return Err(invalid("sps", format!("must be at least 2, got {sps}")));
    }
    if span_symbols < 2 {
        return Err(invalid(
            "span_symbols",
            format!("{span_symbols} symbols cannot hold the main lobe (need >= 2)"),
        ));
    }
    let half = (span_symbols * sps) as i64;
    let b = rolloff;
    let mut h: Vec<f64> = (-half..=half)
        .map(|k| {
            let t = k as f64 / sps as f64;
            if k == 0 {
                1.0 - b + 4.0 * b / PI
            } else if ((4.0 * b * t).abs() - 1.0).abs() < 1e-12 {
                b / 2f64.sqrt()
                    * ((1.0 + 2.0 / PI) * (PI / (4.0 * b)).sin() + (1.0 - 2.0 / PI) * (PI / (4.0 * b)).cos())
            } else {
                ((PI * t * (1.0 - b)).sin() + 4.0 * b * t * (PI * t * (1.0 + b)).cos())
                    / (PI * t * (1.0 - (4.0 * b * t).powi(2)))
            }
        })
        .collect();
    let norm = h.iter().map(|x| x * x).sum::<f64>().sqrt();
    h.iter_mut().for_each(|x| *x /= norm);
    FirTaps::new(h, half)
}

pub(crate) fn blackman(x: f64, len: usize) -> f64 {
    let n = (len - 1) as f64;
    if !(0.0..=n).contains(&x) {
        return 0.0;
    }
    0.42 - 0.5 * (2.0 * PI * x / n).cos() + 0.08 * (4.0 * PI * x / n).cos()
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Windowed-sinc fractional delay of `tau_samples` on top of the declared
/// integer delay `(length - 1) / 2`. Blackman window, unit DC gain.
pub fn fractional_delay(tau_samples: f64, length: usize) -> Result<FirTaps<f64>> {
    if length == 0 || length.is_multiple_of(2) {
        return Err(invalid("length", format!("must be odd and nonzero, got {length}")));
    }
    if !(tau_samples.abs() < length as f64 / 2.0) {
        return Err(invalid(
            "tau_samples",
            format!("|{tau_samples}| must stay below half the length {length}"),
        ));
    }
    let center = ((length - 1) / 2) as f64;
    let mut h: Vec<f64> = (0..length)
        .map(|k| {
            let x = k as f64 - center - tau_samples;
            sinc(x) * blackman(k as f64 - tau_samples, length)
        })
        .collect();
    let dc: f64 = h.iter().sum();
    h.iter_mut().for_each(|x| *x /= dc);
    // sinc vanishes at nonzero integers; keep the zero-delay design exact
    if tau_samples == 0.0 {
        h = (0..length).map(|k| if k as f64 == center { 1.0 } else { 0.0 }).collect();
    }
    FirTaps::centered(h)
}

/// Modified Bessel function of the first kind, order zero.
pub(crate) fn bessel_i0(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let q = x * x / 4.0;
    for k in 1..200 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    sum
}

/// Kaiser-window shape parameter for a stopband attenuation in dB.
pub fn kaiser_beta(attenuation_db: f64) -> f64 {
    if attenuation_db > 50.0 {
        0.1102 * (attenuation_db - 8.7)
    } else if attenuation_db >= 21.0 {
        0.5842 * (attenuation_db - 21.0).powf(0.4) + 0.07886 * (attenuation_db - 21.0)
    } else {
        0.0
    }
}

/// Quarter-rate half-band lowpass by the Kaiser window method.
///
/// The center tap is exactly 1/2 and every other even-offset tap is exactly
/// zero, so `H(f) + H(f + 1/2) = 1` holds to rounding for any window.
pub fn design_halfband(length: usize, attenuation_db: f64) -> Result<FirTaps<f64>> {
    if length < 3 || length % 4 != 3 {
        return Err(invalid(
            "length",
            format!("half-band length must be 4k + 3, got {length}"),
        ));
    }
    let half = ((length - 1) / 2) as i64;
    let beta = kaiser_beta(attenuation_db);
    let i0b = bessel_i0(beta);
    let h = (-half..=half)
        .map(|k| {
            if k == 0 {
                0.5
            } else if k % 2 == 0 {
                0.0
            } else {
                let r = k as f64 / half as f64;
                let w = bessel_i0(beta * (1.0 - r * r).max(0.0).sqrt()) / i0b;
                (PI * k as f64 / 2.0).sin() / (PI * k as f64) * w
            }
        })
        .collect();
    FirTaps::centered(h)
}
