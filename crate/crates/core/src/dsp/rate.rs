//! NCO mixing and integer rate changes.

use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::signal::{Sample, SampledSignal};

/// Multiplies by `exp(j * sign * omega * t)` where `t` is the absolute time
/// index of each sample, so consecutive blocks stay phase continuous.
pub fn nco_mix<T>(x: &SampledSignal<T>, omega_rad_per_sample: f64, sign: i8) -> SampledSignal<Complex64>
where
    T: Sample + Into<Complex64>,
{
    let s = if sign >= 0 { 1.0 } else { -1.0 };
    let origin = x.origin();
    let samples = x
        .samples()
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            let t = origin + k as i64;
            v.into() * lo_phasor(s * omega_rad_per_sample, t)
        })
        .collect();
    SampledSignal::with_origin(samples, x.rate_hz(), origin).expect("rate already validated")
}

/// `exp(j * omega * t)` with the phase reduced before evaluation so long
/// records keep full precision.
#[inline]
pub fn lo_phasor(omega: f64, t: i64) -> Complex64 {
    let phase = (omega * t as f64).rem_euclid(2.0 * std::f64::consts::PI);
    Complex64::from_polar(1.0, phase)
}

/// Keeps samples whose absolute time index is a multiple of `factor`.
pub fn downsample<T: Sample>(x: &SampledSignal<T>, factor: usize) -> Result<SampledSignal<T>> {
    if factor == 0 {
        return Err(invalid("factor", "must be at least 1"));
    }
    let a = factor as i64;
    let first = x.origin().div_euclid(a) + i64::from(x.origin().rem_euclid(a) != 0);
    let samples: Vec<T> = (first..)
        .map(|j| j * a)
        .take_while(|&t| t < x.end())
        .map(|t| x.at(t))
        .collect();
    SampledSignal::with_origin(samples, x.rate_hz() / factor as f64, first)
}

/// Repeats every sample `factor` times (zero-order hold).
pub fn hold_upsample<T: Sample>(x: &SampledSignal<T>, factor: usize) -> Result<SampledSignal<T>> {
    if factor == 0 {
        return Err(invalid("factor", "must be at least 1"));
    }
    let samples = x
        .samples()
        .iter()
        .flat_map(|&v| std::iter::repeat_n(v, factor))
        .collect();
    SampledSignal::with_origin(samples, x.rate_hz() * factor as f64, x.origin() * factor as i64)
}
