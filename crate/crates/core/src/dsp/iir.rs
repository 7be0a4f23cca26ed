//! Butterworth lowpass as a cascade of second-order sections.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::signal::SampledSignal;

/// One section `(b0 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Biquad {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl Biquad {
    pub fn response(&self, f: f64) -> Complex64 {
        let z1 = Complex64::from_polar(1.0, -2.0 * PI * f);
        let z2 = z1 * z1;
        (self.b0 + self.b1 * z1 + self.b2 * z2) / (1.0 + self.a1 * z1 + self.a2 * z2)
    }

    /// Both poles strictly inside the unit circle (Jury conditions).
    pub fn is_stable(&self) -> bool {
        self.a2.abs() < 1.0 && self.a1.abs() < 1.0 + self.a2
    }
}

/// Transposed direct-form II state for one section.
#[derive(Debug, Clone, Copy, Default)]
struct SectionState {
    s1: f64,
    s2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IirBiquadChain {
    sections: Vec<Biquad>,
    order: usize,
    cutoff_hz: f64,
    rate_hz: f64,
}

impl IirBiquadChain {
    pub fn sections(&self) -> &[Biquad] {
        &self.sections
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn cutoff_hz(&self) -> f64 {
        self.cutoff_hz
    }

    pub fn rate_hz(&self) -> f64 {
        self.rate_hz
    }

    pub fn is_stable(&self) -> bool {
        self.sections.iter().all(Biquad::is_stable)
    }

    /// Frequency response at `f_hz`.
    pub fn response(&self, f_hz: f64) -> Complex64 {
        let f = f_hz / self.rate_hz;
        self.sections.iter().map(|s| s.response(f)).product()
    }

    pub fn magnitude_db(&self, f_hz: f64) -> f64 {
        20.0 * self.response(f_hz).norm().log10()
    }

    pub fn filter(&self, x: &SampledSignal<f64>) -> SampledSignal<f64> {
        let mut state = IirState::new(self);
        x.map(|v| state.step(v))
    }

    /// Impulse response truncated to `len` samples.
    pub fn impulse_response(&self, len: usize) -> Vec<f64> {
        let mut state = IirState::new(self);
        (0..len).map(|k| state.step(if k == 0 { 1.0 } else { 0.0 })).collect()
    }
}

/// Streaming state of an [`IirBiquadChain`].
#[derive(Debug, Clone)]
pub struct IirState {
    sections: Vec<Biquad>,
    state: Vec<SectionState>,
}

impl IirState {
    pub fn new(chain: &IirBiquadChain) -> Self {
        Self {
            sections: chain.sections.clone(),
            state: vec![SectionState::default(); chain.sections.len()],
        }
    }

    #[inline]
    pub fn step(&mut self, x: f64) -> f64 {
        let mut v = x;
        for (c, s) in self.sections.iter().zip(self.state.iter_mut()) {
            let y = c.b0 * v + s.s1;
            s.s1 = c.b1 * v - c.a1 * y + s.s2;
            s.s2 = c.b2 * v - c.a2 * y;
            v = y;
        }
        v
    }

    pub fn reset(&mut self) {
        self.state.iter_mut().for_each(|s| *s = SectionState::default());
    }
}

/// Butterworth lowpass by the bilinear transform with cutoff pre-warping.
///
/// The magnitude at `cutoff_hz` is exactly `1/sqrt(2)` and the DC gain is 1.
pub fn design_butterworth_lp(order: usize, cutoff_hz: f64, rate_hz: f64) -> Result<IirBiquadChain> {
    if order == 0 {
        return Err(invalid("order", "must be at least 1"));
    }
    if !(cutoff_hz > 0.0 && cutoff_hz < rate_hz / 2.0) {
        return Err(invalid(
            "cutoff_hz",
            format!("{cutoff_hz} Hz must lie in (0, {}) Hz", rate_hz / 2.0),
        ));
    }
    let k = (PI * cutoff_hz / rate_hz).tan();
    let mut sections = Vec::with_capacity(order.div_ceil(2));
    for i in 0..order / 2 {
        let theta = PI * (2 * i + 1) as f64 / (2 * order) as f64;
        let q = 1.0 / (2.0 * theta.sin());
        let norm = 1.0 / (1.0 + k / q + k * k);
        let b0 = k * k * norm;
        sections.push(Biquad {
            b0,
            b1: 2.0 * b0,
            b2: b0,
            a1: 2.0 * (k * k - 1.0) * norm,
            a2: (1.0 - k / q + k * k) * norm,
        });
    }
    if order % 2 == 1 {
        let norm = 1.0 / (1.0 + k);
        sections.push(Biquad {
            b0: k * norm,
            b1: k * norm,
            b2: 0.0,
            a1: (k - 1.0) * norm,
            a2: 0.0,
        });
    }
    let chain = IirBiquadChain {
        sections,
        order,
        cutoff_hz,
        rate_hz,
    };
    assert!(chain.is_stable(), "bilinear Butterworth design produced an unstable section");
    Ok(chain)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Bilinear-mapped analog Butterworth magnitude, evaluated independently
    /// of the section coefficients.
    fn warped_analog_db(order: usize, fc: f64, fs: f64, f: f64) -> f64 {
        let ratio = (PI * f / fs).tan() / (PI * fc / fs).tan();
        -10.0 * (1.0 + ratio.powi(2 * order as i32)).log10()
    }

    #[test]
    fn dc_gain_is_unity() {
        for order in 1..=6 {
            let b = design_butterworth_lp(order, 32e9, 256e9).unwrap();
            assert!((b.response(0.0).norm() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn cutoff_is_three_db() {
        let b = design_butterworth_lp(3, 32e9, 256e9).unwrap();
        assert!((b.response(32e9).norm() - 0.5f64.sqrt()).abs() < 1e-3);
        assert!((b.magnitude_db(32e9) + 3.0103).abs() < 0.05);
    }

    #[test]
    fn octave_matches_warped_prototype() {
        let b = design_butterworth_lp(3, 32e9, 256e9).unwrap();
        let want = warped_analog_db(3, 32e9, 256e9, 64e9);
        assert!((b.magnitude_db(64e9) - want).abs() < 1e-6, "{} vs {}", b.magnitude_db(64e9), want);
        for order in [2, 4, 5] {
            let b = design_butterworth_lp(order, 20e9, 256e9).unwrap();
            for f in [5e9, 20e9, 50e9, 100e9] {
                assert!((b.magnitude_db(f) - warped_analog_db(order, 20e9, 256e9, f)).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn rejects_cutoff_above_nyquist() {
        assert!(design_butterworth_lp(3, 130e9, 256e9).is_err());
        assert!(design_butterworth_lp(0, 30e9, 256e9).is_err());
    }

    #[test]
    fn streaming_matches_response() {
        let b = design_butterworth_lp(3, 32e9, 256e9).unwrap();
        let h = b.impulse_response(400);
        let f = 0.07;
        let dtft: Complex64 = h
            .iter()
            .enumerate()
            .map(|(k, &v)| v * Complex64::from_polar(1.0, -2.0 * PI * f * k as f64))
            .sum();
        assert!((dtft - b.response(f * 256e9)).norm() < 1e-10);
    }
}
