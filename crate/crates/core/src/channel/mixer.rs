use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dsp::lo_phasor;
use crate::signal::SampledSignal;

/// Quadrature mixer of one band with gain imbalance `delta` and phase
/// imbalance `phi_rad`. Both legs share the same errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadMixerModel {
    pub band: u8,
    pub delta: f64,
    pub phi_rad: f64,
}

impl QuadMixerModel {
    pub fn new(band: u8, delta: f64, phi_rad: f64) -> Self {
        assert!(band == 1 || band == 2, "band must be 1 or 2");
        Self { band, delta, phi_rad }
    }

    pub fn ideal(band: u8) -> Self {
        Self::new(band, 0.0, 0.0)
    }

    pub fn constants(&self) -> (Complex64, Complex64) {
        mixer_constants(self.delta, self.phi_rad, self.band)
    }

    /// `p_a(t) = k1 e^{j w t} + k2 e^{-j w t}` at integer time `t`.
    #[inline]
    pub fn carrier(&self, omega: f64, t: i64) -> Complex64 {
        let (k1, k2) = self.constants();
        let e = lo_phasor(omega, t);
        k1 * e + k2 * e.conj()
    }
}

/// Coefficients `(k_{a,1}, k_{a,2})` of the two exponentials in the
/// impaired carrier of band `band`.
pub fn mixer_constants(delta: f64, phi_rad: f64, band: u8) -> (Complex64, Complex64) {
    let up = (1.0 + delta) / 2.0;
    let dn = (1.0 - delta) / 2.0;
    let e = Complex64::from_polar(1.0, phi_rad / 2.0);
    match band {
        1 => (up * e + dn * e.conj(), up * e.conj() - dn * e),
        2 => (up * e - dn * e.conj(), up * e.conj() + dn * e),
        _ => panic!("band must be 1 or 2, got {band}"),
    }
}

/// `z[n] = s[n] * p_a(n)` using the absolute time index of each sample.
pub fn apply_quadrature_mixer(s: &SampledSignal<Complex64>, m: &QuadMixerModel, omega: f64) -> SampledSignal<Complex64> {
    let (k1, k2) = m.constants();
    let origin = s.origin();
    let out = s
        .samples()
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            let e = lo_phasor(omega, origin + k as i64);
            v * (k1 * e + k2 * e.conj())
        })
        .collect();
    SampledSignal::with_origin(out, s.rate_hz(), origin).expect("rate already validated")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn closed_form(delta: f64, phi: f64, band: u8) -> (Complex64, Complex64) {
        let (c, s) = ((phi / 2.0).cos(), (phi / 2.0).sin());
        if band == 1 {
            (Complex64::new(c, delta * s), Complex64::new(delta * c, -s))
        } else {
            (Complex64::new(delta * c, s), Complex64::new(c, -delta * s))
        }
    }

    #[test]
    fn matches_closed_forms() {
        for i in 0..21 {
            for j in 0..21 {
                let d = -0.25 + 0.025 * i as f64;
                let p = (-22.0 + 2.2 * j as f64).to_radians();
                for band in [1, 2] {
                    let (a1, a2) = mixer_constants(d, p, band);
                    let (b1, b2) = closed_form(d, p, band);
                    assert!((a1 - b1).norm() < 1e-14 && (a2 - b2).norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn quoted_values() {
        let (k1, k2) = mixer_constants(0.0, 0.0, 1);
        assert_eq!((k1, k2), (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)));
        let (k1, k2) = mixer_constants(0.25, 0.0, 1);
        assert!((k1 - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((k2 - Complex64::new(0.25, 0.0)).norm() < 1e-15);
        let (k1, k2) = mixer_constants(0.0, 22f64.to_radians(), 1);
        assert!((k1.re - 0.98163).abs() < 1e-5 && k1.im.abs() < 1e-15);
        assert!(k2.re.abs() < 1e-15 && (k2.im + 0.19081).abs() < 1e-5);
    }

    #[test]
    fn band_two_is_conjugate_swap_of_band_one() {
        let (a1, a2) = mixer_constants(0.13, 0.3, 1);
        let (b1, b2) = mixer_constants(0.13, 0.3, 2);
        assert!((b1 - a2.conj()).norm() < 1e-15);
        assert!((b2 - a1.conj()).norm() < 1e-15);
    }

    #[test]
    fn ideal_carriers_are_pure_exponentials() {
        let m1 = QuadMixerModel::ideal(1);
        let m2 = QuadMixerModel::ideal(2);
        for t in -20..20 {
            assert!((m1.carrier(PI / 4.0, t) - lo_phasor(PI / 4.0, t)).norm() < 1e-15);
            assert!((m2.carrier(PI / 4.0, t) - lo_phasor(-PI / 4.0, t)).norm() < 1e-15);
        }
    }

    #[test]
    fn gain_imbalance_image_ratio() {
        let m = QuadMixerModel::new(1, 0.25, 0.0);
        let dc = SampledSignal::new(vec![Complex64::new(1.0, 0.0); 800], 1.0).unwrap();
        let z = apply_quadrature_mixer(&dc, &m, PI / 4.0);
        // project onto the two lines
        let proj = |sign: f64| -> f64 {
            z.samples()
                .iter()
                .enumerate()
                .map(|(n, &v)| v * lo_phasor(-sign * PI / 4.0, n as i64))
                .sum::<Complex64>()
                .norm_sqr()
        };
        assert!((proj(1.0) / proj(-1.0) - 16.0).abs() < 1e-9);
    }

    #[test]
    fn zero_input_gives_zero() {
        let m = QuadMixerModel::new(2, 0.2, 0.1);
        let z = apply_quadrature_mixer(&SampledSignal::zeros(10, 1.0).unwrap(), &m, 0.7);
        assert!(z.samples().iter().all(|v| v.norm() == 0.0));
    }
}
