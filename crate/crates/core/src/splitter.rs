//! Wideband 16-QAM generation and the two-band split/recombine pair.
//!
//! Band 1 is the positive half of the spectrum demodulated by `exp(-j W0 n)`,
//! band 2 the negative half demodulated by `exp(+j W0 n)`. Each band filter is
//! a quarter-rate half-band prototype shifted by `±W0`. Because the prototype
//! is half-band, the two shifted copies sum to exactly one at every frequency
//! and [`remodulate`] undoes [`split_bands`] up to rounding.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dsp::{design_halfband, design_rrc, fir_filter, lo_phasor, FirTaps};
use crate::error::{invalid, Error, Result};
use crate::signal::{MultiStream, SampledSignal};

/// Fixed system constants of the transmitter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TxParams {
    pub symbol_rate_hz: f64,
    pub sps: usize,
    pub rolloff: f64,
    pub rrc_span_symbols: usize,
    pub split_taps: usize,
    pub split_stopband_db: f64,
}

impl Default for TxParams {
    fn default() -> Self {
        Self {
            symbol_rate_hz: 128e9,
            sps: 2,
            rolloff: 0.1,
            rrc_span_symbols: 32,
            split_taps: 63,
            split_stopband_db: 50.0,
        }
    }
}

impl TxParams {
    /// Full DSP rate `1/Ts`.
    pub fn rate_hz(&self) -> f64 {
        self.symbol_rate_hz * self.sps as f64
    }

    /// Band center `W0 = 2 pi (fB / 4) Ts` in rad/sample.
    pub fn omega0(&self) -> f64 {
        2.0 * PI * (self.symbol_rate_hz / 4.0) / self.rate_hz()
    }

    pub fn rrc(&self) -> Result<FirTaps<f64>> {
        design_rrc(self.rolloff, self.rrc_span_symbols, self.sps)
    }

    pub fn split_config(&self) -> Result<BandSplitConfig> {
        BandSplitConfig::new(self.omega0(), design_halfband(self.split_taps, self.split_stopband_db)?, 1)
    }
}

/// Gray-labelled square 16-QAM with unit average energy.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstellationMap {
    points: Vec<Complex64>,
    scale: f64,
}

/// Gray-coded 4-PAM levels indexed by the two axis bits `(b0 << 1) | b1`.
const PAM4_GRAY: [f64; 4] = [-3.0, -1.0, 3.0, 1.0];

impl ConstellationMap {
    pub fn qam16() -> Self {
        let scale = 1.0 / 10f64.sqrt();
        let points = (0..16)
            .map(|idx| {
                let i = PAM4_GRAY[(idx >> 2) & 3];
                let q = PAM4_GRAY[idx & 3];
                Complex64::new(i, q) * scale
            })
            .collect();
        Self { points, scale }
    }

    pub fn bits_per_symbol(&self) -> usize {
        4
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn point(&self, index: usize) -> Complex64 {
        self.points[index]
    }

    pub fn average_energy(&self) -> f64 {
        self.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / self.points.len() as f64
    }

    /// Bits of a symbol index, most significant first.
    pub fn bits_of(index: usize) -> [u8; 4] {
        [
            ((index >> 3) & 1) as u8,
            ((index >> 2) & 1) as u8,
            ((index >> 1) & 1) as u8,
            (index & 1) as u8,
        ]
    }

    /// Minimum-distance decision, returned as a symbol index.
    pub fn decide(&self, y: Complex64) -> usize {
        let axis = |v: f64| -> usize {
            let u = v / self.scale;
            let level = if u < -2.0 {
                -3.0
            } else if u < 0.0 {
                -1.0
            } else if u < 2.0 {
                1.0
            } else {
                3.0
            };
            PAM4_GRAY.iter().position(|&l| l == level).expect("level in table")
        };
        (axis(y.re) << 2) | axis(y.im)
    }
}

/// Bits and symbols of one transmitted frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub indices: Vec<usize>,
    pub bits: Vec<u8>,
    pub symbols: Vec<Complex64>,
}

/// Uniform random symbols, deterministic in `seed`.
pub fn generate_frame(seed: u64, n_symbols: usize, map: &ConstellationMap) -> Result<Frame> {
    if n_symbols == 0 {
        return Err(invalid("n_symbols", "must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let indices: Vec<usize> = (0..n_symbols).map(|_| rng.random_range(0..16)).collect();
    let bits = indices.iter().flat_map(|&i| ConstellationMap::bits_of(i)).collect();
    let symbols = indices.iter().map(|&i| map.point(i)).collect();
    Ok(Frame {
        indices,
        bits,
        symbols,
    })
}

/// Upsamples by `sps` and filters with `rrc`. Symbol `k` peaks at time `k * sps`.
pub fn pulse_shape(symbols: &[Complex64], rrc: &FirTaps<f64>, sps: usize, rate_hz: f64) -> Result<SampledSignal<Complex64>> {
    if symbols.is_empty() {
        return Err(Error::EmptyInput("symbols"));
    }
    if sps == 0 {
        return Err(invalid("sps", "must be positive"));
    }
    let mut up = vec![Complex64::new(0.0, 0.0); (symbols.len() - 1) * sps + 1];
    for (k, &s) in symbols.iter().enumerate() {
        up[k * sps] = s;
    }
    let up = SampledSignal::new(up, rate_hz)?;
    fir_filter(&up, rrc)
}

/// Band-split parameters: center `omega0`, half-band prototype, and the
/// DAC decimation factor.
#[derive(Debug, Clone, PartialEq)]
pub struct BandSplitConfig {
    omega0: f64,
    prototype: FirTaps<f64>,
    alpha: usize,
    band1: FirTaps<Complex64>,
    band2: FirTaps<Complex64>,
}

impl BandSplitConfig {
    pub fn new(omega0: f64, prototype: FirTaps<f64>, alpha: usize) -> Result<Self> {
        if alpha == 0 {
            return Err(invalid("alpha", "must be at least 1"));
        }
        let d = prototype.delay();
        let shift = |sign: f64| -> Result<FirTaps<Complex64>> {
            let taps = prototype
                .coeffs()
                .iter()
                .enumerate()
                .map(|(k, &g)| g * lo_phasor(sign * omega0, k as i64 - d))
                .collect();
            FirTaps::new(taps, d)
        };
        Ok(Self {
            omega0,
            band1: shift(1.0)?,
            band2: shift(-1.0)?,
            prototype,
            alpha,
        })
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    pub fn alpha(&self) -> usize {
        self.alpha
    }

    /// Real lowpass prototype `G`.
    pub fn lpf(&self) -> &FirTaps<f64> {
        &self.prototype
    }

    /// Complex baseband filter applied to band 1 (prototype shifted by +W0).
    pub fn band1_filter(&self) -> &FirTaps<Complex64> {
        &self.band1
    }

    pub fn band2_filter(&self) -> &FirTaps<Complex64> {
        &self.band2
    }
}

/// Splits full-rate `x` into `[Re r1, Im r1, Re r2, Im r2]` on the same time axis.
pub fn split_bands(x: &SampledSignal<Complex64>, cfg: &BandSplitConfig) -> Result<MultiStream> {
    let w = cfg.omega0();
    let d1 = crate::dsp::nco_mix(x, w, -1);
    let d2 = crate::dsp::nco_mix(x, w, 1);
    let r1: SampledSignal<Complex64> = fir_filter(&d1, cfg.band1_filter())?;
    let r2: SampledSignal<Complex64> = fir_filter(&d2, cfg.band2_filter())?;
    MultiStream::from_bands(&r1, &r2)
}

/// `x̂[n] = y1[n] exp(+j W0 n) + y2[n] exp(-j W0 n)`.
pub fn remodulate(y1: &SampledSignal<Complex64>, y2: &SampledSignal<Complex64>, omega0: f64) -> Result<SampledSignal<Complex64>> {
    if y1.origin() != y2.origin() || y1.len() != y2.len() {
        return Err(Error::Misaligned(format!(
            "band 1 spans [{}, {}), band 2 spans [{}, {})",
            y1.origin(),
            y1.end(),
            y2.origin(),
            y2.end()
        )));
    }
    if (y1.rate_hz() - y2.rate_hz()).abs() > 1e-9 * y1.rate_hz() {
        return Err(Error::RateMismatch(y1.rate_hz(), y2.rate_hz()));
    }
    let origin = y1.origin();
    let samples = y1
        .samples()
        .iter()
        .zip(y2.samples())
        .enumerate()
        .map(|(k, (&a, &b))| {
            let t = origin + k as i64;
            let c = lo_phasor(omega0, t);
            a * c + b * c.conj()
        })
        .collect();
    SampledSignal::with_origin(samples, y1.rate_hz(), origin)
}

/// [`remodulate`] applied to a four-stream bundle.
pub fn remodulate_streams(y: &MultiStream, omega0: f64) -> Result<SampledSignal<Complex64>> {
    let (y1, y2) = y.to_bands()?;
    remodulate(&y1, &y2, omega0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::aligned_nmse_db;

    fn params() -> TxParams {
        TxParams::default()
    }

    #[test]
    fn omega0_is_quarter_pi() {
        assert!((params().omega0() - PI / 4.0).abs() < 1e-15);
    }

    #[test]
    fn qam16_unit_energy_and_gray() {
        let m = ConstellationMap::qam16();
        assert!((m.average_energy() - 1.0).abs() < 1e-15);
        let d = 2.0 / 10f64.sqrt();
        for a in 0..16 {
            for b in 0..16 {
                let dist = (m.point(a) - m.point(b)).norm();
                if (dist - d).abs() < 1e-9 {
                    let diff = (a ^ b).count_ones();
                    assert_eq!(diff, 1, "neighbors {a} and {b}");
                }
            }
        }
    }

    #[test]
    fn decide_inverts_map() {
        let m = ConstellationMap::qam16();
        for i in 0..16 {
            assert_eq!(m.decide(m.point(i) * 1.2), i);
        }
    }

    #[test]
    fn frame_is_deterministic() {
        let m = ConstellationMap::qam16();
        assert_eq!(generate_frame(9, 100, &m).unwrap(), generate_frame(9, 100, &m).unwrap());
        assert_ne!(generate_frame(9, 100, &m).unwrap(), generate_frame(10, 100, &m).unwrap());
        assert!(generate_frame(9, 0, &m).is_err());
    }

    #[test]
    fn single_symbol_gives_pulse() {
        let p = params();
        let rrc = p.rrc().unwrap();
        let x = pulse_shape(&[Complex64::new(1.0, 0.0)], &rrc, 2, p.rate_hz()).unwrap();
        assert_eq!(x.origin(), -64);
        for (a, &b) in x.samples().iter().zip(rrc.coeffs()) {
            assert!((a.re - b).abs() < 1e-15 && a.im == 0.0);
        }
    }

    #[test]
    fn remodulate_definitions() {
        let w = PI / 4.0;
        let zero = SampledSignal::new(vec![Complex64::new(0.0, 0.0); 8], 1.0).unwrap();
        let one = SampledSignal::new(vec![Complex64::new(1.0, 0.0); 8], 1.0).unwrap();
        assert!(remodulate(&zero, &zero, w).unwrap().samples().iter().all(|z| z.norm() == 0.0));
        let tone = remodulate(&one, &zero, w).unwrap();
        for (k, z) in tone.samples().iter().enumerate() {
            assert!((z - Complex64::from_polar(1.0, w * k as f64)).norm() < 1e-12);
        }
        let y1 = SampledSignal::new((0..8).map(|k| Complex64::new(k as f64, 1.0 - k as f64)).collect(), 1.0).unwrap();
        let real = remodulate(&y1, &y1.conj(), w).unwrap();
        assert!(real.samples().iter().all(|z| z.im.abs() < 1e-12));
    }

    #[test]
    fn remodulate_rejects_misaligned() {
        let a = SampledSignal::new(vec![Complex64::new(1.0, 0.0); 4], 1.0).unwrap();
        let b = a.clone().shifted(1);
        assert!(matches!(remodulate(&a, &b, 0.1), Err(Error::Misaligned(_))));
    }

    #[test]
    fn split_then_remodulate_is_identity() {
        let p = params();
        let m = ConstellationMap::qam16();
        let f = generate_frame(1, 2000, &m).unwrap();
        let x = pulse_shape(&f.symbols, &p.rrc().unwrap(), 2, p.rate_hz()).unwrap();
        let r = split_bands(&x, &p.split_config().unwrap()).unwrap();
        let xh = remodulate_streams(&r, p.omega0()).unwrap();
        let nmse = aligned_nmse_db(&x, &xh);
        assert!(nmse < -35.0, "nmse {nmse}");
    }

    #[test]
    fn real_input_gives_conjugate_bands() {
        let p = params();
        let x: SampledSignal<Complex64> =
            SampledSignal::new((0..300).map(|k| ((k * 7919) % 13) as f64 - 6.0).collect::<Vec<f64>>(), p.rate_hz())
                .unwrap()
                .into();
        let r = split_bands(&x, &p.split_config().unwrap()).unwrap();
        for k in 0..r.len() {
            assert!((r.stream(0)[k] - r.stream(2)[k]).abs() < 1e-12);
            assert!((r.stream(1)[k] + r.stream(3)[k]).abs() < 1e-12);
        }
    }
}
