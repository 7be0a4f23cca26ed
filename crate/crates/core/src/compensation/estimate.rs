use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::backprop::band_gradient;
use crate::dsp::{lo_phasor, UniformQuantizer};
use crate::error::{invalid, Error, Result};
use crate::mimo::MimoFir;
use crate::signal::SampledSignal;

/// LMS estimate of the 4x4 analog channel, fed by a subsampled feedback ADC.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelEstimate {
    pub f: MimoFir,
    /// Normalized step size.
    pub mu: f64,
    /// Feedback subsampling factor.
    pub m: usize,
    /// Sampling phase of the feedback ADC, `0 <= phase < m`.
    pub phase: usize,
}

impl ChannelEstimate {
    pub fn new(f: MimoFir, mu: f64, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(invalid("m", "feedback subsampling must be at least 1"));
        }
        Ok(Self { f, mu, m, phase: 0 })
    }
}

/// Every `m`-th sample of `x_hat` at absolute indices congruent to `phase`,
/// optionally quantized per rail.
pub fn feedback_sample(
    x_hat: &SampledSignal<Complex64>,
    m: usize,
    phase: usize,
    adc: Option<&UniformQuantizer>,
) -> Result<Vec<(i64, Complex64)>> {
    if m == 0 || phase >= m {
        return Err(invalid("phase", format!("need 0 <= phase < m, got phase {phase}, m {m}")));
    }
    let m_i = m as i64;
    Ok((x_hat.origin()..x_hat.end())
        .filter(|t| t.rem_euclid(m_i) == phase as i64)
        .map(|t| {
            let v = x_hat.at(t);
            let v = match adc {
                Some(q) => Complex64::new(q.quantize(v.re).0, q.quantize(v.im).0),
                None => v,
            };
            (t, v)
        })
        .collect())
}

/// Feedback instant number `k` when the sampling phase advances by one
/// every frame of `m` samples: `k m + (k mod m)`. Over `m^2` samples every
/// residue is visited once.
#[inline]
pub fn rotating_instant(k: u64, m: usize) -> u64 {
    let m = m as u64;
    k * m + k % m
}

/// One LMS update from a single feedback sample at buffer position `idx`
/// (absolute time `t`). Returns the squared prediction error.
///
/// The prediction is the remodulated output of `F_hat`; the error is
/// demodulated with the conjugate carriers, which is the exact gradient of
/// `|x_meas - prediction|^2`. The step is normalized by twice the regressor
/// energy, so `mu = 1` cancels the error in one update.
pub fn ce_lms_step(est: &mut ChannelEstimate, s: &[Vec<f64>], idx: usize, t: i64, measured: Complex64, omega0: f64) -> Result<f64> {
    let f = &est.f;
    let n = s.first().map_or(0, Vec::len);
    let newest = idx as i64 + f.delay();
    let oldest = newest - (f.len() as i64 - 1);
    if oldest < 0 || newest >= n as i64 {
        return Err(Error::InsufficientHistory {
            needed: f.len(),
            available: (n as i64 - oldest.max(0)).clamp(0, f.len() as i64) as usize,
        });
    }
    let mut y = [0.0; 4];
    f.output_at(s, idx, &mut y);
    let c = lo_phasor(omega0, t);
    let pred = Complex64::new(y[0], y[1]) * c + Complex64::new(y[2], y[3]) * c.conj();
    let eps = measured - pred;
    let g = band_gradient(eps, omega0, t);
    let energy: f64 = s
        .iter()
        .map(|sv| sv[oldest as usize..=newest as usize].iter().map(|v| v * v).sum::<f64>())
        .sum();
    if energy > 0.0 {
        est.f.lms_update(&g, s, idx, est.mu / (2.0 * energy));
    }
    Ok(eps.norm_sqr())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::splitter::remodulate_streams;
    use crate::signal::MultiStream;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn feedback_full_rate_and_partition() {
        let x = SampledSignal::with_origin((0..300).map(|k| Complex64::new(k as f64, 0.0)).collect(), 1.0, -7).unwrap();
        let all = feedback_sample(&x, 1, 0, None).unwrap();
        assert_eq!(all.len(), 300);
        let mut seen = Vec::new();
        for p in 0..128 {
            let fb = feedback_sample(&x, 128, p, None).unwrap();
            assert!(fb.iter().all(|(t, _)| t.rem_euclid(128) == p as i64));
            seen.extend(fb.into_iter().map(|(t, _)| t));
        }
        seen.sort();
        assert_eq!(seen, (-7..293).collect::<Vec<_>>());
        assert!(feedback_sample(&x, 4, 4, None).is_err());
    }

    #[test]
    fn rotating_instants_visit_every_phase() {
        let m = 16;
        let mut ph: Vec<u64> = (0..m as u64).map(|k| rotating_instant(k, m) % m as u64).collect();
        ph.sort();
        assert_eq!(ph, (0..m as u64).collect::<Vec<_>>());
    }

    #[test]
    fn exact_estimate_is_a_fixed_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut f = MimoFir::zeros(4, 4, 5, 1);
        for u in 0..4 {
            for v in 0..4 {
                for t in f.entry_mut(u, v) {
                    *t = rng.random_range(-1.0..1.0);
                }
            }
        }
        let s = MultiStream::new((0..4).map(|_| (0..64).map(|_| rng.random_range(-1.0..1.0)).collect()).collect(), 1.0, 0).unwrap();
        let w = 0.785;
        let x = remodulate_streams(&f.apply(&s).unwrap(), w).unwrap();
        let mut est = ChannelEstimate::new(f.clone(), 0.5, 1).unwrap();
        for idx in 8..56 {
            let e2 = ce_lms_step(&mut est, s.streams(), idx, idx as i64, x.at(idx as i64), w).unwrap();
            assert!(e2 < 1e-25);
        }
        assert!(est.f.nmse_db(&f) < -280.0);
    }

    #[test]
    fn scalar_degenerate_case_matches_hand_iteration() {
        // 1-tap, DC inputs on stream 0 only, zero carrier: the measured
        // sample is (f00 + j f10 + f20 + j f30) s
        let w = 0.0;
        let truth = [0.8, -0.3, 0.1, 0.4];
        let mut est = ChannelEstimate::new(MimoFir::zeros(4, 4, 1, 0), 0.5, 1).unwrap();
        let mut s = vec![vec![0.0; 20]; 4];
        s[0].fill(2.0);
        let meas = Complex64::new(truth[0] + truth[2], truth[1] + truth[3]) * 2.0;
        let mut hand = [0.0f64; 4];
        for idx in 0..20 {
            let pred = Complex64::new(hand[0] + hand[2], hand[1] + hand[3]) * 2.0;
            let e = meas - pred;
            let mu = 0.5 / (2.0 * 4.0);
            hand[0] += mu * e.re * 2.0;
            hand[1] += mu * e.im * 2.0;
            hand[2] += mu * e.re * 2.0;
            hand[3] += mu * e.im * 2.0;
            ce_lms_step(&mut est, &s, idx, idx as i64, meas, w).unwrap();
            for u in 0..4 {
                assert_eq!(est.f.entry(u, 0)[0], hand[u]);
            }
        }
    }

    #[test]
    fn history_is_checked() {
        let mut est = ChannelEstimate::new(MimoFir::identity(4, 5, 1), 0.5, 1).unwrap();
        let s = vec![vec![0.0; 10]; 4];
        assert!(ce_lms_step(&mut est, &s, 1, 0, Complex64::new(0.0, 0.0), 0.0).is_err());
        assert!(ce_lms_step(&mut est, &s, 9, 0, Complex64::new(0.0, 0.0), 0.0).is_err());
        assert!(ce_lms_step(&mut est, &s, 5, 0, Complex64::new(0.0, 0.0), 0.0).is_ok());
    }
}
