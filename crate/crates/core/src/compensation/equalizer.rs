use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::backprop::backprop_error;
use crate::error::{Error, Result};
use crate::mimo::MimoFir;
use crate::signal::{MultiStream, SampledSignal};
use crate::splitter::remodulate_streams;

/// Default equalizer length.
pub const IE_TAPS: usize = 21;

/// 4x4 real MIMO pre-equalizer feeding the DACs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpairmentEqualizer {
    pub h: MimoFir,
    /// Normalized step size.
    pub beta: f64,
    pub update_decimation: usize,
}

/// Equalizer at the no-impairment solution: a centred unit tap on every
/// diagonal entry, zero elsewhere. The band-split lowpass is applied before
/// the equalizer, so the identity already reproduces it.
pub fn ie_init(taps: usize) -> ImpairmentEqualizer {
    assert!(taps % 2 == 1, "equalizer length must be odd");
    ImpairmentEqualizer {
        h: MimoFir::identity(4, taps, (taps / 2) as i64),
        beta: 0.5,
        update_decimation: 16,
    }
}

pub fn ie_apply(ie: &ImpairmentEqualizer, r: &MultiStream) -> Result<MultiStream> {
    ie.h.apply(r)
}

/// `h[u][v][i] -= step * e_tilde[u] * r[v][idx + d - i]`, then checks every
/// tap is finite. `update` is only used in the divergence report.
pub fn ie_lms_step(ie: &mut ImpairmentEqualizer, r: &[Vec<f64>], idx: usize, e_tilde: &[f64], step: f64, update: usize) -> Result<()> {
    ie.h.lms_update(e_tilde, r, idx, -step);
    if let Some((row, col)) = ie.h.first_non_finite() {
        return Err(Error::Diverged { update, row, col });
    }
    Ok(())
}

/// `sum_n |remodulate(F H r)[n] - x[n]|^2` over the whole support.
pub fn ie_loss(h: &MimoFir, f: &MimoFir, r: &MultiStream, x: &SampledSignal<Complex64>, omega0: f64) -> Result<f64> {
    let xh = remodulate_streams(&f.apply(&h.apply(r)?)?, omega0)?;
    let lo = xh.origin().min(x.origin());
    let hi = xh.end().max(x.end());
    Ok((lo..hi).map(|t| (xh.at(t) - x.at(t)).norm_sqr()).sum())
}

/// Exact gradient of [`ie_loss`] with respect to every tap of `h`, by
/// backpropagating the error through `F` and the remodulator.
pub fn ie_gradient(h: &MimoFir, f: &MimoFir, r: &MultiStream, x: &SampledSignal<Complex64>, omega0: f64) -> Result<MimoFir> {
    let xh = remodulate_streams(&f.apply(&h.apply(r)?)?, omega0)?;
    let lo = xh.origin().min(x.origin());
    let hi = xh.end().max(x.end());
    let e = SampledSignal::with_origin((lo..hi).map(|t| xh.at(t) - x.at(t)).collect(), x.rate_hz(), lo)?;
    let et = backprop_error(&e, f, omega0)?;
    let mut g = MimoFir::zeros(h.n_out(), h.n_in(), h.len(), h.delay());
    for u in 0..h.n_out() {
        for v in 0..h.n_in() {
            for i in 0..h.len() {
                // s_u[k] = sum h[u][v][i] r_v[k + d - i]
                let mut acc = 0.0;
                for k in et.origin()..et.end() {
                    acc += et.at(u, k) * r.at(v, k + h.delay() - i as i64);
                }
                g.entry_mut(u, v)[i] = 2.0 * acc;
            }
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn init_is_centred_identity() {
        let ie = ie_init(IE_TAPS);
        assert_eq!(ie.h.delay(), 10);
        for u in 0..4 {
            for v in 0..4 {
                let e = ie.h.entry(u, v);
                if u == v {
                    assert_eq!(e[10], 1.0);
                    assert_eq!(e.iter().filter(|&&t| t != 0.0).count(), 1);
                } else {
                    assert!(e.iter().all(|&t| t == 0.0));
                }
            }
        }
    }

    #[test]
    fn zero_error_leaves_taps() {
        let mut ie = ie_init(5);
        let before = ie.h.clone();
        let r = vec![vec![1.0; 20]; 4];
        ie_lms_step(&mut ie, &r, 10, &[0.0; 4], 0.1, 0).unwrap();
        assert_eq!(ie.h, before);
    }

    #[test]
    fn scalar_case_is_textbook_lms() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut ie = ImpairmentEqualizer {
            h: MimoFir::zeros(1, 1, 1, 0),
            beta: 0.1,
            update_decimation: 1,
        };
        let mut w = 0.0;
        let r: Vec<f64> = (0..50).map(|_| rng.random_range(-1.0..1.0)).collect();
        let rr = vec![r.clone()];
        for n in 0..50 {
            let d = 0.7 * r[n];
            let y = w * r[n];
            let e = y - d;
            w -= 0.1 * e * r[n];
            let yh = ie.h.entry(0, 0)[0] * r[n];
            ie_lms_step(&mut ie, &rr, n, &[yh - d], 0.1, n).unwrap();
            assert_eq!(ie.h.entry(0, 0)[0], w);
        }
    }

    #[test]
    fn divergence_is_reported() {
        let mut ie = ie_init(3);
        let r = vec![vec![1.0; 10]; 4];
        let err = ie_lms_step(&mut ie, &r, 5, &[f64::INFINITY, 0.0, 0.0, 0.0], 1.0, 7).unwrap_err();
        assert!(matches!(err, Error::Diverged { update: 7, row: 0, .. }));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let w = std::f64::consts::PI / 4.0;
        let rand_fir = |n: usize, d: i64, rng: &mut ChaCha8Rng| {
            let mut f = MimoFir::zeros(4, 4, n, d);
            for u in 0..4 {
                for v in 0..4 {
                    for t in f.entry_mut(u, v) {
                        *t = rng.random_range(-1.0..1.0);
                    }
                }
            }
            f
        };
        let h = rand_fir(3, 1, &mut rng);
        let f = rand_fir(3, 1, &mut rng);
        let r = MultiStream::new((0..4).map(|_| (0..24).map(|_| rng.random_range(-1.0..1.0)).collect()).collect(), 1.0, 0).unwrap();
        let x = SampledSignal::new(
            (0..24).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect(),
            1.0,
        )
        .unwrap();
        let g = ie_gradient(&h, &f, &r, &x, w).unwrap();
        let eps = 1e-5;
        for u in 0..4 {
            for v in 0..4 {
                for i in 0..3 {
                    let mut hp = h.clone();
                    hp.entry_mut(u, v)[i] += eps;
                    let mut hm = h.clone();
                    hm.entry_mut(u, v)[i] -= eps;
                    let fd = (ie_loss(&hp, &f, &r, &x, w).unwrap() - ie_loss(&hm, &f, &r, &x, w).unwrap()) / (2.0 * eps);
                    let a = g.entry(u, v)[i];
                    assert!((a - fd).abs() <= 1e-6 * a.abs().max(1.0), "({u},{v},{i}) {a} {fd}");
                }
            }
        }
    }
}
