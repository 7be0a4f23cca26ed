//! Reduction of the physical channel to a 4x4 real MIMO filter acting on the
//! IE output, followed by ideal remodulation.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::physical::{c_labels, run_physical_channel};
use super::spec::{ImpairmentChannelSpec, PathLabel};
use crate::dsp::lo_phasor;
use crate::error::{Error, Result};
use crate::mimo::MimoFir;
use crate::signal::{MultiStream, SampledSignal};
use crate::splitter::remodulate_streams;

/// Default taps of the equivalent channel and of the channel estimate.
pub const F_TAPS: usize = 41;
/// Default lead (declared delay) of the equivalent channel.
pub const F_LEAD: i64 = 4;
/// Largest tolerated impulse energy outside the window, in dB.
pub const TRUNCATION_LIMIT_DB: f64 = -60.0;

fn conv(a: &SampledSignal<Complex64>, b: &SampledSignal<Complex64>) -> SampledSignal<Complex64> {
    let y = crate::dsp::convolve::<Complex64, Complex64, Complex64>(a.samples(), b.samples());
    SampledSignal::with_origin(y, a.rate_hz(), a.origin() + b.origin()).expect("valid rate")
}

fn modulate(x: &SampledSignal<Complex64>, omega: f64) -> SampledSignal<Complex64> {
    crate::dsp::nco_mix(x, omega, 1)
}

/// 4x4 real MIMO `F` with `y = F s` and `x_hat = remodulate(y)`.
///
/// Exact for `alpha = 1` without quantization. For `alpha > 1` the hold is
/// replaced by its phase-averaged (LTI) part, a length-`alpha` moving
/// average; quantization is ignored.
pub fn build_equivalent_mimo(spec: &ImpairmentChannelSpec, omega0: f64, length: usize, lead: i64) -> Result<MimoFir> {
    spec.validate()?;
    let rate = spec.rate_hz;
    let ir_len = length + 1024;
    let to_c = |x: SampledSignal<f64>| -> SampledSignal<Complex64> { x.into() };
    let hold = SampledSignal::new(
        vec![Complex64::new(1.0 / spec.alpha as f64, 0.0); spec.alpha],
        rate,
    )?;

    let mut f = MimoFir::zeros(4, 4, length, lead);
    for v in 0..4 {
        let label = PathLabel::ALL[v];
        let band = label.band();
        let (k1, k2) = spec.mixer(band).constants();
        let b = to_c(spec.path(label)?.impulse_response(ir_len, rate));
        let mut sh = conv(&b, &hold);
        if label.is_quadrature() {
            sh = sh.map(|z| z * Complex64::i());
        }
        let (ci, cq) = c_labels(band);
        let ci = spec.path(ci)?.impulse_response(ir_len, rate);
        let cq = spec.path(cq)?.impulse_response(ir_len, rate);
        let u = to_c(ci.checked_add(&cq)?.scale(0.5));
        let ub = to_c(ci.checked_sub(&cq)?.scale(0.5));
        let (u_dn, u_up) = (modulate(&u, -omega0), modulate(&u, omega0));
        let (ub_dn, ub_up) = (modulate(&ub, -omega0), modulate(&ub, omega0));
        let sc = sh.conj();
        let y1 = conv(&sh.map(|z| z * k1), &u_dn).checked_add(&conv(&sc.map(|z| z * k2.conj()), &ub_dn))?;
        let y2 = conv(&sh.map(|z| z * k2), &u_up).checked_add(&conv(&sc.map(|z| z * k1.conj()), &ub_up))?;

        let total = y1.energy() + y2.energy();
        let mut kept = 0.0;
        for m in 0..length {
            let t = m as i64 - lead;
            let (a, c) = (y1.at(t), y2.at(t));
            let col = [a.re, a.im, c.re, c.im];
            for (u_out, &val) in col.iter().enumerate() {
                f.entry_mut(u_out, v)[m] = val;
                kept += val * val;
            }
        }
        let discarded = ((total - kept) / total).max(0.0);
        let discarded_db = 10.0 * discarded.max(1e-300).log10();
        if discarded_db > TRUNCATION_LIMIT_DB {
            return Err(Error::Truncation {
                length,
                discarded_db,
            });
        }
    }
    Ok(f)
}

/// Drives both models with the same white input and returns the NMSE in dB
/// of the equivalent model against the physical one. Quantization is
/// disabled for the comparison.
pub fn equivalence_nmse_db(spec: &ImpairmentChannelSpec, omega0: f64, n_samples: usize, seed: u64) -> Result<f64> {
    let mut spec = spec.clone();
    spec.dac_bits = None;
    let f = build_equivalent_mimo(&spec, omega0, F_TAPS, F_LEAD)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pad = 2 * F_TAPS;
    let streams = (0..4)
        .map(|_| {
            let mut v: Vec<f64> = (0..n_samples).map(|_| rng.random_range(-0.5..0.5)).collect();
            v.resize(n_samples + pad, 0.0);
            v
        })
        .collect();
    let s = MultiStream::new(streams, spec.rate_hz, 0)?;
    let phys = run_physical_channel(&s, &spec, omega0)?;
    let model = remodulate_streams(&f.apply(&s)?, omega0)?;
    let lo = phys.origin().min(model.origin());
    let hi = phys.end().max(model.end());
    let mut err = 0.0;
    let mut pw = 0.0;
    for t in lo..hi {
        let p = phys.at(t);
        err += (p - model.at(t)).norm_sqr();
        pw += p.norm_sqr();
    }
    Ok(10.0 * (err / pw).log10())
}

/// Ideal demodulated band components of `x` as a check helper:
/// `y_a[n] = x[n] e^{-+ j w n}` without lowpass.
pub fn demodulate_sample(x: Complex64, omega0: f64, t: i64) -> [f64; 4] {
    let e = lo_phasor(omega0, t);
    let a = x * e.conj();
    let b = x * e;
    [a.re, a.im, b.re, b.im]
}
