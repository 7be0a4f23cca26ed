use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dsp::lo_phasor;
use crate::error::{Error, Result};
use crate::mimo::MimoFir;
use crate::signal::{MultiStream, SampledSignal};

/// Adjoint of remodulation at one sample: the four real band components
/// of `e` demodulated with the conjugate of each band's carrier,
/// `[Re, Im](e e^{-jwn})` and `[Re, Im](e e^{+jwn})`.
#[inline]
pub fn band_gradient(e: Complex64, omega0: f64, t: i64) -> [f64; 4] {
    let c = lo_phasor(omega0, t);
    let a = e * c.conj();
    let b = e * c;
    [a.re, a.im, b.re, b.im]
}

/// `e[n]` demodulated into the four real band-error streams.
pub fn demodulate_error(e: &SampledSignal<Complex64>, omega0: f64) -> MultiStream {
    let mut g: Vec<Vec<f64>> = (0..4).map(|_| Vec::with_capacity(e.len())).collect();
    for (k, &v) in e.samples().iter().enumerate() {
        let b = band_gradient(v, omega0, e.origin() + k as i64);
        for (gi, bi) in g.iter_mut().zip(b) {
            gi.push(bi);
        }
    }
    MultiStream::new(g, e.rate_hz(), e.origin()).expect("valid rate")
}

/// Error at the modulator input and what the equalizer sees of it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorTap {
    /// `e[n] = x_hat[n] - x[n]`.
    pub e: Vec<Complex64>,
    /// Demodulated band errors `e_1`, `e_2`.
    pub e1: Vec<Complex64>,
    pub e2: Vec<Complex64>,
    /// Error backpropagated to the equalizer output, four real streams.
    pub backprop: Vec<Vec<f64>>,
    pub origin: i64,
    pub backprop_origin: i64,
}

impl ErrorTap {
    pub fn new(x_hat: &SampledSignal<Complex64>, x: &SampledSignal<Complex64>, f_hat: &MimoFir, omega0: f64) -> Result<Self> {
        let lo = x_hat.origin().min(x.origin());
        let hi = x_hat.end().max(x.end());
        let e: Vec<Complex64> = (lo..hi).map(|t| x_hat.at(t) - x.at(t)).collect();
        let es = SampledSignal::with_origin(e, x.rate_hz(), lo)?;
        let g = demodulate_error(&es, omega0);
        let e1 = (0..g.len()).map(|k| Complex64::new(g.stream(0)[k], g.stream(1)[k])).collect();
        let e2 = (0..g.len()).map(|k| Complex64::new(g.stream(2)[k], g.stream(3)[k])).collect();
        let bp = backprop_error(&es, f_hat, omega0)?;
        Ok(Self {
            e: es.samples().to_vec(),
            e1,
            e2,
            backprop_origin: bp.origin(),
            backprop: bp.streams().to_vec(),
            origin: lo,
        })
    }

    pub fn power(&self) -> f64 {
        self.e.iter().map(|v| v.norm_sqr()).sum::<f64>() / self.e.len().max(1) as f64
    }
}

/// Gradient of `sum |e|^2 / 2` with respect to the equalizer output `s`,
/// given `e = remodulate(F_hat s) - x`.
///
/// Demodulates with the conjugate carriers, then correlates with the
/// transposed `F_hat`. The result covers every `s` sample that reaches `e`.
pub fn backprop_error(e: &SampledSignal<Complex64>, f_hat: &MimoFir, omega0: f64) -> Result<MultiStream> {
    if f_hat.n_out() != 4 || f_hat.n_in() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: f_hat.n_out().max(f_hat.n_in()),
        });
    }
    if e.len() < f_hat.len() {
        return Err(Error::InsufficientHistory {
            needed: f_hat.len(),
            available: e.len(),
        });
    }
    f_hat.apply_adjoint(&demodulate_error(e, omega0))
}
