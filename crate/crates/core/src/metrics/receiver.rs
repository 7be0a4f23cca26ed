use num_complex::Complex64;

use super::ber::BerCount;
use crate::dsp::FirTaps;
use crate::error::{invalid, Error, Result};
use crate::signal::SampledSignal;
use crate::splitter::ConstellationMap;

/// Fewest pilot symbols accepted for the gain fit.
pub const MIN_PILOTS: usize = 256;

/// Known back-to-back alignment: symbol `k` sits at time `k * sps`, a pilot
/// block starts at symbol `first_pilot`, and `n_data` payload symbols follow
/// it.
#[derive(Debug, Clone, PartialEq)]
pub struct RxReference {
    pub first_pilot: i64,
    pub pilots: Vec<Complex64>,
    pub n_data: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RxOutput {
    /// Decided constellation indices of the payload.
    pub indices: Vec<usize>,
    /// Fitted complex gain.
    pub gain: Complex64,
}

impl RxOutput {
    pub fn bits(&self) -> Vec<u8> {
        self.indices.iter().flat_map(|&i| ConstellationMap::bits_of(i)).collect()
    }
}

/// Matched filter output at time `t`.
fn matched_at(y: &SampledSignal<Complex64>, h: &FirTaps<f64>, t: i64) -> Complex64 {
    let base = t + h.delay();
    let mut acc = Complex64::new(0.0, 0.0);
    for (m, &c) in h.coeffs().iter().enumerate() {
        acc += y.at(base - m as i64) * c;
    }
    acc
}

/// Ideal coherent receiver: RRC matched filter sampled at the known symbol
/// instants, one complex gain fitted by least squares on the pilots, then
/// minimum-distance 16-QAM decisions.
pub fn coherent_receive(
    y: &SampledSignal<Complex64>,
    rrc: &FirTaps<f64>,
    sps: usize,
    reference: &RxReference,
    map: &ConstellationMap,
) -> Result<RxOutput> {
    if reference.pilots.len() < MIN_PILOTS {
        return Err(Error::PilotTooShort(reference.pilots.len()));
    }
    if sps == 0 {
        return Err(invalid("sps", "must be positive"));
    }
    let sym_time = |k: i64| k * sps as i64;
    let mut num = Complex64::new(0.0, 0.0);
    let mut den = 0.0;
    for (j, &p) in reference.pilots.iter().enumerate() {
        let z = matched_at(y, rrc, sym_time(reference.first_pilot + j as i64));
        num += z * p.conj();
        den += p.norm_sqr();
    }
    let gain = num / den;
    if !(gain.norm() > 0.0 && gain.is_finite()) {
        return Err(Error::ZeroPower);
    }
    let inv = gain.inv();
    let first = reference.first_pilot + reference.pilots.len() as i64;
    let indices = (0..reference.n_data as i64)
        .map(|k| map.decide(matched_at(y, rrc, sym_time(first + k)) * inv))
        .collect();
    Ok(RxOutput { indices, gain })
}

/// Bit errors between decided and transmitted Gray labels.
pub fn count_bit_errors(decided: &[usize], sent: &[usize]) -> BerCount {
    let errors = decided.iter().zip(sent).map(|(a, b)| u64::from((a ^ b).count_ones())).sum();
    BerCount {
        bits: 4 * decided.len().min(sent.len()) as u64,
        errors,
    }
}
