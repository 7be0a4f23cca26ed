//! One back-to-back transmission: a fixed 16-QAM frame through the
//! equalizer and the physical channel, then noise loading and the ideal
//! receiver.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{run_physical_channel, ImpairmentChannelSpec};
use crate::dsp::FirTaps;
use crate::error::{invalid, Result};
use crate::metrics::{add_noise, coherent_receive, count_bit_errors, required_snr, BerCount, NoiseLoader, RxReference, SnrResult, SnrSearch};
use crate::mimo::MimoFir;
use crate::signal::{MultiStream, SampledSignal};
use crate::splitter::{generate_frame, pulse_shape, split_bands, ConstellationMap, TxParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinkConfig {
    /// Counted payload symbols per BER point.
    pub symbols: usize,
    pub pilot_symbols: usize,
    /// Uncounted symbols at each frame edge.
    pub guard_symbols: usize,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self {
            symbols: 200_000,
            pilot_symbols: 512,
            guard_symbols: 64,
        }
    }
}

/// Frame layout: guard, pilots, payload, guard. Symbol `k` peaks at time
/// `k * sps` of the reference signal.
#[derive(Debug, Clone)]
pub struct Link {
    tx: TxParams,
    rrc: FirTaps<f64>,
    map: ConstellationMap,
    x: SampledSignal<Complex64>,
    r: MultiStream,
    reference: RxReference,
    sent: Vec<usize>,
    payload: (i64, i64),
}

impl Link {
    pub fn new(tx: &TxParams, cfg: &LinkConfig, seed: u64) -> Result<Self> {
        if cfg.symbols == 0 {
            return Err(invalid("symbols", "must be positive"));
        }
        let map = ConstellationMap::qam16();
        let n = 2 * cfg.guard_symbols + cfg.pilot_symbols + cfg.symbols;
        let frame = generate_frame(seed, n, &map)?;
        let rrc = tx.rrc()?;
        let x = pulse_shape(&frame.symbols, &rrc, tx.sps, tx.rate_hz())?;
        let r = split_bands(&x, &tx.split_config()?)?;
        let g = cfg.guard_symbols;
        let p = cfg.pilot_symbols;
        let reference = RxReference {
            first_pilot: g as i64,
            pilots: frame.symbols[g..g + p].to_vec(),
            n_data: cfg.symbols,
        };
        let sent = frame.indices[g + p..g + p + cfg.symbols].to_vec();
        let sps = tx.sps as i64;
        let payload = ((g + p) as i64 * sps, (g + p + cfg.symbols) as i64 * sps);
        Ok(Self {
            tx: *tx,
            rrc,
            map,
            x,
            r,
            reference,
            sent,
            payload,
        })
    }

    pub fn tx(&self) -> &TxParams {
        &self.tx
    }

    /// The ideal transmit signal `x[n]`.
    pub fn reference_signal(&self) -> &SampledSignal<Complex64> {
        &self.x
    }

    /// Band-split streams fed to the equalizer.
    pub fn equalizer_input(&self) -> &MultiStream {
        &self.r
    }

    /// `x_hat[n]` at the modulator input for equalizer taps `h`.
    pub fn transmit(&self, h: &MimoFir, spec: &ImpairmentChannelSpec) -> Result<SampledSignal<Complex64>> {
        run_physical_channel(&h.apply(&self.r)?, spec, self.tx.omega0())
    }

    /// Error power of `x_hat` against `x` over the payload, in dB relative to
    /// the signal power.
    pub fn nmse_db(&self, x_hat: &SampledSignal<Complex64>) -> f64 {
        let (a, b) = self.payload;
        let (mut e, mut p) = (0.0, 0.0);
        for t in a..b {
            e += (x_hat.at(t) - self.x.at(t)).norm_sqr();
            p += self.x.at(t).norm_sqr();
        }
        10.0 * (e / p).log10()
    }

    pub fn ber(&self, x_hat: &SampledSignal<Complex64>, noise: &NoiseLoader) -> Result<BerCount> {
        let y = add_noise(x_hat, noise, self.tx.sps)?;
        let out = coherent_receive(&y, &self.rrc, self.tx.sps, &self.reference, &self.map)?;
        Ok(count_bit_errors(&out.indices, &self.sent))
    }

    /// Es/N0 needed to reach the search target, with one noise
    /// realization shared by every evaluated point.
    pub fn required_snr(&self, x_hat: &SampledSignal<Complex64>, search: &SnrSearch, noise_seed: u64) -> Result<SnrResult> {
        required_snr(search, |db| self.ber(x_hat, &NoiseLoader::new(db, noise_seed)))
    }
}
