use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::SampledSignal;

/// AWGN source calibrated to a per-symbol SNR after matched filtering.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseLoader {
    pub esn0_db: f64,
    pub seed: u64,
}

impl NoiseLoader {
    pub fn new(esn0_db: f64, seed: u64) -> Self {
        Self { esn0_db, seed }
    }

    /// Complex noise variance per sample for a signal of mean power
    /// `power` at `sps` samples per symbol. With a unit-energy matched filter
    /// the symbol energy is `power * sps` and the noise density equals the
    /// per-sample variance.
    pub fn variance(&self, power: f64, sps: usize) -> f64 {
        power * sps as f64 / 10f64.powf(self.esn0_db / 10.0)
    }
}

/// Unit-variance circular Gaussian samples; the same seed always yields the
/// same sequence, so sweeps over Es/N0 share one noise realization.
pub fn unit_noise(seed: u64, n: usize) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    (0..n)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re * s, im * s)
        })
        .collect()
}

/// Adds white circular Gaussian noise so that the Es/N0 seen after the
/// matched filter equals `loader.esn0_db`. Power is measured over the whole
/// signal.
pub fn add_noise(x: &SampledSignal<Complex64>, loader: &NoiseLoader, sps: usize) -> Result<SampledSignal<Complex64>> {
    if loader.esn0_db == f64::INFINITY {
        return Ok(x.clone());
    }
    let p = x.mean_power();
    if !(p > 0.0) {
        return Err(Error::ZeroPower);
    }
    let sigma = loader.variance(p, sps).sqrt();
    let w = unit_noise(loader.seed, x.len());
    let y = x.samples().iter().zip(&w).map(|(&v, &n)| v + n * sigma).collect();
    SampledSignal::with_origin(y, x.rate_hz(), x.origin())
}
