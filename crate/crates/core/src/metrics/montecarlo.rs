use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ber::esn0_for_ber_16qam;
use super::noise::NoiseLoader;
use super::record::MetricsRecord;
use crate::channel::{ImpairmentChannelSpec, ImpairmentRanges};
use crate::compensation::{run_adaptation, AdaptConfig, AdaptOutcome, TracePoint};
use crate::error::Result;
use crate::link::Link;

const TAG_SPEC: u64 = 1;
const TAG_NOISE: u64 = 2;
const TAG_ADAPT: u64 = 3;

/// Independent stream seed for item `index` of kind `tag` (splitmix64).
pub fn derive_seed(master: u64, tag: u64, index: u64) -> u64 {
    let mut z = master
        .wrapping_add(tag.wrapping_mul(0xD1B5_4A32_D192_ED03))
        .wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonteCarloConfig {
    pub channels: usize,
    /// Unimpaired BER that fixes the operating point.
    pub reference_ber: f64,
    pub ranges: ImpairmentRanges,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        Self {
            channels: 100,
            reference_ber: 2e-4,
            ranges: ImpairmentRanges::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelTrial {
    pub index: usize,
    pub spec: ImpairmentChannelSpec,
    pub uncompensated: MetricsRecord,
    pub compensated: MetricsRecord,
    pub converged: bool,
    /// Set when adaptation failed; `compensated` then repeats the frozen
    /// equalizer.
    pub adapt_error: Option<String>,
    pub trace: Vec<TracePoint>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MonteCarloResult {
    pub esn0_db: f64,
    /// The calibrated system on the nominal channel.
    pub reference: MetricsRecord,
    pub trials: Vec<ChannelTrial>,
}

pub fn channel_id(index: usize) -> String {
    format!("ch{index:04}")
}

/// Draws `cfg.channels` random channels around `nominal` and measures each
/// with the calibrated equalizer frozen and after background adaptation
/// warm-started from it. Both runs of a channel share one noise
/// realization. Trials run on the current rayon pool; the result is in
/// channel order whatever the schedule.
pub fn montecarlo(
    link: &Link,
    nominal: &ImpairmentChannelSpec,
    calibration: &AdaptOutcome,
    adapt: &AdaptConfig,
    cfg: &MonteCarloConfig,
    seed: u64,
) -> Result<MonteCarloResult> {
    let esn0_db = esn0_for_ber_16qam(cfg.reference_ber)?;
    let h0 = &calibration.ie.h;
    let xr = link.transmit(h0, nominal)?;
    let mut reference = MetricsRecord::new("nominal", false, esn0_db, link.ber(&xr, &NoiseLoader::new(esn0_db, derive_seed(seed, TAG_NOISE, u64::MAX)))?);
    reference.floor_db = Some(link.nmse_db(&xr));

    let trials = (0..cfg.channels)
        .into_par_iter()
        .map(|i| -> Result<ChannelTrial> {
            let spec = ImpairmentChannelSpec::random(nominal, &cfg.ranges, derive_seed(seed, TAG_SPEC, i as u64));
            let noise = NoiseLoader::new(esn0_db, derive_seed(seed, TAG_NOISE, i as u64));
            let id = channel_id(i);
            let xu = link.transmit(h0, &spec)?;
            let mut unc = MetricsRecord::new(&id, false, esn0_db, link.ber(&xu, &noise)?);
            unc.floor_db = Some(link.nmse_db(&xu));
            let adapted = run_adaptation(adapt, link.tx(), &spec, calibration.ie.clone(), calibration.est.clone(), derive_seed(seed, TAG_ADAPT, i as u64));
            let (h, converged, adapt_error, trace) = match adapted {
                Ok(out) => (out.ie.h, out.converged, None, out.trace),
                Err(e) => (h0.clone(), false, Some(e.to_string()), Vec::new()),
            };
            let xc = link.transmit(&h, &spec)?;
            let mut comp = MetricsRecord::new(&id, true, esn0_db, link.ber(&xc, &noise)?);
            comp.floor_db = Some(link.nmse_db(&xc));
            Ok(ChannelTrial {
                index: i,
                spec,
                uncompensated: unc,
                compensated: comp,
                converged,
                adapt_error,
                trace,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MonteCarloResult {
        esn0_db,
        reference,
        trials,
    })
}
