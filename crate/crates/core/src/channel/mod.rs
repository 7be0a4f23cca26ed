//! Analog impairments of the two-band transmitter: the physical chain and
//! its equivalent 4x4 MIMO model.

mod equivalent;
mod mixer;
mod physical;
mod spec;

pub use equivalent::{build_equivalent_mimo, demodulate_sample, equivalence_nmse_db, F_LEAD, F_TAPS, TRUNCATION_LIMIT_DB};
pub use mixer::{apply_quadrature_mixer, mixer_constants, QuadMixerModel};
pub use physical::{
    apply_dac_path, apply_mixer_mzm_path, mzm_path_pair, run_physical_channel, ChannelStream, CHANNEL_LATENCY,
    STAGE_LATENCY,
};
pub use spec::{ImpairmentChannelSpec, ImpairmentRanges, PathLabel, PathResponse, SKEW_TAPS};
