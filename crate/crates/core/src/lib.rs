//! Two-band frequency-interleaved DAC transmitter simulator with adaptive
//! background compensation of the analog impairments.

pub mod channel;
pub mod compensation;
pub mod dsp;
pub mod error;
pub mod experiment;
pub mod link;
pub mod metrics;
pub mod signal;
pub mod mimo;
pub mod splitter;

pub use error::{Error, Result};
pub use signal::{MultiStream, Sample, SampledSignal};
