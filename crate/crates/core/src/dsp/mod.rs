//! Filtering, resampling, mixing and quantization primitives.

pub mod fir;
pub mod iir;
pub mod quantize;
pub mod rate;

pub use fir::{
    convolve, design_halfband, design_rrc, fir_filter, fractional_delay, kaiser_beta, FirTaps,
};
pub use iir::{design_butterworth_lp, Biquad, IirBiquadChain, IirState};
pub use quantize::{quantize_uniform, Quantized, UniformQuantizer};
pub use rate::{downsample, hold_upsample, lo_phasor, nco_mix};
