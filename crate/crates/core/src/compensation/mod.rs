//! Impairment equalizer, channel estimator and the backpropagation that
//! links them.

mod adapt;
mod backprop;
mod equalizer;
mod estimate;

pub use adapt::{calibrate, run_adaptation, train_estimator_white, training_frame, AdaptConfig, AdaptOutcome, EstimatorTracePoint, TracePoint};
pub use backprop::{backprop_error, band_gradient, demodulate_error, ErrorTap};
pub use equalizer::{ie_apply, ie_gradient, ie_init, ie_lms_step, ie_loss, ImpairmentEqualizer, IE_TAPS};
pub use estimate::{ce_lms_step, feedback_sample, rotating_instant, ChannelEstimate};
