//! Noise loading, the ideal coherent receiver, BER counting, required-SNR
//! search and Monte Carlo aggregation.

mod ber;
mod montecarlo;
mod noise;
mod receiver;
mod record;

pub use ber::{ber_16qam_gray, esn0_for_ber_16qam, penalty_db, q_function, required_snr, BerCount, SnrResult, SnrSearch};
pub use montecarlo::{channel_id, derive_seed, montecarlo, ChannelTrial, MonteCarloConfig, MonteCarloResult};
pub use noise::{add_noise, unit_noise, NoiseLoader};
pub use receiver::{coherent_receive, count_bit_errors, RxOutput, RxReference, MIN_PILOTS};
pub use record::{read_csv, read_csv_comments, write_csv, write_jsonl, MetricsRecord};
