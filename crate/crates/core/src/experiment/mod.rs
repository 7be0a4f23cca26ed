//! Named experiments, their configuration, and plot-ready output.

mod config;
mod plotdata;
mod run;

pub use config::{ConvergenceConfig, EquivalenceConfig, ExperimentConfig, ExperimentKind, MonteCarloChecks, SweepConfig};
pub use plotdata::{ber_histogram, emit_plotdata, histogram_bin, histogram_edges, HistogramRow, PenaltyRow, HIST_BINS_PER_DECADE, HIST_MAX, HIST_MIN};
pub use run::{impaired_spec, montecarlo_summary, run_experiment, run_experiment_with_workers, workers_from_env, Check, RunReport, SweepRow, TraceRow, WORKERS_ENV};
