//! Protograph EXIT (PEXIT) analysis for joint decoding over the multiple
//! access channel.

mod estimate;
mod evolution;
mod jfunc;

pub use estimate::{
    consistent_info, consistent_mean, estimate_column, estimate_state_info, fit_mixture,
    histogram_mode, sample_mean, sample_state_messages, summarize, Estimator, MixtureFit,
    MIN_SAMPLES,
};
pub use evolution::{
    evolve, evolve_at, pexit_app, pexit_check, pexit_iteration, pexit_threshold,
    pexit_threshold_cached, pexit_variable, state_output_info, Evolution, EvolutionOptions,
    FixedSource, MonteCarloSource, PexitState, StateInfoMode, StateInfoSource, Threshold,
    ThresholdConfig, TrajectoryPoint, TransferCache, TransferTable,
};
pub use jfunc::{j_complement_quadrature, j_func, j_inv, JTable, SIGMA_MAX};
