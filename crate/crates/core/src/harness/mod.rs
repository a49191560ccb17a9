//! Experiment runner: configs, training loops, evaluation and sweeps.

pub mod config;
pub mod metrics;
pub mod run;

pub use config::{DatasetSpec, ExperimentConfig, LayerSpec, OracleSpec, Scalar};
pub use metrics::{accuracy, EpochMetrics, RunMetrics, Stats, SweepReport, SweepRow};
pub use run::{datasets, eval_snapshot, run_eval, run_experiment, run_seed, run_training, sweep, Datasets};
