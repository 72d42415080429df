//! Orchestration: configuration, data I/O, end-to-end experiments and reports.

pub mod config;
pub mod data;
pub mod experiment;
pub mod report;

pub use config::{DataSource, ExperimentConfig};
pub use data::{gen_synthetic, ingest_csv, parse_csv, write_csv};
pub use experiment::{
    compress_layers, denoise_with, energy_profiles, evaluate, load_clean_signals, prepare_dataset,
    run_denoise, run_sweep, run_training, train_to_disk, Denoised, Evaluation, LayerEnergy,
    ModelMeta, PreparedData, SweepCell, SweepPlan, TestSignal, TrainedModel,
};
pub use report::emit_report;
