//! Configuration, experiment runs, CSV traces and plots.

mod config;
mod plot;
mod run;
mod scenarios;
mod trace;

pub use config::{
    value_label, ChannelSection, DataSection, DataSource, ExperimentConfig, ExperimentSection, GeometrySection,
    LinkModel, ModelChoice, OptimizerMode, OptimizerSection, PartitionKind, PathLossSection, PrivacySection,
    SelectionSection, Strategy, SweepSection, SystemSection, TrainSection, ERROR_FREE_LABEL,
};
pub use plot::{load_traces, plot, PlotKind};
pub use run::{simulate, simulate_sweep, sweep_configs, RoundRecord, SeedTraces, SweepPoint};
pub use scenarios::{preset, preset_text, scenario_ids};
pub use trace::{
    format_rounds, format_summary, read_rounds, run, scenario_sweep, seed_file_name, summarize, summary_header,
    Moments, RunOutput, SummaryRow, SweepOutput, ROUND_HEADER, SUMMARY_FILE, SWEEP_FILE,
};
