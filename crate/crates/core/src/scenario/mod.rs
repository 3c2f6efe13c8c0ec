//! Experiment driver: scenario files, end-to-end runs, composition
//! sweeps, matrix export and plots.

mod config;
pub mod plot;
mod run;

pub use config::{
    BoundPoint, DiagnosticsSettings, ScenarioConfig, SolverSettings, Variant, WavenumberSpec, FORMAT_HEADER,
    FORMAT_VERSION,
};
pub use run::{
    export_matrices, run_scenario, run_scenario_config, run_table_sweep, sweep_csv, AdefOperator, Composition,
    HrArrival, OutputFile, Phase, Problem, RunArtifacts, RunManifest, SweepRow,
};
