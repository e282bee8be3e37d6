//! Configuration intake and the canned experiments behind the command line.

pub mod config;
pub mod gate;
pub mod output;
pub mod rabi;
pub mod report;
pub mod scan;
pub mod setup;
pub mod svg;

pub use config::{CalibrationMode, EngineKind, ExperimentConfig, OmegaRef, ParamsSection, Rate, Tolerances};
pub use gate::{run_gate_check, GateReport};
pub use output::OutputDir;
pub use rabi::{run_rabi, RabiOutcome};
pub use report::{run_condition_report, run_effective};
pub use scan::{run_fidelity_scan, FidelityScan};
pub use setup::{measure_frequency, Resolution, Setup};
