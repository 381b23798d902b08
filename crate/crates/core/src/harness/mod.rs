//! Scenario files, sweeps, rate fits, artifacts and the acceptance suite.

pub mod acceptance;
pub mod config;
pub mod emit;
pub mod fit;
pub mod run;

pub use acceptance::{evaluate, run_suite, CriterionOutcome};
pub use config::{bundled_scenario, load_scenario, ScenarioSpec};
pub use emit::emit_results;
pub use fit::{fit_rate, FitOptions, RateFit};
pub use run::{run_scenario, RunArtifact};
