//! Plan parsing and experiment orchestration behind the `sch` binary.

pub mod error;
pub mod plan;
pub mod run;

pub use error::CliError;
pub use plan::{parse_config, parse_config_with, ExperimentPlan, Mode, ModeParams, Overrides};
pub use run::{artifacts_hash, plan_hash, run, run_with, Artifact, Manifest, RunOutcome, MANIFEST};
