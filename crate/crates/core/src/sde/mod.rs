//! Time integration of the viscous stochastic Camassa–Holm equation in Itô
//! form, for single paths and seeded ensembles.

pub mod brownian;
mod config;
mod ensemble;
mod initial;
mod integrator;
mod noise;
mod path;
mod refinement;

pub use config::{stability_bound, Scheme, SimConfig, StabilityBound};
pub use ensemble::{
    map_paths, run_ensemble, run_ensemble_with, run_records, BreakingHistogram, EnsembleSummary,
    PathFailure, PathRecord,
};
pub use initial::{initial_data, path_initial_data, InitialSpec, Perturbation};
pub use integrator::{drift, noise_term, step, State, Stepper};
pub use noise::{load_field, NoiseCoef, SigmaSpec};
pub use refinement::{strong_order_study, StrongOrderReport};
pub use path::{simulate_path, PathOutcome, Simulation, Trajectory, TrajectorySidecar};
