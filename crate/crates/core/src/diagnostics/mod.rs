//! Residuals, functionals and ensemble checks evaluated on trajectories.

mod commutator;
mod defect;
mod energy;
mod renormalized;
mod translation;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use commutator::{commutator_errors, commutator_errors_extended, commutator_sweep, CommutatorErrors};
pub use defect::{defect_estimate, defect_field, DefectEstimate, DefectSeries};
pub use energy::{
    energy_balance_residual, energy_balance_residual_with, energy_inequality_check,
    energy_inequality_from_series, EnergyBalance, EnergyInequalityReport, EnergySeries, EnergyTerms,
    ItoQuadrature, PairCheck,
};
pub use renormalized::{
    entropy_residual, entropy_residual_u, entropy_residual_u_with, entropy_residual_with, EntropyResidual,
};
pub use translation::{
    sup_translation, tau_grid, translation_functional, translation_of_series, translation_study,
    TranslationStudy, TAU_POINTS, TAU_SPAN,
};

use crate::entropy::{EntropyKind, EntropySpec};
use crate::error::{Error, Result};
use crate::grid::{dealias, Field, Spectrum};
use crate::parallel::Execution;
use crate::sde::{map_paths, Scheme, SimConfig, Simulation, State, Trajectory};
use crate::stats::MeanVar;

pub(crate) fn ddx(f: &Field) -> Field {
    Spectrum::of(f).derivative(1).to_field()
}

/// Projected noise direction `g = -P(σ q)` of the `u`-equation.
pub(crate) fn noise_direction(state: &State, noise: &crate::sde::NoiseCoef) -> Field {
    dealias(&noise.sigma().mul(&state.q).expect("same grid")).scale(-1.0)
}

/// `r_k / max_{j≤k} s_j`, zero while the scale is still zero.
pub(crate) fn running_relative(residual: &[f64], scale: &[f64]) -> Vec<f64> {
    let mut m = 0.0f64;
    residual
        .iter()
        .zip(scale)
        .map(|(r, s)| {
            m = m.max(*s);
            if m > 0.0 {
                r / m
            } else {
                0.0
            }
        })
        .collect()
}

/// `∫ |f| dt`, trapezoidal.
pub(crate) fn trapezoid_abs(times: &[f64], f: &[f64]) -> f64 {
    times
        .windows(2)
        .zip(f.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0].abs() + v[1].abs()))
        .sum()
}

/// First snapshot with `min q < -threshold`, and `min q` at every snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakingDetection {
    pub time: Option<f64>,
    pub min_q: Vec<f64>,
}

pub fn wave_breaking_detector(traj: &Trajectory, threshold: f64) -> Result<BreakingDetection> {
    if !(threshold > 0.0) || !threshold.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "breaking threshold must be positive, got {threshold}"
        )));
    }
    let min_q: Vec<f64> = traj.snapshots.iter().map(|s| s.q.min()).collect();
    let time = traj
        .snapshots
        .iter()
        .zip(&min_q)
        .find(|(_, &m)| m < -threshold)
        .map(|(s, _)| s.t);
    Ok(BreakingDetection { time, min_q })
}

/// `∫₀ᵀ∫|q|^{2+α} dx dt` along one path (trapezoidal in time).
pub fn space_time_lq(traj: &Trajectory, alpha: f64) -> f64 {
    let p = 2.0 + alpha;
    let vals: Vec<f64> = traj
        .snapshots
        .iter()
        .map(|s| s.q.map(|v| v.abs().powf(p)).integral())
        .collect();
    trapezoid_abs(&traj.times(), &vals)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HigherIntegrability {
    pub alpha: f64,
    /// Monte Carlo estimate of `𝔼∫∫|q|^{2+α} dx dt` over completed paths.
    pub estimate: MeanVar,
    pub excluded: usize,
}

pub fn higher_integrability(config: &SimConfig, alpha: f64, exec: Execution) -> Result<HigherIntegrability> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let sim = Simulation::new(config)?;
    let vals = map_paths(&sim, config.n_paths, exec, |out| match out.failure {
        Some(_) => None,
        None => Some(space_time_lq(&out.trajectory, alpha)),
    })?;
    let excluded = vals.iter().filter(|v| v.is_none()).count();
    let vals: Vec<f64> = vals.into_iter().flatten().collect();
    Ok(HigherIntegrability {
        alpha,
        estimate: MeanVar::of(&vals),
        excluded,
    })
}

/// Settings of [`diagnose`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnoseOptions {
    pub entropy: EntropySpec,
    /// Defaults to `Milstein` for Milstein paths, `LeftPoint` otherwise.
    pub quadrature: Option<ItoQuadrature>,
}

impl Default for DiagnoseOptions {
    fn default() -> Self {
        DiagnoseOptions {
            entropy: EntropySpec::with_ell(EntropyKind::Sell, 5.0),
            quadrature: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub config_hash: String,
    pub path_index: u64,
    pub seed: u64,
    pub entropy: EntropySpec,
    pub quadrature: ItoQuadrature,
    pub test_function: String,
    pub tolerances: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub times: Vec<f64>,
    /// `∫ u² + q² dx` per snapshot.
    pub energy_series: Vec<f64>,
    pub residual_series: BTreeMap<String, Vec<f64>>,
    pub breaking_time: Option<f64>,
    pub statistics: BTreeMap<String, f64>,
    pub metadata: ReportMetadata,
}

/// Test function used by [`diagnose`] for the entropy residuals.
pub const DIAGNOSE_TEST_FUNCTION: &str = "1 + 0.5 cos x";

/// Every per-trajectory diagnostic for one path of `config`.
pub fn diagnose(traj: &Trajectory, config: &SimConfig, options: &DiagnoseOptions) -> Result<DiagnosticsReport> {
    let noise = config.noise()?;
    let eps = config.epsilon;
    let quadrature = options.quadrature.unwrap_or(if config.scheme == Scheme::MilsteinImex {
        ItoQuadrature::Milstein
    } else {
        ItoQuadrature::LeftPoint
    });
    let phi = Field::from_fn(traj.grid(), |x| 1.0 + 0.5 * x.cos());
    let energy = energy_balance_residual_with(traj, &noise, eps, quadrature)?;
    let sq = entropy_residual_with(traj, &options.entropy, &noise, eps, &phi, quadrature)?;
    let su = entropy_residual_u_with(traj, &options.entropy, &noise, eps, &phi, quadrature)?;
    let breaking = wave_breaking_detector(traj, config.breaking_threshold)?;

    let mut residual_series = BTreeMap::new();
    residual_series.insert("energy_balance".to_string(), energy.residual.clone());
    residual_series.insert("energy_balance_relative".to_string(), energy.relative.clone());
    residual_series.insert("entropy_q".to_string(), sq.residual.clone());
    residual_series.insert("entropy_q_relative".to_string(), sq.relative.clone());
    residual_series.insert("entropy_u".to_string(), su.residual.clone());
    residual_series.insert("entropy_u_relative".to_string(), su.relative.clone());
    residual_series.insert("min_q".to_string(), breaking.min_q.clone());

    let mut statistics = BTreeMap::new();
    statistics.insert("energy_residual_l1".to_string(), energy.l1_in_time());
    statistics.insert("energy_residual_max".to_string(), energy.max_abs_residual());
    statistics.insert("entropy_q_residual_l1".to_string(), sq.l1_in_time());
    statistics.insert("entropy_u_residual_l1".to_string(), su.l1_in_time());
    statistics.insert("lq_space_time".to_string(), space_time_lq(traj, config.alpha));
    statistics.insert(
        "energy_relative_drift".to_string(),
        (energy.energy.last().unwrap() - energy.energy[0]) / energy.energy[0].max(f64::MIN_POSITIVE),
    );

    let mut tolerances = BTreeMap::new();
    tolerances.insert("breaking_threshold".to_string(), config.breaking_threshold);
    tolerances.insert("alpha".to_string(), config.alpha);

    Ok(DiagnosticsReport {
        times: traj.times(),
        energy_series: energy.energy,
        residual_series,
        breaking_time: breaking.time,
        statistics,
        metadata: ReportMetadata {
            config_hash: traj.config_hash.clone(),
            path_index: traj.path_index,
            seed: traj.seed,
            entropy: options.entropy,
            quadrature,
            test_function: DIAGNOSE_TEST_FUNCTION.to_string(),
            tolerances,
        },
    })
}
