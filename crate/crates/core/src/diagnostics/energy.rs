//! Pathwise energy balance and the mean energy inequality.

use serde::{Deserialize, Serialize};

use super::{ddx, noise_direction, running_relative};
use crate::error::{Error, Result};
use crate::parallel::Execution;
use crate::sde::{map_paths, NoiseCoef, SimConfig, Simulation, State, Trajectory};
use crate::stats::MeanVar;

/// Quadrature for the stochastic integral in a pathwise balance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ItoQuadrature {
    /// `Σ f(t_k) ΔW_k`.
    #[default]
    LeftPoint,
    /// Left-point sum plus `½ (∂f·G)(t_k) (ΔW_k² - Δt_k)`, which removes the
    /// `O(√Δt)` pathwise error of the left-point sum on Milstein paths.
    Milstein,
}

/// Spatial integrals entering the energy balance at one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyTerms {
    /// `∫ u² + q²`.
    pub energy: f64,
    /// `∫ q² + q_x²`.
    pub dissipation: f64,
    /// `∫ ¼(σ²)_xx u² + (σ_x² - ¼(σ²)_xx) q²`.
    pub drift: f64,
    /// `∫ σ_x (u² - q²)`.
    pub martingale: f64,
    /// `∫ σ_x (u g - q g_x)` with `g = -P(σ q)`.
    pub milstein: f64,
}

impl EnergyTerms {
    pub fn of(state: &State, noise: &NoiseCoef) -> EnergyTerms {
        let (u, q) = (state.u.values(), state.q.values());
        let qx = ddx(&state.q);
        let h = state.grid().h();
        let dissipation = h * q.iter().zip(qx.values()).map(|(a, b)| a * a + b * b).sum::<f64>();
        let energy = state.h1_energy();
        if noise.is_zero() {
            return EnergyTerms {
                energy,
                dissipation,
                drift: 0.0,
                martingale: 0.0,
                milstein: 0.0,
            };
        }
        let sx = noise.dsigma().values();
        let a_xx = noise.sigma_sq_xx();
        let g = noise_direction(state, noise);
        let gx = ddx(&g);
        let mut drift = 0.0;
        let mut martingale = 0.0;
        let mut milstein = 0.0;
        for j in 0..u.len() {
            let a = 0.25 * a_xx.values()[j];
            drift += a * u[j] * u[j] + (sx[j] * sx[j] - a) * q[j] * q[j];
            martingale += sx[j] * (u[j] * u[j] - q[j] * q[j]);
            milstein += sx[j] * (u[j] * g.values()[j] - q[j] * gx.values()[j]);
        }
        EnergyTerms {
            energy,
            dissipation,
            drift: h * drift,
            martingale: h * martingale,
            milstein: h * milstein,
        }
    }
}

/// `E(t) - E(0) + 2ε∫∫(q² + q_x²) - ∫∫ drift - ∫∫ σ_x(u² - q²) dW` at each
/// snapshot, with its constituent terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyBalance {
    pub times: Vec<f64>,
    pub energy: Vec<f64>,
    /// `2ε ∫₀ᵗ∫ q² + q_x²`.
    pub dissipation: Vec<f64>,
    pub drift: Vec<f64>,
    pub stochastic: Vec<f64>,
    pub residual: Vec<f64>,
    /// Residual over the running max of the largest term.
    pub relative: Vec<f64>,
}

impl EnergyBalance {
    /// `∫₀ᵀ |residual| dt` (trapezoidal).
    pub fn l1_in_time(&self) -> f64 {
        super::trapezoid_abs(&self.times, &self.residual)
    }

    pub fn max_abs_residual(&self) -> f64 {
        self.residual.iter().fold(0.0, |a, r| a.max(r.abs()))
    }
}

pub fn energy_balance_residual(traj: &Trajectory, noise: &NoiseCoef, epsilon: f64) -> Result<EnergyBalance> {
    energy_balance_residual_with(traj, noise, epsilon, ItoQuadrature::LeftPoint)
}

/// Drift integrals use the trapezoidal rule between snapshots; the
/// stochastic integral uses the stored increments.
pub fn energy_balance_residual_with(
    traj: &Trajectory,
    noise: &NoiseCoef,
    epsilon: f64,
    quadrature: ItoQuadrature,
) -> Result<EnergyBalance> {
    traj.grid().ensure_same(&noise.grid())?;
    let dw = traj.snapshot_increments()?;
    let dts = traj.snapshot_dts();
    let terms: Vec<EnergyTerms> = traj.snapshots.iter().map(|s| EnergyTerms::of(s, noise)).collect();
    let k = terms.len();
    let mut dissipation = vec![0.0; k];
    let mut drift = vec![0.0; k];
    let mut stochastic = vec![0.0; k];
    for j in 0..k - 1 {
        let (a, b) = (&terms[j], &terms[j + 1]);
        dissipation[j + 1] = dissipation[j] + epsilon * (a.dissipation + b.dissipation) * dts[j];
        drift[j + 1] = drift[j] + 0.5 * (a.drift + b.drift) * dts[j];
        let mut m = a.martingale * dw[j];
        if quadrature == ItoQuadrature::Milstein {
            m += a.milstein * (dw[j] * dw[j] - dts[j]);
        }
        stochastic[j + 1] = stochastic[j] + m;
    }
    let energy: Vec<f64> = terms.iter().map(|t| t.energy).collect();
    let e0 = energy[0];
    let residual: Vec<f64> = (0..k)
        .map(|j| energy[j] - e0 + dissipation[j] - drift[j] - stochastic[j])
        .collect();
    let scale: Vec<f64> = (0..k)
        .map(|j| {
            (energy[j] - e0)
                .abs()
                .max(dissipation[j].abs())
                .max(drift[j].abs())
                .max(stochastic[j].abs())
        })
        .collect();
    Ok(EnergyBalance {
        times: traj.times(),
        relative: running_relative(&residual, &scale),
        energy,
        dissipation,
        drift,
        stochastic,
        residual,
    })
}

/// Energy and accumulated drift integral of one path, the ingredients of
/// the mean energy inequality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergySeries {
    pub times: Vec<f64>,
    pub energy: Vec<f64>,
    /// `∫₀ᵗ∫ ¼(σ²)_xx u² + (σ_x² - ¼(σ²)_xx) q² dx dt'`.
    pub drift_integral: Vec<f64>,
}

impl EnergySeries {
    pub fn from_trajectory(traj: &Trajectory, noise: &NoiseCoef) -> EnergySeries {
        let terms: Vec<EnergyTerms> = traj.snapshots.iter().map(|s| EnergyTerms::of(s, noise)).collect();
        let times = traj.times();
        let mut drift_integral = vec![0.0];
        for j in 1..terms.len() {
            let d = 0.5 * (terms[j - 1].drift + terms[j].drift) * (times[j] - times[j - 1]);
            drift_integral.push(drift_integral[j - 1] + d);
        }
        EnergySeries {
            energy: terms.iter().map(|t| t.energy).collect(),
            drift_integral,
            times,
        }
    }

    /// Keeps every `stride`-th sample and the last one.
    pub fn downsample(&self, stride: usize) -> EnergySeries {
        let stride = stride.max(1);
        let last = self.times.len() - 1;
        let idx: Vec<usize> = (0..=last).filter(|i| i % stride == 0 || *i == last).collect();
        EnergySeries {
            times: idx.iter().map(|&i| self.times[i]).collect(),
            energy: idx.iter().map(|&i| self.energy[i]).collect(),
            drift_integral: idx.iter().map(|&i| self.drift_integral[i]).collect(),
        }
    }
}

/// `X = E(t) - E(s) - ∫ₛᵗ drift` over the ensemble for one `(s, t)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairCheck {
    pub s: f64,
    pub t: f64,
    pub mean: f64,
    pub std_error: f64,
    /// `max(0, mean - k·std_error)`.
    pub violation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyInequalityReport {
    pub n_paths: usize,
    pub excluded: usize,
    /// Multiple of the standard error allowed above zero.
    pub k_std_errors: f64,
    pub pairs: Vec<PairCheck>,
    pub max_violation: f64,
    /// Largest `mean / std_error` over pairs with nonzero spread.
    pub max_z: f64,
    pub holds: bool,
}

/// Checks `𝔼[E(t) - E(s) - ∫ₛᵗ drift] ≤ k·SE` for every recorded pair `s < t`.
/// The martingale term has zero mean, viscous dissipation only lowers `X`.
pub fn energy_inequality_from_series(series: &[EnergySeries], excluded: usize, k_std_errors: f64) -> Result<EnergyInequalityReport> {
    let first = series
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty ensemble".into()))?;
    if series.iter().any(|s| s.times != first.times) {
        return Err(Error::InvalidArgument("paths recorded at different times".into()));
    }
    let m = first.times.len();
    let mut pairs = Vec::with_capacity(m * (m - 1) / 2);
    for i in 0..m {
        for j in i + 1..m {
            let xs: Vec<f64> = series
                .iter()
                .map(|p| p.energy[j] - p.energy[i] - (p.drift_integral[j] - p.drift_integral[i]))
                .collect();
            let mv = MeanVar::of(&xs);
            // Round-off allowance for deterministic ensembles.
            let tol = k_std_errors * mv.std_error + 1e-12 * first.energy[i].abs().max(1.0);
            pairs.push(PairCheck {
                s: first.times[i],
                t: first.times[j],
                mean: mv.mean,
                std_error: mv.std_error,
                violation: (mv.mean - tol).max(0.0),
            });
        }
    }
    let max_violation = pairs.iter().fold(0.0, |a: f64, p| a.max(p.violation));
    let max_z = pairs
        .iter()
        .filter(|p| p.std_error > 0.0)
        .fold(f64::NEG_INFINITY, |a, p| a.max(p.mean / p.std_error));
    Ok(EnergyInequalityReport {
        n_paths: series.len(),
        excluded,
        k_std_errors,
        pairs,
        max_violation,
        max_z,
        holds: max_violation == 0.0,
    })
}

/// Runs the ensemble of `config` and checks the mean energy inequality on
/// every `stride`-th snapshot. Failed paths are excluded and counted.
pub fn energy_inequality_check(config: &SimConfig, stride: usize, exec: Execution) -> Result<EnergyInequalityReport> {
    let sim = Simulation::new(config)?;
    let noise = sim.noise().clone();
    let outcomes = map_paths(&sim, config.n_paths, exec, |out| match out.failure {
        Some(_) => None,
        None => Some(EnergySeries::from_trajectory(&out.trajectory, &noise).downsample(stride)),
    })?;
    let excluded = outcomes.iter().filter(|o| o.is_none()).count();
    let series: Vec<EnergySeries> = outcomes.into_iter().flatten().collect();
    energy_inequality_from_series(&series, excluded, 2.0)
}
