//! The temporal translation functional `∫₀^{T-τ} |∫φ(Q(t+τ) - Q(t)) dx| dt`.
//!
//! `t ↦ ∫φQ(t)` is interpolated linearly between snapshots and the
//! absolute value is integrated exactly on every linear piece.

use serde::{Deserialize, Serialize};

use crate::entropy::EntropySpec;
use crate::error::{Error, Result};
use crate::grid::Field;
use crate::parallel::Execution;
use crate::sde::{map_paths, SimConfig, Simulation};
use crate::stats::{loglog_slope, MeanVar};

/// Number of points of the geometric `τ`-grid used for the supremum.
pub const TAU_POINTS: usize = 16;
/// Smallest grid point relative to `ϑ`.
pub const TAU_SPAN: f64 = 1.0 / 64.0;

fn check_times(times: &[f64]) -> Result<()> {
    if times.len() < 2 || times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument(
            "need at least two strictly increasing times".into(),
        ));
    }
    Ok(())
}

fn interp(times: &[f64], f: &[f64], t: f64) -> f64 {
    let i = match times.partition_point(|&s| s <= t) {
        0 => 0,
        i if i >= times.len() => times.len() - 2,
        i => i - 1,
    };
    let w = (t - times[i]) / (times[i + 1] - times[i]);
    f[i] + w * (f[i + 1] - f[i])
}

/// `∫ₐᵇ |g|` for `g` linear with end values `ga`, `gb`.
fn abs_linear(ga: f64, gb: f64, len: f64) -> f64 {
    if ga * gb >= 0.0 {
        0.5 * (ga.abs() + gb.abs()) * len
    } else {
        0.5 * (ga * ga + gb * gb) / (ga.abs() + gb.abs()) * len
    }
}

/// Translation functional of the scalar series `f(t_k) = ∫φQ(t_k)`.
pub fn translation_of_series(times: &[f64], f: &[f64], tau: f64) -> Result<f64> {
    check_times(times)?;
    if f.len() != times.len() {
        return Err(Error::InvalidArgument("series and times differ in length".into()));
    }
    let (t0, t1) = (times[0], *times.last().unwrap());
    if !(tau >= 0.0) || tau >= t1 - t0 {
        return Err(Error::InvalidArgument(format!(
            "tau = {tau} must lie in [0, T) with T = {}",
            t1 - t0
        )));
    }
    let end = t1 - tau;
    let mut cuts: Vec<f64> = times
        .iter()
        .flat_map(|&t| [t, t - tau])
        .filter(|&t| t > t0 && t < end)
        .collect();
    cuts.push(t0);
    cuts.push(end);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let g = |t: f64| interp(times, f, t + tau) - interp(times, f, t);
    Ok(cuts.windows(2).map(|w| abs_linear(g(w[0]), g(w[1]), w[1] - w[0])).sum())
}

/// `∫₀^{T-τ} |∫φ(Q(t+τ,x) - Q(t,x)) dx| dt` for snapshots `q` at `times`.
pub fn translation_functional(q: &[Field], times: &[f64], phi: &Field, tau: f64) -> Result<f64> {
    if q.len() != times.len() {
        return Err(Error::InvalidArgument("snapshots and times differ in length".into()));
    }
    let f = q.iter().map(|qk| qk.dot(phi)).collect::<Result<Vec<f64>>>()?;
    translation_of_series(times, &f, tau)
}

/// Geometric grid of [`TAU_POINTS`] values from `ϑ·TAU_SPAN` to `ϑ`.
pub fn tau_grid(theta: f64) -> Vec<f64> {
    let n = TAU_POINTS - 1;
    (0..=n)
        .map(|i| theta * TAU_SPAN.powf((n - i) as f64 / n as f64))
        .collect()
}

/// Supremum of the functional over [`tau_grid`]; a lower bound for the
/// supremum over the continuum `(0, ϑ)`.
pub fn sup_translation(times: &[f64], f: &[f64], theta: f64) -> Result<f64> {
    tau_grid(theta)
        .into_iter()
        .map(|tau| translation_of_series(times, f, tau))
        .try_fold(0.0f64, |m, v| v.map(|v| m.max(v)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslationStudy {
    pub thetas: Vec<f64>,
    /// Ensemble statistics of the sup-functional for each `ϑ`.
    pub sup_functional: Vec<MeanVar>,
    /// Least-squares slope of the mean against `ϑ` on log-log axes.
    pub slope: f64,
    pub excluded: usize,
}

/// Ensemble study of `sup_{τ<ϑ}` of the functional with `Q = S(q)`.
pub fn translation_study(
    config: &SimConfig,
    spec: &EntropySpec,
    phi: &Field,
    thetas: &[f64],
    exec: Execution,
) -> Result<TranslationStudy> {
    let ent = spec.validate()?;
    let sim = Simulation::new(config)?;
    config.grid()?.ensure_same(&phi.grid())?;
    let per_path = map_paths(&sim, config.n_paths, exec, |out| -> Option<Result<Vec<f64>>> {
        if out.failure.is_some() {
            return None;
        }
        let traj = out.trajectory;
        let times = traj.times();
        let f: Result<Vec<f64>> = traj.snapshots.iter().map(|s| ent.map_s(&s.q).dot(phi)).collect();
        Some(f.and_then(|f| thetas.iter().map(|&th| sup_translation(&times, &f, th)).collect()))
    })?;
    let excluded = per_path.iter().filter(|p| p.is_none()).count();
    let rows = per_path.into_iter().flatten().collect::<Result<Vec<Vec<f64>>>>()?;
    let sup_functional: Vec<MeanVar> = (0..thetas.len())
        .map(|i| MeanVar::of(&rows.iter().map(|r| r[i]).collect::<Vec<_>>()))
        .collect();
    let means: Vec<f64> = sup_functional.iter().map(|m| m.mean).collect();
    Ok(TranslationStudy {
        thetas: thetas.to_vec(),
        slope: loglog_slope(thetas, &means),
        sup_functional,
        excluded,
    })
}
