//! Strong-error studies: every step size is driven by coarsenings of the
//! same fine Brownian path.

use serde::{Deserialize, Serialize};

use super::brownian::{coarsen, increments};
use super::config::SimConfig;
use super::path::Simulation;
use crate::error::{Error, Result};
use crate::parallel::{map_indices, Execution};
use crate::stats::{loglog_slope, mean};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrongOrderReport {
    pub reference_dt: f64,
    pub dts: Vec<f64>,
    /// `(𝔼‖u_dt(T) - u_ref(T)‖²_{L²})^{1/2}` over completed paths.
    pub rms_errors: Vec<f64>,
    /// Least-squares slope of `log rms` against `log dt`.
    pub slope: f64,
    pub n_paths: usize,
    pub excluded: usize,
}

fn steps_for(t_end: f64, dt: f64, field: &str) -> Result<u64> {
    let r = t_end / dt;
    let n = r.round();
    if n < 1.0 || (r - n).abs() > 1e-9 * r.max(1.0) {
        return Err(Error::InvalidArgument(format!(
            "{field}: t_end / dt = {r} is not a positive integer"
        )));
    }
    Ok(n as u64)
}

/// Runs paths `0..config.n_paths` at each of `dts` and at `reference_dt`,
/// all on the same Brownian path, and compares `u` at `t_end`.
///
/// `config.dt` is ignored. Every `dt` must be an integer multiple of
/// `reference_dt`.
pub fn strong_order_study(
    config: &SimConfig,
    dts: &[f64],
    reference_dt: f64,
    exec: Execution,
) -> Result<StrongOrderReport> {
    if dts.len() < 2 {
        return Err(Error::InvalidArgument("need at least two step sizes".into()));
    }
    let n_ref = steps_for(config.t_end, reference_dt, "reference_dt")?;
    let at = |dt: f64| -> Result<(Simulation, usize)> {
        let n = steps_for(config.t_end, dt, "dt")?;
        if n_ref % n != 0 {
            return Err(Error::InvalidArgument(format!(
                "dt = {dt} is not a multiple of the reference step {reference_dt}"
            )));
        }
        let mut c = config.clone();
        c.dt = dt;
        c.record_every = n as usize;
        Ok((Simulation::new(&c)?, (n_ref / n) as usize))
    };
    let reference = at(reference_dt)?.0;
    let coarse = dts.iter().map(|&dt| at(dt)).collect::<Result<Vec<_>>>()?;
    let per_path: Vec<Option<Vec<f64>>> = map_indices(config.n_paths, exec, |p| {
        let p = p as u64;
        let u0 = reference.initial_state(p).ok()?;
        let fine = increments(config.seed, p, config.t_end, n_ref);
        let r = reference.run_with(p, u0.clone(), &fine);
        if r.failure.is_some() {
            return None;
        }
        let target = &r.trajectory.last().u;
        coarse
            .iter()
            .map(|(sim, factor)| {
                let out = sim.run_with(p, u0.clone(), &coarsen(&fine, *factor));
                if out.failure.is_some() {
                    return None;
                }
                Some(out.trajectory.last().u.sub(target).ok()?.l2_norm_sq())
            })
            .collect()
    });
    let excluded = per_path.iter().filter(|p| p.is_none()).count();
    let ok: Vec<Vec<f64>> = per_path.into_iter().flatten().collect();
    if ok.is_empty() {
        return Err(Error::InvalidArgument("every path of the study failed".into()));
    }
    let rms_errors: Vec<f64> = (0..dts.len())
        .map(|i| mean(&ok.iter().map(|e| e[i]).collect::<Vec<_>>()).sqrt())
        .collect();
    Ok(StrongOrderReport {
        reference_dt,
        dts: dts.to_vec(),
        slope: loglog_slope(dts, &rms_errors),
        rms_errors,
        n_paths: config.n_paths,
        excluded,
    })
}
