//! Coupled-path proxy `𝔻̂_ε = ½(q_ε² - q_ref²)` for the defect measure.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Field;
use crate::parallel::{map_indices, Execution};
use crate::sde::{SimConfig, Simulation, Trajectory};
use crate::stats::MeanVar;

/// `½(q_a² - q_b²)` pointwise.
pub fn defect_field(q_a: &Field, q_b: &Field) -> Result<Field> {
    q_a.zip_with(q_b, |a, b| 0.5 * (a * a - b * b))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefectSeries {
    pub epsilon: f64,
    /// Ensemble mean of `∫𝔻̂ dx` at each snapshot.
    pub integral: Vec<MeanVar>,
    /// Ensemble mean of `‖𝔻̂‖_{L¹}` at each snapshot.
    pub l1: Vec<MeanVar>,
    /// `𝔻̂(t, x)` of the first completed path, one field per snapshot.
    #[serde(skip)]
    pub field: Vec<Field>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefectEstimate {
    pub reference_epsilon: f64,
    pub times: Vec<f64>,
    pub series: Vec<DefectSeries>,
    /// Paths dropped because some member of the sweep failed.
    pub excluded: usize,
}

fn check_sweep(configs: &[SimConfig], reference_epsilon: f64) -> Result<()> {
    let first = configs
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty sweep".into()))?;
    for c in configs {
        c.validate()?;
        let same = c.n == first.n
            && c.dt == first.dt
            && c.t_end == first.t_end
            && c.seed == first.seed
            && c.sigma == first.sigma
            && c.sigma_smoothing == first.sigma_smoothing
            && c.initial == first.initial
            && c.initial_mollify == first.initial_mollify
            && c.initial_perturbation == first.initial_perturbation
            && c.scheme == first.scheme
            && c.record_every == first.record_every
            && c.n_paths == first.n_paths;
        if !same {
            return Err(Error::InvalidArgument(
                "sweep configs must differ in epsilon only".into(),
            ));
        }
    }
    let noises = configs.iter().map(|c| c.noise()).collect::<Result<Vec<_>>>()?;
    if noises.iter().any(|n| n.sigma() != noises[0].sigma()) {
        return Err(Error::InvalidArgument(
            "sweep members see different noise coefficients (sigma smoothing depends on epsilon)".into(),
        ));
    }
    let min = configs.iter().map(|c| c.epsilon).fold(f64::INFINITY, f64::min);
    if reference_epsilon != min {
        return Err(Error::InvalidArgument(format!(
            "reference epsilon {reference_epsilon} is not the smallest in the sweep ({min})"
        )));
    }
    Ok(())
}

/// Runs every config of an ε-sweep on the same Brownian paths and compares
/// `q_ε²` against the reference (smallest ε) run.
pub fn defect_estimate(configs: &[SimConfig], reference_epsilon: f64, exec: Execution) -> Result<DefectEstimate> {
    check_sweep(configs, reference_epsilon)?;
    let sims = configs.iter().map(Simulation::new).collect::<Result<Vec<_>>>()?;
    let r = configs
        .iter()
        .position(|c| c.epsilon == reference_epsilon)
        .expect("checked");
    let n_paths = configs[0].n_paths;
    // Per path: snapshot times and, per config and snapshot, the defect
    // field (None on failure).
    type Run = (Vec<f64>, Vec<Vec<Field>>);
    let runs: Vec<Option<Run>> = map_indices(n_paths, exec, |p| {
        let trajs: Vec<Trajectory> = sims
            .iter()
            .map(|s| {
                let out = s.run(p as u64).ok()?;
                if out.failure.is_some() {
                    None
                } else {
                    Some(out.trajectory)
                }
            })
            .collect::<Option<Vec<_>>>()?;
        let reference = &trajs[r];
        let fields = trajs
            .iter()
            .map(|t| {
                t.snapshots
                    .iter()
                    .zip(&reference.snapshots)
                    .map(|(a, b)| defect_field(&a.q, &b.q).ok())
                    .collect::<Option<Vec<_>>>()
            })
            .collect::<Option<Vec<_>>>()?;
        Some((reference.times(), fields))
    });
    let excluded = runs.iter().filter(|r| r.is_none()).count();
    let (times, ok): (Vec<Vec<f64>>, Vec<Vec<Vec<Field>>>) = runs.into_iter().flatten().unzip();
    let first = ok
        .first()
        .ok_or_else(|| Error::InvalidArgument("every path of the sweep failed".into()))?;
    let times = times[0].clone();
    let series = configs
        .iter()
        .enumerate()
        .map(|(c, cfg)| {
            let stat = |f: &dyn Fn(&Field) -> f64| -> Vec<MeanVar> {
                (0..times.len())
                    .map(|k| MeanVar::of(&ok.iter().map(|p| f(&p[c][k])).collect::<Vec<_>>()))
                    .collect()
            };
            DefectSeries {
                epsilon: cfg.epsilon,
                integral: stat(&|d| d.integral()),
                l1: stat(&|d| d.l1_norm()),
                field: first[c].clone(),
            }
        })
        .collect();
    Ok(DefectEstimate {
        reference_epsilon,
        times,
        series,
        excluded,
    })
}
