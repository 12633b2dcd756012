use serde::{Deserialize, Serialize};

use super::config::SimConfig;
use super::path::{PathOutcome, Simulation, Trajectory};
use crate::error::Result;
use crate::parallel::{map_indices, Execution};
use crate::stats::MeanVar;

/// Where and why a path stopped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathFailure {
    pub path_index: u64,
    pub t: Option<f64>,
    pub message: String,
}

/// Per-path scalar series at the recorded times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub path_index: u64,
    pub times: Vec<f64>,
    /// `‖u‖²_{H¹}`.
    pub h1: Vec<f64>,
    /// `∫|q|^{2+α} dx`.
    pub lq: Vec<f64>,
    pub sup_u: Vec<f64>,
    pub sup_q: Vec<f64>,
    pub min_q: Vec<f64>,
    /// `∫₀ᵀ∫|q|^{2+α} dx dt` (trapezoidal in time).
    pub lq_time_integral: f64,
    pub breaking_time: Option<f64>,
    pub failure: Option<PathFailure>,
}

impl PathRecord {
    pub fn from_trajectory(traj: &Trajectory, alpha: f64, threshold: f64) -> PathRecord {
        let p = 2.0 + alpha;
        let times = traj.times();
        let lq: Vec<f64> = traj
            .snapshots
            .iter()
            .map(|s| s.q.map(|v| v.abs().powf(p)).integral())
            .collect();
        let min_q: Vec<f64> = traj.snapshots.iter().map(|s| s.q.min()).collect();
        let lq_time_integral = times
            .windows(2)
            .zip(lq.windows(2))
            .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
            .sum();
        PathRecord {
            path_index: traj.path_index,
            h1: traj.snapshots.iter().map(|s| s.h1_energy()).collect(),
            sup_u: traj.snapshots.iter().map(|s| s.u.sup_norm()).collect(),
            sup_q: traj.snapshots.iter().map(|s| s.q.sup_norm()).collect(),
            breaking_time: times
                .iter()
                .zip(&min_q)
                .find(|(_, &m)| m < -threshold)
                .map(|(t, _)| *t),
            min_q,
            lq,
            lq_time_integral,
            times,
            failure: None,
        }
    }
}

/// Histogram of breaking times with `bins` equal bins on `[0, t_end]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakingHistogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub never: usize,
}

impl BreakingHistogram {
    pub fn new(times: &[Option<f64>], t_end: f64, bins: usize) -> BreakingHistogram {
        let edges: Vec<f64> = (0..=bins).map(|i| t_end * i as f64 / bins as f64).collect();
        let mut counts = vec![0; bins];
        let mut never = 0;
        for t in times {
            match t {
                Some(t) if t_end > 0.0 => {
                    let i = ((t / t_end) * bins as f64).floor() as usize;
                    counts[i.min(bins - 1)] += 1;
                }
                Some(_) => counts[0] += 1,
                None => never += 1,
            }
        }
        BreakingHistogram { edges, counts, never }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub config_hash: String,
    pub n_paths: usize,
    pub n_completed: usize,
    pub failures: Vec<PathFailure>,
    pub times: Vec<f64>,
    pub h1: Vec<MeanVar>,
    pub lq: Vec<MeanVar>,
    pub sup_u: Vec<MeanVar>,
    pub sup_q: Vec<MeanVar>,
    /// Monte Carlo estimate of `E ∫₀ᵀ∫|q|^{2+α} dx dt`.
    pub higher_integrability: MeanVar,
    pub breaking: BreakingHistogram,
}

fn column(records: &[&PathRecord], k: usize, f: impl Fn(&PathRecord) -> &Vec<f64>) -> MeanVar {
    let xs: Vec<f64> = records.iter().map(|r| f(r)[k]).collect();
    MeanVar::of(&xs)
}

impl EnsembleSummary {
    /// Reduces records in path-index order; failed paths are excluded from
    /// the statistics and listed in `failures`.
    pub fn from_records(config: &SimConfig, hash: &str, records: &[PathRecord]) -> EnsembleSummary {
        let ok: Vec<&PathRecord> = records.iter().filter(|r| r.failure.is_none()).collect();
        let failures = records.iter().filter_map(|r| r.failure.clone()).collect();
        let times = ok.first().map(|r| r.times.clone()).unwrap_or_default();
        let per_time = |f: &dyn Fn(&PathRecord) -> &Vec<f64>| -> Vec<MeanVar> {
            (0..times.len()).map(|k| column(&ok, k, f)).collect()
        };
        EnsembleSummary {
            config_hash: hash.to_string(),
            n_paths: records.len(),
            n_completed: ok.len(),
            failures,
            h1: per_time(&|r| &r.h1),
            lq: per_time(&|r| &r.lq),
            sup_u: per_time(&|r| &r.sup_u),
            sup_q: per_time(&|r| &r.sup_q),
            higher_integrability: MeanVar::of(
                &ok.iter().map(|r| r.lq_time_integral).collect::<Vec<_>>(),
            ),
            breaking: BreakingHistogram::new(
                &records.iter().map(|r| r.breaking_time).collect::<Vec<_>>(),
                config.t_end,
                20,
            ),
            times,
        }
    }
}

/// Runs paths `0..count` and maps each outcome through `f`, in path order.
pub fn map_paths<T, F>(sim: &Simulation, count: usize, exec: Execution, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(PathOutcome) -> T + Sync + Send,
{
    map_indices(count, exec, |i| sim.run(i as u64).map(&f))
        .into_iter()
        .collect()
}

fn record_of(config: &SimConfig, out: PathOutcome) -> PathRecord {
    let mut rec = PathRecord::from_trajectory(&out.trajectory, config.alpha, config.breaking_threshold);
    if let Some(e) = out.failure {
        rec.failure = Some(PathFailure {
            path_index: rec.path_index,
            t: e.failure_time(),
            message: e.to_string(),
        });
    }
    rec
}

/// Per-path records of an ensemble.
pub fn run_records(config: &SimConfig, exec: Execution) -> Result<(String, Vec<PathRecord>)> {
    let sim = Simulation::new(config)?;
    let recs = map_paths(&sim, config.n_paths, exec, |out| record_of(config, out))?;
    Ok((sim.config_hash().to_string(), recs))
}

pub fn run_ensemble_with(config: &SimConfig, exec: Execution) -> Result<EnsembleSummary> {
    let (hash, recs) = run_records(config, exec)?;
    Ok(EnsembleSummary::from_records(config, &hash, &recs))
}

pub fn run_ensemble(config: &SimConfig) -> Result<EnsembleSummary> {
    run_ensemble_with(config, Execution::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sde::initial::InitialSpec;
    use crate::sde::noise::SigmaSpec;

    fn config(sigma: SigmaSpec, paths: usize) -> SimConfig {
        let mut c = SimConfig::new(32, 0.05, 1e-3, 0.01, sigma, InitialSpec::sine());
        c.n_paths = paths;
        c.seed = 3;
        c
    }

    #[test]
    fn single_path_has_zero_variance() {
        let s = run_ensemble(&config(SigmaSpec::Sin(1), 1)).unwrap();
        assert!(s.h1.iter().all(|m| m.variance == 0.0));
        assert_eq!(s.n_completed, 1);
    }

    #[test]
    fn zero_noise_paths_agree() {
        let s = run_ensemble(&config(SigmaSpec::Zero, 8)).unwrap();
        assert!(s.h1.iter().all(|m| m.variance == 0.0));
    }

    #[test]
    fn doubled_ensemble_extends() {
        let (_, small) = run_records(&config(SigmaSpec::Sin(1), 4), Execution::Parallel).unwrap();
        let (_, big) = run_records(&config(SigmaSpec::Sin(1), 8), Execution::Sequential).unwrap();
        assert_eq!(small[..], big[..4]);
    }

    #[test]
    fn histogram_counts() {
        let h = BreakingHistogram::new(&[Some(0.1), None, Some(0.95), Some(1.0)], 1.0, 10);
        assert_eq!(h.counts[1], 1);
        assert_eq!(h.counts[9], 2);
        assert_eq!(h.never, 1);
    }
}
