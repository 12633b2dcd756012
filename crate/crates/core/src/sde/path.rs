use serde::{Deserialize, Serialize};

use super::brownian;
use super::config::SimConfig;
use super::integrator::{State, Stepper};
use super::noise::NoiseCoef;
use crate::error::{Error, Result};
use crate::grid::{Field, Grid, Spectrum};

/// Recorded states of one path together with the increments that drove it.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub config_hash: String,
    pub path_index: u64,
    pub seed: u64,
    pub dt: f64,
    /// Step index of each snapshot.
    pub steps: Vec<u64>,
    pub snapshots: Vec<State>,
    /// Every Wiener increment `ΔW_k` used, one per step taken.
    pub wiener: Vec<f64>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }

    pub fn grid(&self) -> Grid {
        self.snapshots[0].grid()
    }

    pub fn last(&self) -> &State {
        self.snapshots.last().expect("at least one snapshot")
    }

    /// Wiener increments between consecutive snapshots.
    pub fn snapshot_increments(&self) -> Result<Vec<f64>> {
        let needed = *self.steps.last().unwrap_or(&0) as usize;
        if self.wiener.len() < needed {
            return Err(Error::MissingIncrements);
        }
        Ok(self
            .steps
            .windows(2)
            .map(|w| self.wiener[w[0] as usize..w[1] as usize].iter().sum())
            .collect())
    }

    /// `W(t)` at every snapshot time.
    pub fn wiener_at_snapshots(&self) -> Result<Vec<f64>> {
        let mut w = vec![0.0];
        let mut acc = 0.0;
        for d in self.snapshot_increments()? {
            acc += d;
            w.push(acc);
        }
        Ok(w)
    }

    /// Lengths of the intervals between snapshots.
    pub fn snapshot_dts(&self) -> Vec<f64> {
        self.steps
            .windows(2)
            .map(|w| (w[1] - w[0]) as f64 * self.dt)
            .collect()
    }

    /// The JSON sidecar: times, seed, path index and config hash.
    pub fn sidecar(&self) -> TrajectorySidecar {
        TrajectorySidecar {
            config_hash: self.config_hash.clone(),
            path_index: self.path_index,
            seed: self.seed,
            dt: self.dt,
            n: self.grid().n(),
            steps: self.steps.clone(),
            times: self.times(),
            wiener: self.wiener.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySidecar {
    pub config_hash: String,
    pub path_index: u64,
    pub seed: u64,
    pub dt: f64,
    pub n: usize,
    pub steps: Vec<u64>,
    pub times: Vec<f64>,
    pub wiener: Vec<f64>,
}

/// A path that may have stopped early.
#[derive(Debug)]
pub struct PathOutcome {
    pub trajectory: Trajectory,
    pub failure: Option<Error>,
}

/// Everything shared by the paths of one configuration.
#[derive(Debug, Clone)]
pub struct Simulation {
    config: SimConfig,
    hash: String,
    stepper: Stepper,
    n_steps: u64,
}

impl Simulation {
    pub fn new(config: &SimConfig) -> Result<Simulation> {
        config.validate()?;
        let grid = config.grid()?;
        let noise = config.noise()?;
        let stepper = Stepper::new(grid, config.epsilon, noise, config.scheme, config.dt)?;
        Ok(Simulation {
            hash: config.hash(),
            n_steps: config.n_steps()?,
            config: config.clone(),
            stepper,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn config_hash(&self) -> &str {
        &self.hash
    }

    pub fn noise(&self) -> &NoiseCoef {
        self.stepper.noise()
    }

    pub fn stepper(&self) -> &Stepper {
        &self.stepper
    }

    pub fn n_steps(&self) -> u64 {
        self.n_steps
    }

    pub fn increments(&self, path_index: u64) -> Vec<f64> {
        if self.noise().is_zero() {
            return vec![0.0; self.n_steps as usize];
        }
        brownian::increments(self.config.seed, path_index, self.config.t_end, self.n_steps)
    }

    /// Initial data of a path, projected onto the dealiased band.
    pub fn initial_state(&self, path_index: u64) -> Result<Field> {
        Ok(self.stepper.project(&self.config.initial_field(path_index)?))
    }

    pub fn run(&self, path_index: u64) -> Result<PathOutcome> {
        let u0 = self.initial_state(path_index)?;
        let inc = self.increments(path_index);
        Ok(self.run_with(path_index, u0, &inc))
    }

    /// Integrates from `u0` with the given increments (one per step).
    pub fn run_with(&self, path_index: u64, u0: Field, increments: &[f64]) -> PathOutcome {
        let dt = self.config.dt;
        let every = self.config.record_every as u64;
        let n_steps = increments.len() as u64;
        let mut uh = Spectrum::of(&u0);
        let mut steps = vec![0];
        let mut snapshots = vec![State::new(0.0, u0).expect("validated initial data")];
        let mut failure = None;
        let mut taken = 0u64;
        for (k, &dw) in increments.iter().enumerate() {
            let t = k as f64 * dt;
            match self.stepper.advance(t, &uh, dw) {
                Ok(next) => uh = next,
                Err(e) => {
                    failure = Some(e);
                    break;
                }
            }
            taken = k as u64 + 1;
            if taken.is_multiple_of(every) || taken == n_steps {
                let s = State {
                    t: taken as f64 * dt,
                    u: uh.to_field(),
                    q: uh.derivative(1).to_field(),
                };
                if !(s.u.is_finite() && s.q.is_finite()) {
                    failure = Some(Error::BlowUp {
                        t: s.t,
                        reason: "non-finite values".into(),
                    });
                    break;
                }
                steps.push(taken);
                snapshots.push(s);
            }
        }
        PathOutcome {
            trajectory: Trajectory {
                config_hash: self.hash.clone(),
                path_index,
                seed: self.config.seed,
                dt,
                steps,
                snapshots,
                wiener: increments[..taken as usize].to_vec(),
            },
            failure,
        }
    }
}

/// Simulates one path; a blow-up is returned as an error carrying its time.
pub fn simulate_path(config: &SimConfig, path_index: u64) -> Result<Trajectory> {
    let out = Simulation::new(config)?.run(path_index)?;
    match out.failure {
        Some(e) => Err(e),
        None => Ok(out.trajectory),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sde::initial::InitialSpec;
    use crate::sde::noise::SigmaSpec;

    fn config(sigma: SigmaSpec) -> SimConfig {
        let mut c = SimConfig::new(32, 0.05, 1e-3, 0.02, sigma, InitialSpec::sine());
        c.record_every = 5;
        c.seed = 11;
        c
    }

    #[test]
    fn deterministic_per_seed_and_path() {
        let c = config(SigmaSpec::Sin(1));
        let a = simulate_path(&c, 2).unwrap();
        let b = simulate_path(&c, 2).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.snapshots.len(), 5);
        assert_eq!(a.wiener.len(), 20);
        let other = simulate_path(&c, 3).unwrap();
        assert_ne!(a.last().u, other.last().u);
    }

    #[test]
    fn zero_noise_ignores_seed() {
        let mut c = config(SigmaSpec::Zero);
        let a = simulate_path(&c, 0).unwrap();
        c.seed = 99;
        let b = simulate_path(&c, 0).unwrap();
        assert_eq!(a.snapshots, b.snapshots);
    }

    #[test]
    fn zero_horizon_gives_initial_snapshot() {
        let mut c = config(SigmaSpec::Sin(1));
        c.t_end = 0.0;
        let t = simulate_path(&c, 0).unwrap();
        assert_eq!(t.snapshots.len(), 1);
        let u0 = Field::from_fn(c.grid().unwrap(), f64::sin);
        assert!(t.snapshots[0].u.sub(&u0).unwrap().sup_norm() < 1e-15);
    }

    #[test]
    fn increments_sum_to_wiener() {
        let c = config(SigmaSpec::Sin(1));
        let t = simulate_path(&c, 0).unwrap();
        let w = t.wiener_at_snapshots().unwrap();
        let total: f64 = t.wiener.iter().sum();
        assert!((w.last().unwrap() - total).abs() < 1e-15);
    }
}
