use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::initial::{path_initial_data, InitialSpec, Perturbation};
use super::noise::{NoiseCoef, SigmaSpec};
use crate::error::{Error, Result};
use crate::grid::{Field, Grid};

/// Time-stepping scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Scheme {
    /// Exponential (Lawson) IMEX Euler–Maruyama.
    #[default]
    #[serde(rename = "em_imex", alias = "EM_IMEX")]
    EmImex,
    /// As `EmImex` plus the Milstein correction.
    #[serde(rename = "milstein_imex", alias = "Milstein_IMEX")]
    MilsteinImex,
    /// Fourth-order integrating-factor Runge–Kutta; deterministic runs only.
    #[serde(rename = "lawson4", alias = "Lawson4")]
    Lawson4,
}

pub const STABILITY_ADVECTIVE: f64 = 0.5;
pub const STABILITY_DIFFUSIVE: f64 = 0.25;
pub const BLOWUP_GRADIENT: f64 = 1e8;

/// Full description of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub n: usize,
    pub epsilon: f64,
    pub dt: f64,
    pub t_end: f64,
    pub sigma: SigmaSpec,
    /// Mollify `σ` with radius `√ε` (no effect when `ε = 0`).
    #[serde(default)]
    pub sigma_smoothing: bool,
    pub initial: InitialSpec,
    /// Mollifier radius applied to the initial data.
    #[serde(default)]
    pub initial_mollify: Option<f64>,
    #[serde(default)]
    pub initial_perturbation: Option<Perturbation>,
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_paths")]
    pub n_paths: usize,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    /// Exponent of the higher-integrability statistic `∫|q|^{2+α}`.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Threshold on `-min q` for the wave-breaking detector.
    #[serde(default = "default_breaking")]
    pub breaking_threshold: f64,
}

pub fn default_paths() -> usize {
    1
}
pub fn default_record_every() -> usize {
    1
}
pub fn default_alpha() -> f64 {
    0.5
}
pub fn default_breaking() -> f64 {
    50.0
}

impl SimConfig {
    /// A deterministic single-path configuration with every optional field
    /// at its default.
    pub fn new(n: usize, epsilon: f64, dt: f64, t_end: f64, sigma: SigmaSpec, initial: InitialSpec) -> SimConfig {
        SimConfig {
            n,
            epsilon,
            dt,
            t_end,
            sigma,
            sigma_smoothing: false,
            initial,
            initial_mollify: None,
            initial_perturbation: None,
            scheme: Scheme::default(),
            seed: 0,
            n_paths: default_paths(),
            record_every: default_record_every(),
            alpha: default_alpha(),
            breaking_threshold: default_breaking(),
        }
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.n).map_err(|e| Error::config("n", e.to_string()))
    }

    /// Number of steps; `t_end / dt` must be an integer up to round-off.
    pub fn n_steps(&self) -> Result<u64> {
        let r = self.t_end / self.dt;
        let n = r.round();
        if (r - n).abs() > 1e-9 * r.max(1.0) {
            return Err(Error::config(
                "dt",
                format!("t_end / dt = {r} is not an integer"),
            ));
        }
        Ok(n as u64)
    }

    pub fn smoothing_radius(&self) -> Option<f64> {
        (self.sigma_smoothing && self.epsilon > 0.0).then(|| self.epsilon.sqrt())
    }

    pub fn noise(&self) -> Result<NoiseCoef> {
        let grid = self.grid()?;
        NoiseCoef::from_spec(&self.sigma, grid, self.smoothing_radius()).map_err(|e| match e {
            Error::UnderResolved { .. } | Error::InvalidArgument(_) => {
                Error::config("sigma_smoothing", e.to_string())
            }
            other => other,
        })
    }

    pub fn initial_field(&self, path_index: u64) -> Result<Field> {
        path_initial_data(
            &self.initial,
            self.grid()?,
            self.initial_mollify,
            self.initial_perturbation,
            self.seed,
            path_index,
        )
    }

    /// Validates everything that can be checked without time stepping,
    /// including the step-size bound on the initial data of path 0.
    pub fn validate(&self) -> Result<()> {
        let grid = self.grid()?;
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::config(name, format!("must be positive and finite (got {v})")))
            }
        };
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(Error::config("epsilon", "must be non-negative"));
        }
        positive("dt", self.dt)?;
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(Error::config("t_end", "must be non-negative"));
        }
        if self.n_paths == 0 {
            return Err(Error::config("n_paths", "must be at least 1"));
        }
        if self.record_every == 0 {
            return Err(Error::config("record_every", "must be at least 1"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::config("alpha", "must lie in (0, 1)"));
        }
        positive("breaking_threshold", self.breaking_threshold)?;
        if let Some(r) = self.initial_mollify {
            positive("initial_mollify", r)?;
        }
        if let Some(p) = self.initial_perturbation {
            if !(p.amplitude.is_finite() && p.amplitude >= 0.0) {
                return Err(Error::config("initial_perturbation.amplitude", "must be non-negative"));
            }
            if 2 * p.modes as usize >= grid.n() {
                return Err(Error::config("initial_perturbation.modes", "exceeds the resolved band"));
            }
        }
        self.n_steps()?;
        self.initial.validate(grid)?;
        let noise = self.noise()?;
        if self.scheme == Scheme::Lawson4 && !noise.is_zero() {
            return Err(Error::config("scheme", "lawson4 is deterministic and requires sigma = zero"));
        }
        let u0 = self.initial_field(0).map_err(|e| match e {
            Error::UnderResolved { .. } => Error::config("initial_mollify", e.to_string()),
            other => other,
        })?;
        let bound = stability_bound(grid, &u0, &noise);
        if self.dt > bound.dt_max {
            return Err(Error::Stability {
                dt: self.dt,
                bound: bound.dt_max,
                reason: bound.reason(),
            });
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

/// The two step-size limits and which one binds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityBound {
    pub advective: f64,
    pub diffusive: f64,
    pub dt_max: f64,
}

impl StabilityBound {
    pub fn reason(&self) -> String {
        if self.advective <= self.diffusive {
            format!("advective limit {STABILITY_ADVECTIVE}·h/max|u| = {}", self.advective)
        } else {
            format!(
                "diffusive limit {STABILITY_DIFFUSIVE}·h²/(½ max|σ² - mean σ²|) = {}",
                self.diffusive
            )
        }
    }
}

/// `min(0.5 h / max|u|, 0.25 h² / (½ max|σ² - mean σ²|))`.
pub fn stability_bound(grid: Grid, u: &Field, noise: &NoiseCoef) -> StabilityBound {
    let h = grid.h();
    let umax = u.sup_norm();
    let advective = if umax > 0.0 {
        STABILITY_ADVECTIVE * h / umax
    } else {
        f64::INFINITY
    };
    let coef = 0.5 * noise.sigma_sq_oscillation();
    let diffusive = if coef > 0.0 {
        STABILITY_DIFFUSIVE * h * h / coef
    } else {
        f64::INFINITY
    };
    StabilityBound {
        advective,
        diffusive,
        dt_max: advective.min(diffusive),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn base() -> SimConfig {
        SimConfig::new(
            64,
            0.01,
            1e-3,
            0.1,
            SigmaSpec::Sin(1),
            InitialSpec::Peakon { c: 1.0, x0: PI },
        )
    }

    #[test]
    fn valid_base() {
        base().validate().unwrap();
        assert_eq!(base().n_steps().unwrap(), 100);
    }

    #[test]
    fn stability_violation_reports_bound() {
        let mut c = base();
        c.dt = 0.05;
        c.t_end = 0.1;
        match c.validate() {
            Err(Error::Stability { bound, .. }) => assert!(bound < 0.05),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn lawson_requires_zero_noise() {
        let mut c = base();
        c.scheme = Scheme::Lawson4;
        assert!(c.validate().is_err());
        c.sigma = SigmaSpec::Zero;
        c.validate().unwrap();
    }

    #[test]
    fn field_errors_name_the_field() {
        let mut c = base();
        c.t_end = 0.10005;
        let e = c.validate().unwrap_err().to_string();
        assert!(e.contains("`dt`"), "{e}");
        let mut c = base();
        c.n = 63;
        assert!(c.validate().unwrap_err().to_string().contains("`n`"));
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = base();
        assert_eq!(a.hash(), base().hash());
        let mut b = base();
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn json_round_trip() {
        let c = base();
        let text = serde_json::to_string(&c).unwrap();
        let back: SimConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, c);
        assert!(text.contains("\"sigma\":\"sin\""));
    }
}
