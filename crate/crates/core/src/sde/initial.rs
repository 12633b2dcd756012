use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::brownian;
use super::noise::load_field;
use crate::error::{Error, Result};
use crate::grid::{mollify, Field, Grid};
use crate::kernel::green_kernel;

/// Deterministic initial data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    /// `mean + Σ_k cos[k]·cos(kx) + sin[k]·sin(kx)`.
    Fourier {
        #[serde(default)]
        mean: f64,
        #[serde(default)]
        cos: BTreeMap<u32, f64>,
        #[serde(default)]
        sin: BTreeMap<u32, f64>,
    },
    /// `c·K(x - x0)/K(0)`, a periodic peakon of height `c`.
    Peakon { c: f64, x0: f64 },
    /// Peakon of height `c` at `x1` plus antipeakon of height `-c` at `x2`.
    PeakonAntipeakon { c: f64, x1: f64, x2: f64 },
    /// Snapshot file or JSON array of node values.
    File(PathBuf),
}

impl InitialSpec {
    pub fn sine() -> InitialSpec {
        InitialSpec::Fourier {
            mean: 0.0,
            cos: BTreeMap::new(),
            sin: BTreeMap::from([(1, 1.0)]),
        }
    }

    pub fn validate(&self, grid: Grid) -> Result<()> {
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(format!("initial.{name}"), "must be finite"))
            }
        };
        match self {
            InitialSpec::Fourier { mean, cos, sin } => {
                finite("mean", *mean)?;
                for (k, a) in cos.iter().chain(sin.iter()) {
                    finite("fourier coefficient", *a)?;
                    if 2 * *k as usize >= grid.n() {
                        return Err(Error::config(
                            "initial.fourier",
                            format!("mode {k} is not resolved on {} nodes", grid.n()),
                        ));
                    }
                }
                Ok(())
            }
            InitialSpec::Peakon { c, x0 } => {
                finite("c", *c)?;
                finite("x0", *x0)
            }
            InitialSpec::PeakonAntipeakon { c, x1, x2 } => {
                finite("c", *c)?;
                finite("x1", *x1)?;
                finite("x2", *x2)
            }
            InitialSpec::File(_) => Ok(()),
        }
    }
}

/// Random perturbation `amplitude · Σ_{k≤modes} (a_k cos kx + b_k sin kx)/k²`
/// with independent standard normal `a_k, b_k` drawn per path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Perturbation {
    pub amplitude: f64,
    pub modes: u32,
}

fn peakon(c: f64, x0: f64) -> impl Fn(f64) -> f64 {
    let k0 = green_kernel(0.0);
    move |x| c * green_kernel(x - x0) / k0
}

pub fn initial_data(spec: &InitialSpec, grid: Grid) -> Result<Field> {
    spec.validate(grid)?;
    Ok(match spec {
        InitialSpec::Fourier { mean, cos, sin } => Field::from_fn(grid, |x| {
            mean + cos.iter().map(|(k, a)| a * (*k as f64 * x).cos()).sum::<f64>()
                + sin.iter().map(|(k, b)| b * (*k as f64 * x).sin()).sum::<f64>()
        }),
        InitialSpec::Peakon { c, x0 } => Field::from_fn(grid, peakon(*c, *x0)),
        InitialSpec::PeakonAntipeakon { c, x1, x2 } => {
            let (p, a) = (peakon(*c, *x1), peakon(-*c, *x2));
            Field::from_fn(grid, |x| p(x) + a(x))
        }
        InitialSpec::File(path) => load_field(path, grid)?,
    })
}

/// Initial data for one path: the deterministic part, optionally mollified,
/// plus the path's random perturbation.
pub fn path_initial_data(
    spec: &InitialSpec,
    grid: Grid,
    smoothing: Option<f64>,
    perturbation: Option<Perturbation>,
    seed: u64,
    path_index: u64,
) -> Result<Field> {
    let mut u = initial_data(spec, grid)?;
    if let Some(r) = smoothing {
        u = mollify(&u, r)?;
    }
    if let Some(p) = perturbation {
        let mut z = brownian::initial_data_stream(seed, path_index);
        let coeffs: Vec<(f64, f64)> = (1..=p.modes).map(|_| (z.next_normal(), z.next_normal())).collect();
        let noise = Field::from_fn(grid, |x| {
            coeffs
                .iter()
                .enumerate()
                .map(|(i, (a, b))| {
                    let k = (i + 1) as f64;
                    (a * (k * x).cos() + b * (k * x).sin()) / (k * k)
                })
                .sum::<f64>()
        });
        u = u.add(&noise.scale(p.amplitude))?;
    }
    u.check_finite("initial data")?;
    Ok(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::derivative;
    use std::f64::consts::PI;

    #[test]
    fn peakon_normalization() {
        let g = Grid::new(64).unwrap();
        let u = initial_data(&InitialSpec::Peakon { c: 1.0, x0: PI }, g).unwrap();
        assert!((u.values()[32] - 1.0).abs() < 1e-15);
        assert!(u.max() <= 1.0 + 1e-15);
    }

    #[test]
    fn peakon_antipeakon_has_zero_mean_momentum() {
        let g = Grid::new(256).unwrap();
        let spec = InitialSpec::PeakonAntipeakon {
            c: 1.0,
            x1: PI / 2.0,
            x2: 1.5 * PI,
        };
        let u = initial_data(&spec, g).unwrap();
        let m = u.sub(&derivative(&u, 2).unwrap()).unwrap();
        assert!(m.integral().abs() < 1e-12);
    }

    #[test]
    fn fourier_sine() {
        let g = Grid::new(16).unwrap();
        let u = initial_data(&InitialSpec::sine(), g).unwrap();
        assert!(u.sub(&Field::from_fn(g, f64::sin)).unwrap().sup_norm() < 1e-15);
        let json = r#"{"fourier":{"sin":{"1":1.0}}}"#;
        let spec: InitialSpec = serde_json::from_str(json).unwrap();
        assert_eq!(spec, InitialSpec::sine());
    }

    #[test]
    fn unresolved_mode_rejected() {
        let g = Grid::new(16).unwrap();
        let spec = InitialSpec::Fourier {
            mean: 0.0,
            cos: BTreeMap::from([(8, 1.0)]),
            sin: BTreeMap::new(),
        };
        assert!(initial_data(&spec, g).is_err());
    }

    #[test]
    fn perturbation_is_per_path() {
        let g = Grid::new(32).unwrap();
        let p = Some(Perturbation {
            amplitude: 0.1,
            modes: 3,
        });
        let a = path_initial_data(&InitialSpec::sine(), g, None, p, 7, 0).unwrap();
        let b = path_initial_data(&InitialSpec::sine(), g, None, p, 7, 1).unwrap();
        let a2 = path_initial_data(&InitialSpec::sine(), g, None, p, 7, 0).unwrap();
        assert_eq!(a, a2);
        assert_ne!(a, b);
    }
}
