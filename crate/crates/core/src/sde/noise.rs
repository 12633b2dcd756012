use std::f64::consts::PI;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{derivative, mollify, snapshot, Field, Grid};

/// Named noise-coefficient presets, written as `zero`, `const:c`, `sin`,
/// `sin:k`, `bump:center,width` or `file:PATH`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum SigmaSpec {
    Zero,
    Const(f64),
    Sin(u32),
    Bump { center: f64, width: f64 },
    File(PathBuf),
}

impl FromStr for SigmaSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<SigmaSpec> {
        let bad = |msg: &str| Error::config("sigma", format!("{msg} in {s:?}"));
        let num = |t: &str| -> Result<f64> {
            t.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| bad("expected a finite number"))
        };
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h.trim(), Some(a)),
            None => (s.trim(), None),
        };
        match (head, arg) {
            ("zero", None) => Ok(SigmaSpec::Zero),
            ("const", Some(c)) => Ok(SigmaSpec::Const(num(c)?)),
            ("sin", None) => Ok(SigmaSpec::Sin(1)),
            ("sin", Some(k)) => match k.trim().parse::<u32>() {
                Ok(k) if k >= 1 => Ok(SigmaSpec::Sin(k)),
                _ => Err(bad("sin:k needs a positive integer k")),
            },
            ("bump", Some(args)) => {
                let (c, w) = args
                    .split_once(',')
                    .ok_or_else(|| bad("bump needs center,width"))?;
                let (center, width) = (num(c)?, num(w)?);
                if !(width > 0.0 && width <= PI) {
                    return Err(bad("bump width must lie in (0, π]"));
                }
                Ok(SigmaSpec::Bump { center, width })
            }
            ("file", Some(p)) if !p.trim().is_empty() => Ok(SigmaSpec::File(p.trim().into())),
            _ => Err(bad("unknown sigma preset")),
        }
    }
}

impl TryFrom<String> for SigmaSpec {
    type Error = Error;
    fn try_from(s: String) -> Result<SigmaSpec> {
        s.parse()
    }
}

impl From<SigmaSpec> for String {
    fn from(s: SigmaSpec) -> String {
        s.to_string()
    }
}

impl fmt::Display for SigmaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SigmaSpec::Zero => write!(f, "zero"),
            SigmaSpec::Const(c) => write!(f, "const:{c}"),
            SigmaSpec::Sin(1) => write!(f, "sin"),
            SigmaSpec::Sin(k) => write!(f, "sin:{k}"),
            SigmaSpec::Bump { center, width } => write!(f, "bump:{center},{width}"),
            SigmaSpec::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

/// Smooth compactly supported bump with peak value one.
fn bump(x: f64, center: f64, width: f64) -> f64 {
    let d = (x - center).rem_euclid(2.0 * PI);
    let d = d.min(2.0 * PI - d);
    let s = d / width;
    if s < 1.0 {
        (1.0 - 1.0 / (1.0 - s * s)).exp()
    } else {
        0.0
    }
}

/// Reads a field from a snapshot file or a JSON array of node values.
pub fn load_field(path: &std::path::Path, grid: Grid) -> Result<Field> {
    let bytes = std::fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let field = if bytes.starts_with(snapshot::MAGIC) {
        snapshot::decode(&bytes)?.0
    } else {
        let values: Vec<f64> = serde_json::from_slice(&bytes)
            .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        Field::new(grid, values)?
    };
    grid.ensure_same(&field.grid())?;
    Ok(field)
}

impl SigmaSpec {
    pub fn sample(&self, grid: Grid) -> Result<Field> {
        Ok(match *self {
            SigmaSpec::Zero => Field::zeros(grid),
            SigmaSpec::Const(c) => Field::constant(grid, c),
            SigmaSpec::Sin(k) => Field::from_fn(grid, |x| (k as f64 * x).sin()),
            SigmaSpec::Bump { center, width } => Field::from_fn(grid, |x| bump(x, center, width)),
            SigmaSpec::File(ref p) => load_field(p, grid)?,
        })
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, SigmaSpec::Zero) || matches!(self, SigmaSpec::Const(c) if *c == 0.0)
    }
}

/// Noise coefficient `σ` with its spectral derivatives.
#[derive(Debug, Clone)]
pub struct NoiseCoef {
    sigma: Field,
    dsigma: Field,
    d2sigma: Field,
    smoothing: Option<f64>,
    sigma_sq_mean: f64,
    w2inf: f64,
}

impl NoiseCoef {
    /// Builds `σ` (optionally mollified with radius `smoothing`) and
    /// regenerates its derivatives.
    pub fn new(sigma: Field, smoothing: Option<f64>) -> Result<NoiseCoef> {
        sigma.check_finite("sigma")?;
        let sigma = match smoothing {
            Some(r) => mollify(&sigma, r)?,
            None => sigma,
        };
        let (dsigma, d2sigma) = if sigma.values().iter().all(|&s| s == sigma.values()[0]) {
            (Field::zeros(sigma.grid()), Field::zeros(sigma.grid()))
        } else {
            (derivative(&sigma, 1)?, derivative(&sigma, 2)?)
        };
        let sigma_sq_mean = sigma.map(|s| s * s).mean();
        let w2inf = sigma.sup_norm().max(dsigma.sup_norm()).max(d2sigma.sup_norm());
        Ok(NoiseCoef {
            sigma,
            dsigma,
            d2sigma,
            smoothing,
            sigma_sq_mean,
            w2inf,
        })
    }

    pub fn from_spec(spec: &SigmaSpec, grid: Grid, smoothing: Option<f64>) -> Result<NoiseCoef> {
        NoiseCoef::new(spec.sample(grid)?, smoothing)
    }

    pub fn zero(grid: Grid) -> NoiseCoef {
        NoiseCoef::new(Field::zeros(grid), None).expect("zero field is finite")
    }

    pub fn grid(&self) -> Grid {
        self.sigma.grid()
    }

    pub fn sigma(&self) -> &Field {
        &self.sigma
    }

    pub fn dsigma(&self) -> &Field {
        &self.dsigma
    }

    pub fn d2sigma(&self) -> &Field {
        &self.d2sigma
    }

    pub fn smoothing(&self) -> Option<f64> {
        self.smoothing
    }

    /// Spatial mean of `σ²`.
    pub fn sigma_sq_mean(&self) -> f64 {
        self.sigma_sq_mean
    }

    /// `max(‖σ‖∞, ‖σ'‖∞, ‖σ''‖∞)` on the grid.
    pub fn w2inf_norm(&self) -> f64 {
        self.w2inf
    }

    pub fn is_zero(&self) -> bool {
        self.sigma.sup_norm() == 0.0
    }

    /// True when `σ' ≡ 0` on the grid up to round-off.
    pub fn is_constant(&self) -> bool {
        self.dsigma.sup_norm() <= 1e-13 * self.sigma.sup_norm().max(1.0)
    }

    /// `max |σ² - mean(σ²)|`, the variable part of the second-order coefficient.
    pub fn sigma_sq_oscillation(&self) -> f64 {
        let m = self.sigma_sq_mean;
        self.sigma.values().iter().fold(0.0, |a, s| a.max((s * s - m).abs()))
    }

    /// `(σ²)_x = 2σσ'`.
    pub fn sigma_sq_x(&self) -> Field {
        self.sigma
            .zip_with(&self.dsigma, |s, d| 2.0 * s * d)
            .expect("same grid")
    }

    /// `(σ²)_xx = 2σ'² + 2σσ''`.
    pub fn sigma_sq_xx(&self) -> Field {
        let v = self
            .sigma
            .values()
            .iter()
            .zip(self.dsigma.values())
            .zip(self.d2sigma.values())
            .map(|((s, d), dd)| 2.0 * d * d + 2.0 * s * dd)
            .collect();
        Field::new(self.grid(), v).expect("finite")
    }
}
