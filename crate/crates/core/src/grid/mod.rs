//! Uniform periodic discretization of the circle `[0, 2π)`.
//!
//! A [`Field`] is a real function sampled on the nodes `x_j = j h`. All
//! spectral machinery (derivatives, periodic convolution, dealiasing) lives
//! in [`spectral`]; the Friedrichs mollifier in [`mollifier`]; the binary
//! snapshot format in [`snapshot`].

mod mollifier;
pub mod snapshot;
mod spectral;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use mollifier::{mollify, Mollifier};
pub use spectral::{convolve, dealias, derivative, Spectrum};

/// Smallest admissible number of nodes.
pub const MIN_NODES: usize = 8;

/// Uniform grid on the circle `R / 2πZ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct Grid {
    n: usize,
}

impl Grid {
    pub fn new(n: usize) -> Result<Self> {
        if !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!("n must be even (got {n})")));
        }
        if n < MIN_NODES {
            return Err(Error::InvalidGrid(format!(
                "n must be at least {MIN_NODES} (got {n})"
            )));
        }
        Ok(Self { n })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Node spacing `2π / n`.
    #[inline]
    pub fn h(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    #[inline]
    pub fn node(&self, j: usize) -> f64 {
        j as f64 * self.h()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.node(j)).collect()
    }

    /// Signed wavenumber stored at DFT index `j` (`n/2` is reported positive).
    #[inline]
    pub fn wavenumber(&self, j: usize) -> i64 {
        if j <= self.n / 2 {
            j as i64
        } else {
            j as i64 - self.n as i64
        }
    }

    /// Largest wavenumber kept by the 2/3 dealiasing rule (`3 k_max < n`).
    #[inline]
    pub fn dealias_cutoff(&self) -> usize {
        (self.n - 1) / 3
    }

    pub(crate) fn ensure_same(&self, other: &Grid) -> Result<()> {
        if self.n == other.n {
            Ok(())
        } else {
            Err(Error::GridMismatch {
                left: self.n,
                right: other.n,
            })
        }
    }
}

impl TryFrom<usize> for Grid {
    type Error = Error;

    fn try_from(n: usize) -> Result<Self> {
        Grid::new(n)
    }
}

impl From<Grid> for usize {
    fn from(g: Grid) -> usize {
        g.n
    }
}

/// Convenience constructor mirroring [`Grid::new`].
pub fn make_grid(n: usize) -> Result<Grid> {
    Grid::new(n)
}

/// Real-valued function sampled on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    /// Wraps sampled values, rejecting wrong lengths and non-finite entries.
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::InvalidArgument(format!(
                "field has {} values, grid has {} nodes",
                values.len(),
                grid.n()
            )));
        }
        let field = Self { grid, values };
        field.check_finite("field construction")?;
        Ok(field)
    }

    /// Internal constructor for values produced by already-validated arithmetic.
    #[inline]
    pub(crate) fn from_raw(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.n());
        Self { grid, values }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        let values = (0..grid.n()).map(|j| f(grid.node(j))).collect();
        Self { grid, values }
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.n()],
        }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    #[inline]
    pub fn grid(&self) -> Grid {
        self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn check_finite(&self, context: &str) -> Result<()> {
        if self.values.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite(context.to_string()))
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Rectangle (= trapezoidal) rule `h Σ f_j`.
    pub fn integral(&self) -> f64 {
        self.grid.h() * crate::stats::pairwise_sum(&self.values)
    }

    pub fn mean(&self) -> f64 {
        crate::stats::pairwise_sum(&self.values) / self.grid.n() as f64
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `∫ f² dx`.
    pub fn l2_norm_sq(&self) -> f64 {
        self.map(|v| v * v).integral()
    }

    pub fn l1_norm(&self) -> f64 {
        self.map(f64::abs).integral()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field::from_raw(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        self.grid.ensure_same(&other.grid)?;
        Ok(Field::from_raw(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    /// `∫ f g dx`.
    pub fn dot(&self, other: &Field) -> Result<f64> {
        Ok(self.zip_with(other, |a, b| a * b)?.integral())
    }

    pub fn add(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn scale(&self, c: f64) -> Field {
        self.map(|v| c * v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_spacing() {
        let g = Grid::new(8).unwrap();
        assert!((g.h() - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
        let g = Grid::new(256).unwrap();
        assert_eq!(g.h(), 2.0 * PI / 256.0);
    }

    #[test]
    fn odd_or_small_grids_rejected() {
        let err = Grid::new(7).unwrap_err().to_string();
        assert!(err.contains("n must be even"), "{err}");
        assert!(Grid::new(6).is_err());
        assert!(Grid::new(0).is_err());
    }

    #[test]
    fn nodes_increasing_and_closed() {
        let g = Grid::new(16).unwrap();
        let x = g.nodes();
        assert_eq!(x[0], 0.0);
        assert!(x.windows(2).all(|w| w[1] > w[0]));
        assert!((x[15] - (2.0 * PI - g.h())).abs() < 1e-14);
    }

    #[test]
    fn wavenumbers_are_signed() {
        let g = Grid::new(8).unwrap();
        let ks: Vec<i64> = (0..8).map(|j| g.wavenumber(j)).collect();
        assert_eq!(ks, vec![0, 1, 2, 3, 4, -3, -2, -1]);
        assert_eq!(g.dealias_cutoff(), 2);
    }

    #[test]
    fn field_rejects_nan_and_bad_length() {
        let g = Grid::new(8).unwrap();
        assert!(Field::new(g, vec![0.0; 7]).is_err());
        let mut v = vec![0.0; 8];
        v[3] = f64::NAN;
        assert!(matches!(Field::new(g, v), Err(Error::NonFinite(_))));
    }

    #[test]
    fn quadrature_of_cos_squared() {
        let g = Grid::new(32).unwrap();
        let f = Field::from_fn(g, f64::cos);
        assert!((f.l2_norm_sq() - PI).abs() < 1e-13);
        assert!(f.integral().abs() < 1e-13);
    }

    #[test]
    fn mismatched_grids_error() {
        let a = Field::zeros(Grid::new(8).unwrap());
        let b = Field::zeros(Grid::new(16).unwrap());
        assert!(matches!(a.add(&b), Err(Error::GridMismatch { .. })));
    }
}
