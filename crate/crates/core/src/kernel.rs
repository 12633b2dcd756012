//! Green's kernel of `1 - ∂ₓₓ` on the circle and the nonlocal pressure
//! `P = K * (u² + ½q²)`.
//!
//! The production path is spectral (`P̂_k = f̂_k / (1 + k²)`). [`KernelTable`]
//! is an independent physical-space path kept as an oracle.

use std::f64::consts::PI;

use crate::error::Result;
use crate::grid::{Field, Grid, Spectrum};

/// `K(x) = cosh(w - π) / (2 sinh π)` with `w` the representative of `x` in `[0, 2π)`.
pub fn green_kernel(x: f64) -> f64 {
    let w = x - 2.0 * PI * (x / (2.0 * PI)).floor();
    (w - PI).cosh() / (2.0 * PI.sinh())
}

/// `K` sampled on the nodes together with corrected quadrature weights.
///
/// `K` has a derivative jump of `-1` at `x = 0`, so the plain rectangle rule
/// `h Σ K(x_k) f(x_j - x_k)` is only second-order accurate. The weights add
/// the Euler–Maclaurin endpoint terms for the kink (through `h⁶`), with the
/// derivatives of the integrand at the kink taken by five-point stencils.
#[derive(Debug, Clone)]
pub struct KernelTable {
    grid: Grid,
    values: Field,
    weights: Field,
}

impl KernelTable {
    pub fn new(grid: Grid) -> KernelTable {
        let n = grid.n();
        let h = grid.h();
        let values = Field::from_fn(grid, green_kernel);
        let mut weights = values.values().to_vec();

        let (h2, h4, h6) = (h * h, h.powi(4), h.powi(6));
        let c0 = -h2 / 12.0 + h4 / 720.0 - h6 / 30240.0;
        let c2 = 3.0 * h4 / 720.0 - 10.0 * h6 / 30240.0;
        let c4 = -5.0 * h6 / 30240.0;
        let d2 = [-1.0, 16.0, -30.0, 16.0, -1.0];
        let d4 = [1.0, -4.0, 6.0, -4.0, 1.0];
        for (i, m) in (-2i64..=2).enumerate() {
            let mut c = c2 * d2[i] / (12.0 * h2) + c4 * d4[i] / h4;
            if m == 0 {
                c += c0;
            }
            weights[m.rem_euclid(n as i64) as usize] += c / h;
        }
        KernelTable {
            grid,
            values,
            weights: Field::from_raw(grid, weights),
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    /// Raw samples `K(x_j)`.
    pub fn values(&self) -> &Field {
        &self.values
    }

    /// Corrected quadrature weights (equal to `values` away from `x = 0`).
    pub fn weights(&self) -> &Field {
        &self.weights
    }

    /// `h Σ_j w_j`, the discrete mass of the kernel; one up to round-off.
    pub fn mass(&self) -> f64 {
        self.weights.integral()
    }

    /// Direct `O(n²)` physical-space convolution `h Σ_k w_k f(x_j - x_k)`.
    pub fn convolve_direct(&self, f: &Field) -> Result<Field> {
        self.grid.ensure_same(&f.grid())?;
        let n = self.grid.n();
        let h = self.grid.h();
        let w = self.weights.values();
        let fv = f.values();
        let out = (0..n)
            .map(|j| {
                let terms: Vec<f64> = (0..n).map(|k| w[k] * fv[(j + n - k) % n]).collect();
                h * crate::stats::pairwise_sum(&terms)
            })
            .collect();
        Ok(Field::from_raw(self.grid, out))
    }
}

/// Solves `(1 - ∂ₓₓ) P = f` spectrally.
pub fn helmholtz_solve(f: &Field) -> Result<Field> {
    f.check_finite("helmholtz source")?;
    Ok(Spectrum::of(f)
        .apply_real(|k| 1.0 / (1.0 + (k * k) as f64))
        .to_field())
}

/// `u² + ½q²`, the source of the pressure equation.
pub fn pressure_source(u: &Field, q: &Field) -> Result<Field> {
    u.zip_with(q, |a, b| a * a + 0.5 * b * b)
}

pub fn nonlocal_pressure(u: &Field, q: &Field) -> Result<Field> {
    helmholtz_solve(&pressure_source(u, q)?)
}

/// Oracle path: the same pressure by direct convolution with the kernel table.
pub fn nonlocal_pressure_direct(table: &KernelTable, u: &Field, q: &Field) -> Result<Field> {
    table.convolve_direct(&pressure_source(u, q)?)
}

/// `∂ₓP` with symbol `ik / (1 + k²)`.
pub fn pressure_gradient(u: &Field, q: &Field) -> Result<Field> {
    let src = pressure_source(u, q)?;
    src.check_finite("pressure source")?;
    Ok(Spectrum::of(&src)
        .derivative(1)
        .apply_real(|k| 1.0 / (1.0 + (k * k) as f64))
        .to_field())
}

/// Random trigonometric polynomial with modes `1..=kmax`, coefficients
/// `N(0,1)/k`, drawn from the initial-data stream of `(seed, sample)`.
pub fn random_band_limited(grid: Grid, kmax: usize, seed: u64, sample: u64) -> Field {
    let mut rng = crate::sde::brownian::initial_data_stream(seed, sample);
    let coef: Vec<(f64, f64)> = (1..=kmax)
        .map(|k| (rng.next_normal() / k as f64, rng.next_normal() / k as f64))
        .collect();
    Field::from_fn(grid, |x| {
        coef.iter()
            .enumerate()
            .map(|(i, (a, b))| {
                let k = (i + 1) as f64;
                a * (k * x).cos() + b * (k * x).sin()
            })
            .sum()
    })
}

/// One row of the dual-path comparison.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DualPathRow {
    pub sample: u64,
    pub sup_norm: f64,
    pub max_abs_diff: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DualPathReport {
    pub n: usize,
    pub kmax: usize,
    pub mass: f64,
    pub rows: Vec<DualPathRow>,
    pub max_abs_diff: f64,
}

/// Compares [`helmholtz_solve`] with the direct kernel convolution on
/// `samples` random band-limited fields. The table's kink correction uses
/// finite differences, so agreement degrades like `(kmax·h)⁸`.
pub fn dual_path_check(grid: Grid, kmax: usize, samples: usize, seed: u64) -> Result<DualPathReport> {
    let table = KernelTable::new(grid);
    let rows = (0..samples as u64)
        .map(|s| {
            let f = random_band_limited(grid, kmax, seed, s);
            let diff = helmholtz_solve(&f)?.sub(&table.convolve_direct(&f)?)?;
            Ok(DualPathRow {
                sample: s,
                sup_norm: f.sup_norm(),
                max_abs_diff: diff.sup_norm(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DualPathReport {
        n: grid.n(),
        kmax,
        mass: table.mass(),
        max_abs_diff: rows.iter().fold(0.0, |a, r| a.max(r.max_abs_diff)),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::derivative;

    #[test]
    fn closed_form_values() {
        assert!((green_kernel(PI) - 0.043_294_768_765).abs() < 1e-11);
        assert!((green_kernel(0.0) - 0.5 / PI.tanh()).abs() < 1e-15);
        assert!((green_kernel(2.0 * PI) - green_kernel(0.0)).abs() < 1e-14);
        assert!((green_kernel(-1.0) - green_kernel(1.0)).abs() < 1e-14);
    }

    #[test]
    fn table_mass_and_symmetry() {
        let t = KernelTable::new(Grid::new(256).unwrap());
        assert!((t.mass() - 1.0).abs() < 1e-10, "{}", t.mass() - 1.0);
        let v = t.values().values();
        assert!(v.iter().all(|&k| k > 0.0));
        for j in 1..256 {
            assert!((v[j] - v[256 - j]).abs() < 1e-15);
        }
    }

    #[test]
    fn helmholtz_modes() {
        let g = Grid::new(32).unwrap();
        let p = helmholtz_solve(&Field::from_fn(g, f64::cos)).unwrap();
        assert!(p.sub(&Field::from_fn(g, |x| x.cos() / 2.0)).unwrap().sup_norm() < 1e-15);
        let p = helmholtz_solve(&Field::from_fn(g, |x| (3.0 * x).cos())).unwrap();
        let e = Field::from_fn(g, |x| (3.0 * x).cos() / 10.0);
        assert!(p.sub(&e).unwrap().sup_norm() < 1e-15);
        let p = helmholtz_solve(&Field::constant(g, 4.0)).unwrap();
        assert!(p.sub(&Field::constant(g, 4.0)).unwrap().sup_norm() < 1e-14);
    }

    #[test]
    fn helmholtz_inverts_operator() {
        let g = Grid::new(64).unwrap();
        let f = Field::from_fn(g, |x| (x.sin()).exp());
        let p = helmholtz_solve(&f).unwrap();
        let back = p.sub(&derivative(&p, 2).unwrap()).unwrap();
        assert!(back.sub(&f).unwrap().sup_norm() <= 1e-10 * f.sup_norm());
    }

    #[test]
    fn pressure_of_sine() {
        let g = Grid::new(64).unwrap();
        let u = Field::from_fn(g, f64::sin);
        let q = Field::from_fn(g, f64::cos);
        let p = nonlocal_pressure(&u, &q).unwrap();
        let e = Field::from_fn(g, |x| 0.75 - (2.0 * x).cos() / 20.0);
        assert!(p.sub(&e).unwrap().sup_norm() < 1e-14);
        let dp = pressure_gradient(&u, &q).unwrap();
        let e = Field::from_fn(g, |x| (2.0 * x).sin() / 10.0);
        assert!(dp.sub(&e).unwrap().sup_norm() < 1e-14);
    }

    #[test]
    fn constant_state_pressure() {
        let g = Grid::new(16).unwrap();
        let u = Field::constant(g, 1.5);
        let q = Field::zeros(g);
        let p = nonlocal_pressure(&u, &q).unwrap();
        assert!(p.sub(&Field::constant(g, 2.25)).unwrap().sup_norm() < 1e-14);
        assert!(pressure_gradient(&u, &q).unwrap().sup_norm() < 1e-14);
    }

    #[test]
    fn direct_path_agrees_with_spectral() {
        let g = Grid::new(128).unwrap();
        let t = KernelTable::new(g);
        let u = Field::from_fn(g, |x| x.sin() + 0.3 * (4.0 * x).cos());
        let q = derivative(&u, 1).unwrap();
        let a = nonlocal_pressure(&u, &q).unwrap();
        let b = nonlocal_pressure_direct(&t, &u, &q).unwrap();
        assert!(a.sub(&b).unwrap().sup_norm() < 1e-8);
    }
}
