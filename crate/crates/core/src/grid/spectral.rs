use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{Field, Grid};
use crate::error::Result;

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

fn plans(n: usize) -> Arc<Plans> {
    static CACHE: OnceLock<RwLock<HashMap<usize, Arc<Plans>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| RwLock::new(HashMap::new()));
    if let Some(p) = cache.read().unwrap().get(&n) {
        return Arc::clone(p);
    }
    let mut planner = FftPlanner::new();
    let p = Arc::new(Plans {
        forward: planner.plan_fft_forward(n),
        inverse: planner.plan_fft_inverse(n),
    });
    Arc::clone(cache.write().unwrap().entry(n).or_insert(p))
}

/// Unnormalized DFT coefficients `F_k = Σ_j f_j e^{-i k x_j}` of a field.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn of(field: &Field) -> Spectrum {
        let mut coeffs: Vec<Complex64> = field
            .values()
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        plans(field.grid().n()).forward.process(&mut coeffs);
        Spectrum {
            grid: field.grid(),
            coeffs,
        }
    }

    pub(crate) fn from_coeffs(grid: Grid, coeffs: Vec<Complex64>) -> Spectrum {
        debug_assert_eq!(coeffs.len(), grid.n());
        Spectrum { grid, coeffs }
    }

    pub fn zeros(grid: Grid) -> Spectrum {
        Spectrum {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); grid.n()],
        }
    }

    #[inline]
    pub fn grid(&self) -> Grid {
        self.grid
    }

    #[inline]
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Inverse transform; the imaginary part (round-off only) is dropped.
    pub fn to_field(&self) -> Field {
        let n = self.grid.n();
        let mut buf = self.coeffs.clone();
        plans(n).inverse.process(&mut buf);
        let scale = 1.0 / n as f64;
        Field::from_raw(self.grid, buf.iter().map(|c| c.re * scale).collect())
    }

    /// Multiplies every coefficient by `symbol(k)` for its signed wavenumber.
    pub fn apply(&self, symbol: impl Fn(i64) -> Complex64) -> Spectrum {
        let g = self.grid;
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| c * symbol(g.wavenumber(j)))
            .collect();
        Spectrum { grid: g, coeffs }
    }

    /// Multiplies by the real symbol `m(k)`.
    pub fn apply_real(&self, symbol: impl Fn(i64) -> f64) -> Spectrum {
        self.apply(|k| Complex64::new(symbol(k), 0.0))
    }

    /// Spectrum of the `order`-th derivative. Odd derivatives annihilate the
    /// Nyquist mode, which is not resolvable as a sine on the grid.
    pub fn derivative(&self, order: u32) -> Spectrum {
        let nyquist = (self.grid.n() / 2) as i64;
        self.apply(|k| {
            if order % 2 == 1 && k == nyquist {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, k as f64).powu(order)
            }
        })
    }

    /// Zeroes every mode with `|k| > kmax`.
    pub fn truncate(&self, kmax: usize) -> Spectrum {
        let kmax = kmax as i64;
        self.apply_real(|k| if k.abs() > kmax { 0.0 } else { 1.0 })
    }

    pub fn dealias(&self) -> Spectrum {
        self.truncate(self.grid.dealias_cutoff())
    }

    /// `∫ f² dx` evaluated in spectral space (Parseval).
    pub fn l2_norm_sq(&self) -> f64 {
        let n = self.grid.n() as f64;
        self.grid.h() / n * self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()
    }

    /// Normalized Fourier coefficient `F_k / n` of the mode `e^{ikx}`.
    pub fn mode(&self, k: i64) -> Complex64 {
        let n = self.grid.n() as i64;
        self.coeffs[k.rem_euclid(n) as usize] / n as f64
    }

    pub fn add(&self, other: &Spectrum) -> Result<Spectrum> {
        self.grid.ensure_same(&other.grid)?;
        Ok(Spectrum {
            grid: self.grid,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn scale(&self, c: f64) -> Spectrum {
        Spectrum {
            grid: self.grid,
            coeffs: self.coeffs.iter().map(|z| z * c).collect(),
        }
    }
}

/// Fourier-spectral derivative of order `order`.
pub fn derivative(f: &Field, order: u32) -> Result<Field> {
    f.check_finite("derivative input")?;
    Ok(Spectrum::of(f).derivative(order).to_field())
}

/// Periodic convolution `(f*g)(x_j) = h Σ_k f(x_k) g(x_j - x_k)` via FFT.
pub fn convolve(f: &Field, g: &Field) -> Result<Field> {
    f.grid().ensure_same(&g.grid())?;
    let grid = f.grid();
    let a = Spectrum::of(f);
    let b = Spectrum::of(g);
    let h = grid.h();
    let coeffs = a
        .coeffs
        .iter()
        .zip(&b.coeffs)
        .map(|(x, y)| x * y * h)
        .collect();
    Ok(Spectrum::from_coeffs(grid, coeffs).to_field())
}

/// 2/3-rule projection: removes modes that quadratic products alias onto.
pub fn dealias(f: &Field) -> Field {
    Spectrum::of(f).dealias().to_field()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid(n: usize) -> Grid {
        Grid::new(n).unwrap()
    }

    #[test]
    fn derivative_of_sin_is_cos() {
        let g = grid(64);
        let d = derivative(&Field::from_fn(g, f64::sin), 1).unwrap();
        let expect = Field::from_fn(g, f64::cos);
        assert!(d.sub(&expect).unwrap().sup_norm() < 1e-13);
    }

    #[test]
    fn derivative_of_constant_vanishes() {
        let g = grid(32);
        let d = derivative(&Field::constant(g, 3.7), 1).unwrap();
        assert!(d.sup_norm() < 1e-13);
    }

    #[test]
    fn second_derivative_eigenfunction() {
        let g = grid(32);
        let d = derivative(&Field::from_fn(g, |x| (2.0 * x).cos()), 2).unwrap();
        let expect = Field::from_fn(g, |x| -4.0 * (2.0 * x).cos());
        assert!(d.sub(&expect).unwrap().sup_norm() < 1e-12);
    }

    #[test]
    fn every_resolved_mode_is_an_eigenfunction() {
        let g = grid(32);
        for k in 1..16i64 {
            for order in 1..=2u32 {
                let c = Field::from_fn(g, |x| (k as f64 * x).cos());
                let s = Field::from_fn(g, |x| (k as f64 * x).sin());
                let dc = derivative(&c, order).unwrap();
                let ds = derivative(&s, order).unwrap();
                let kf = k as f64;
                // (ik)^order e^{ikx}: real and imaginary parts separately.
                let (ec, es) = if order == 1 {
                    (s.scale(-kf), c.scale(kf))
                } else {
                    (c.scale(-kf * kf), s.scale(-kf * kf))
                };
                let scale = kf.powi(order as i32);
                assert!(dc.sub(&ec).unwrap().sup_norm() <= 1e-12 * scale, "k={k}");
                assert!(ds.sub(&es).unwrap().sup_norm() <= 1e-12 * scale, "k={k}");
            }
        }
    }

    #[test]
    fn parseval() {
        let g = grid(128);
        let f = Field::from_fn(g, |x| (x.sin() * 3.0).exp() + (5.0 * x).cos());
        let phys = f.l2_norm_sq();
        let spec = Spectrum::of(&f).l2_norm_sq();
        assert!((phys - spec).abs() <= 1e-10 * phys);
    }

    #[test]
    fn convolution_with_discrete_delta_is_identity() {
        let g = grid(64);
        let f = Field::from_fn(g, |x| (x.cos() + 0.3 * (3.0 * x).sin()).exp());
        let mut d = vec![0.0; 64];
        d[0] = 1.0 / g.h();
        let delta = Field::new(g, d).unwrap();
        let c = convolve(&f, &delta).unwrap();
        assert!(c.sub(&f).unwrap().sup_norm() < 1e-12);
    }

    #[test]
    fn cos_convolved_with_cos() {
        // Mode ±1 coefficients are 1/2; product of transforms gives π cos x.
        let g = grid(64);
        let c = convolve(&Field::from_fn(g, f64::cos), &Field::from_fn(g, f64::cos)).unwrap();
        let expect = Field::from_fn(g, |x| PI * x.cos());
        assert!(c.sub(&expect).unwrap().sup_norm() < 1e-12);
    }

    #[test]
    fn dealias_keeps_low_modes_only() {
        let g = grid(48);
        let f = Field::from_fn(g, |x| x.sin() + (20.0 * x).cos());
        let d = dealias(&f);
        assert!(d.sub(&Field::from_fn(g, f64::sin)).unwrap().sup_norm() < 1e-13);
    }
}
