//! One-step maps for `du = [-u u_x - P_x + ½σ(σu_x)_x + εu_xx] dt - σu_x dW`.
//!
//! The operator `(ε + ½ mean(σ²)) ∂ₓₓ` is integrated exactly in Fourier
//! space (integrating factor `E = exp(-(ε + ½ mean σ²) k² dt)`); the
//! remaining drift and the noise are explicit. Every product is projected
//! onto `|k| ≤ (n-1)/3`, so states stay in that band.

use num_complex::Complex64;

use super::config::{Scheme, BLOWUP_GRADIENT, STABILITY_ADVECTIVE};
use super::noise::NoiseCoef;
use crate::error::{Error, Result};
use crate::grid::{Field, Grid, Spectrum};

type C = Complex64;

/// `(t, u, q = u_x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub t: f64,
    pub u: Field,
    pub q: Field,
}

impl State {
    pub fn new(t: f64, u: Field) -> Result<State> {
        u.check_finite("state")?;
        let q = Spectrum::of(&u).derivative(1).to_field();
        Ok(State { t, u, q })
    }

    fn from_spectrum(t: f64, uh: &Spectrum) -> State {
        State {
            t,
            u: uh.to_field(),
            q: uh.derivative(1).to_field(),
        }
    }

    pub fn grid(&self) -> Grid {
        self.u.grid()
    }

    /// `∫ u² + q² dx`.
    pub fn h1_energy(&self) -> f64 {
        self.u.l2_norm_sq() + self.q.l2_norm_sq()
    }
}

/// Precomputed symbols and factors for a fixed `(grid, ε, σ, dt, scheme)`.
#[derive(Debug, Clone)]
pub struct Stepper {
    grid: Grid,
    epsilon: f64,
    dt: f64,
    scheme: Scheme,
    noise: NoiseCoef,
    linear_only: bool,
    ik: Vec<C>,
    k2: Vec<f64>,
    inv_helm: Vec<f64>,
    keep: Vec<f64>,
    decay: Vec<f64>,
    decay_half: Vec<f64>,
}

/// Explicit terms evaluated at one state.
struct Eval {
    u: Field,
    ux: Field,
    /// Explicit drift (total drift minus the exactly integrated part).
    n: Vec<C>,
    /// Noise coefficient `-P(σ u_x)`.
    g: Vec<C>,
    /// `G(G u) = P(σ ∂ₓ P(σ u_x))`.
    g2: Vec<C>,
}

impl Stepper {
    pub fn new(grid: Grid, epsilon: f64, noise: NoiseCoef, scheme: Scheme, dt: f64) -> Result<Stepper> {
        grid.ensure_same(&noise.grid())?;
        let kc = grid.dealias_cutoff() as i64;
        let nyq = (grid.n() / 2) as i64;
        let ks: Vec<i64> = (0..grid.n()).map(|j| grid.wavenumber(j)).collect();
        let lin = epsilon + 0.5 * noise.sigma_sq_mean();
        let k2: Vec<f64> = ks.iter().map(|&k| (k * k) as f64).collect();
        Ok(Stepper {
            grid,
            epsilon,
            dt,
            scheme,
            linear_only: false,
            ik: ks
                .iter()
                .map(|&k| C::new(0.0, if k == nyq { 0.0 } else { k as f64 }))
                .collect(),
            inv_helm: k2.iter().map(|k2| 1.0 / (1.0 + k2)).collect(),
            keep: ks.iter().map(|&k| if k.abs() <= kc { 1.0 } else { 0.0 }).collect(),
            decay: k2.iter().map(|k2| (-lin * k2 * dt).exp()).collect(),
            decay_half: k2.iter().map(|k2| (-lin * k2 * 0.5 * dt).exp()).collect(),
            k2,
            noise,
        })
    }

    /// Drops the transport and pressure terms (test hook for the linear part).
    pub fn linear_only(mut self) -> Stepper {
        self.linear_only = true;
        self
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn noise(&self) -> &NoiseCoef {
        &self.noise
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    fn fft_dealiased(&self, f: &Field) -> Vec<C> {
        let s = Spectrum::of(f);
        s.coeffs().iter().zip(&self.keep).map(|(c, m)| c * m).collect()
    }

    fn ifft(&self, c: Vec<C>) -> Field {
        Spectrum::from_coeffs(self.grid, c).to_field()
    }

    fn ddx(&self, c: &[C]) -> Vec<C> {
        c.iter().zip(&self.ik).map(|(a, b)| a * b).collect()
    }

    /// Projection onto the dealiased band.
    pub fn project(&self, f: &Field) -> Field {
        self.ifft(self.fft_dealiased(f))
    }

    fn eval(&self, uh: &[C]) -> Eval {
        let n_nodes = self.grid.n();
        let u = self.ifft(uh.to_vec());
        let ux = self.ifft(self.ddx(uh));
        let mut n = vec![C::new(0.0, 0.0); n_nodes];
        if !self.linear_only {
            let conv = self.fft_dealiased(&u.mul(&ux).expect("same grid"));
            let src = self.fft_dealiased(&u.zip_with(&ux, |a, b| a * a + 0.5 * b * b).expect("same grid"));
            for j in 0..n_nodes {
                n[j] = -conv[j] - self.ik[j] * self.inv_helm[j] * src[j];
            }
        }
        let (g, g2) = if self.noise.is_zero() {
            (vec![C::new(0.0, 0.0); n_nodes], vec![C::new(0.0, 0.0); n_nodes])
        } else {
            let sigma = self.noise.sigma();
            let w = self.fft_dealiased(&sigma.mul(&ux).expect("same grid"));
            let wx = self.ifft(self.ddx(&w));
            let g2 = self.fft_dealiased(&sigma.mul(&wx).expect("same grid"));
            let half_s2 = 0.5 * self.noise.sigma_sq_mean();
            for j in 0..n_nodes {
                n[j] += 0.5 * g2[j] + half_s2 * self.k2[j] * uh[j];
            }
            (w.iter().map(|c| -c).collect(), g2)
        };
        Eval { u, ux, n, g, g2 }
    }

    fn check(&self, t: f64, e: &Eval) -> Result<()> {
        if !(e.u.is_finite() && e.ux.is_finite()) {
            return Err(Error::BlowUp {
                t,
                reason: "non-finite values".into(),
            });
        }
        let qmax = e.ux.sup_norm();
        if qmax > BLOWUP_GRADIENT {
            return Err(Error::BlowUp {
                t,
                reason: format!("max|u_x| = {qmax:e} exceeds {BLOWUP_GRADIENT:e}"),
            });
        }
        let umax = e.u.sup_norm();
        if umax > 0.0 && self.dt > STABILITY_ADVECTIVE * self.grid.h() / umax {
            return Err(Error::Stability {
                dt: self.dt,
                bound: STABILITY_ADVECTIVE * self.grid.h() / umax,
                reason: format!("advective limit violated at t = {t} (max|u| = {umax})"),
            });
        }
        Ok(())
    }

    /// Advances the spectrum `uh` at time `t` by one step with increment `dw`.
    pub fn advance(&self, t: f64, uh: &Spectrum, dw: f64) -> Result<Spectrum> {
        let x = uh.coeffs();
        let a = self.eval(x);
        self.check(t, &a)?;
        let dt = self.dt;
        let e = &self.decay;
        let n = self.grid.n();
        let out: Vec<C> = match self.scheme {
            Scheme::EmImex | Scheme::MilsteinImex => {
                let mil = if self.scheme == Scheme::MilsteinImex {
                    0.5 * (dw * dw - dt)
                } else {
                    0.0
                };
                (0..n)
                    .map(|j| e[j] * (x[j] + dt * a.n[j] + dw * a.g[j] + mil * a.g2[j]))
                    .collect()
            }
            Scheme::Lawson4 => {
                let eh = &self.decay_half;
                let y2: Vec<C> = (0..n).map(|j| eh[j] * (x[j] + 0.5 * dt * a.n[j])).collect();
                let b = self.eval(&y2);
                let y3: Vec<C> = (0..n).map(|j| eh[j] * x[j] + 0.5 * dt * b.n[j]).collect();
                let c = self.eval(&y3);
                let y4: Vec<C> = (0..n).map(|j| e[j] * x[j] + dt * eh[j] * c.n[j]).collect();
                let d = self.eval(&y4);
                (0..n)
                    .map(|j| {
                        e[j] * x[j]
                            + dt / 6.0 * (e[j] * a.n[j] + 2.0 * eh[j] * (b.n[j] + c.n[j]) + d.n[j])
                    })
                    .collect()
            }
        };
        Ok(Spectrum::from_coeffs(self.grid, out))
    }

    pub fn step(&self, state: &State, dw: f64) -> Result<State> {
        if !dw.is_finite() {
            return Err(Error::InvalidArgument("non-finite Wiener increment".into()));
        }
        let next = self.advance(state.t, &Spectrum::of(&state.u), dw)?;
        let s = State::from_spectrum(state.t + self.dt, &next);
        if !(s.u.is_finite() && s.q.is_finite()) {
            return Err(Error::BlowUp {
                t: s.t,
                reason: "non-finite values".into(),
            });
        }
        Ok(s)
    }

    /// Total drift `-u u_x - P_x + ½σ(σu_x)_x + εu_xx` (dealiased products).
    pub fn drift(&self, u: &Field) -> Result<Field> {
        u.check_finite("drift input")?;
        let uh = Spectrum::of(u);
        let e = self.eval(uh.coeffs());
        let lin = self.epsilon + 0.5 * self.noise.sigma_sq_mean();
        let c: Vec<C> = (0..self.grid.n())
            .map(|j| e.n[j] - lin * self.k2[j] * uh.coeffs()[j])
            .collect();
        let out = self.ifft(c);
        out.check_finite("drift")?;
        Ok(out)
    }

    /// Projected noise coefficient `-P(σ u_x)`.
    pub fn noise_coefficient(&self, u: &Field) -> Field {
        let e = self.eval(Spectrum::of(u).coeffs());
        self.ifft(e.g)
    }
}

/// Total drift of the Itô equation at `state`.
pub fn drift(state: &State, noise: &NoiseCoef, epsilon: f64) -> Result<Field> {
    Stepper::new(state.grid(), epsilon, noise.clone(), Scheme::EmImex, 1.0)?.drift(&state.u)
}

/// The Itô diffusion coefficient `-σ q`.
pub fn noise_term(state: &State, noise: &NoiseCoef) -> Field {
    noise.sigma().mul(&state.q).expect("same grid").scale(-1.0)
}

/// One step of `scheme` from `state`.
pub fn step(
    state: &State,
    dt: f64,
    dw: f64,
    noise: &NoiseCoef,
    epsilon: f64,
    scheme: Scheme,
) -> Result<State> {
    Stepper::new(state.grid(), epsilon, noise.clone(), scheme, dt)?.step(state, dw)
}
