//! Weak-form residuals of the renormalized equations for `S(q)` and `S(u)`.
//!
//! Written as `0 = d∫φS + D dt + M dW`, each interval contributes
//! `Δ∫φS + ½(D_k + D_{k+1})Δt + M_k ΔW` (plus the Milstein correction
//! `½ ∂M·G (ΔW² - Δt)` when requested).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::energy::ItoQuadrature;
use super::{ddx, noise_direction, running_relative};
use crate::entropy::{Entropy, EntropySpec};
use crate::error::Result;
use crate::grid::{dealias, Field};
use crate::kernel::helmholtz_solve;
use crate::sde::{NoiseCoef, State, Trajectory};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyResidual {
    pub times: Vec<f64>,
    /// `∫ φ S dx` at each snapshot.
    pub functional: Vec<f64>,
    /// Accumulated drift pieces (`∫₀ᵗ` of each named term) and the
    /// stochastic integral, all with the sign they carry in `0 = dS + …`.
    pub terms: BTreeMap<String, Vec<f64>>,
    pub residual: Vec<f64>,
    pub relative: Vec<f64>,
}

impl EntropyResidual {
    pub fn l1_in_time(&self) -> f64 {
        super::trapezoid_abs(&self.times, &self.residual)
    }

    pub fn max_abs_residual(&self) -> f64 {
        self.residual.iter().fold(0.0, |a, r| a.max(r.abs()))
    }
}

/// Per-state spatial integrals.
struct Local {
    functional: f64,
    drift: Vec<(&'static str, f64)>,
    noise: f64,
    noise_derivative: f64,
}

/// `∫ φ f` on the grid.
fn tested(phi: &[f64], h: f64, f: impl Fn(usize) -> f64) -> f64 {
    h * phi.iter().enumerate().map(|(j, p)| p * f(j)).sum::<f64>()
}

/// Pressure `(1 - ∂ₓₓ)⁻¹ P(u² + ½q²)` with the same projection as the stepper.
fn pressure(state: &State) -> Result<Field> {
    let src = state.u.zip_with(&state.q, |u, q| u * u + 0.5 * q * q)?;
    helmholtz_solve(&dealias(&src))
}

struct Ctx<'a> {
    ent: Entropy,
    noise: &'a NoiseCoef,
    epsilon: f64,
    phi: &'a [f64],
    phi_x: Field,
    phi_xx: Field,
    a: Field,
    a_x: Field,
    a_xx: Field,
    h: f64,
}

impl<'a> Ctx<'a> {
    fn new(spec: &EntropySpec, noise: &'a NoiseCoef, epsilon: f64, phi: &'a Field) -> Result<Ctx<'a>> {
        noise.grid().ensure_same(&phi.grid())?;
        phi.check_finite("test function")?;
        Ok(Ctx {
            ent: spec.validate()?,
            noise,
            epsilon,
            phi: phi.values(),
            phi_x: ddx(phi),
            phi_xx: ddx(&ddx(phi)),
            a: noise.sigma().map(|s| s * s),
            a_x: noise.sigma_sq_x(),
            a_xx: noise.sigma_sq_xx(),
            h: phi.grid().h(),
        })
    }

    fn q_terms(&self, st: &State) -> Result<Local> {
        let (e, h, phi) = (&self.ent, self.h, self.phi);
        let (px, pxx) = (self.phi_x.values(), self.phi_xx.values());
        let (u, q) = (st.u.values(), st.q.values());
        let qx = ddx(&st.q);
        let qx = qx.values();
        let p = pressure(st)?;
        let p = p.values();
        let s: Vec<f64> = q.iter().map(|&v| e.s(v)).collect();
        let s1: Vec<f64> = q.iter().map(|&v| e.s_prime(v)).collect();
        let s2: Vec<f64> = q.iter().map(|&v| e.s_second(v)).collect();
        let (a, a_x, a_xx) = (self.a.values(), self.a_x.values(), self.a_xx.values());
        let sig = self.noise.sigma().values();
        let sx = self.noise.dsigma().values();
        let eps = self.epsilon;
        let drift = vec![
            ("transport", -tested(px, h, |j| u[j] * s[j])),
            ("sigma_flux", -tested(px, h, |j| 0.25 * a_x[j] * (3.0 * s[j] - 2.0 * s1[j] * q[j]))),
            ("diffusion", -tested(pxx, h, |j| (0.5 * a[j] + eps) * s[j])),
            ("viscous", tested(phi, h, |j| eps * s2[j] * qx[j] * qx[j])),
            ("pressure", tested(phi, h, |j| s1[j] * (p[j] - u[j] * u[j]))),
            ("cubic", -tested(phi, h, |j| s[j] * q[j] - 0.5 * s1[j] * q[j] * q[j])),
            (
                "sigma_zero_order",
                -tested(phi, h, |j| {
                    0.25 * a_xx[j] * (s[j] - s1[j] * q[j]) + 0.5 * sx[j] * sx[j] * s2[j] * q[j] * q[j]
                }),
            ),
        ];
        let noise = -tested(px, h, |j| sig[j] * s[j]) - tested(phi, h, |j| sx[j] * (s[j] - s1[j] * q[j]));
        let noise_derivative = if self.noise.is_zero() {
            0.0
        } else {
            let gx = ddx(&noise_direction(st, self.noise));
            let gx = gx.values();
            -tested(px, h, |j| sig[j] * s1[j] * gx[j]) + tested(phi, h, |j| sx[j] * s2[j] * q[j] * gx[j])
        };
        Ok(Local {
            functional: tested(phi, h, |j| s[j]),
            drift,
            noise,
            noise_derivative,
        })
    }

    fn u_terms(&self, st: &State) -> Result<Local> {
        let (e, h, phi) = (&self.ent, self.h, self.phi);
        let (px, pxx) = (self.phi_x.values(), self.phi_xx.values());
        let (u, q) = (st.u.values(), st.q.values());
        let p = pressure(st)?;
        let p = p.values();
        let s: Vec<f64> = u.iter().map(|&v| e.s(v)).collect();
        let s1: Vec<f64> = u.iter().map(|&v| e.s_prime(v)).collect();
        let s2: Vec<f64> = u.iter().map(|&v| e.s_second(v)).collect();
        let (a, a_x, a_xx) = (self.a.values(), self.a_x.values(), self.a_xx.values());
        let sig = self.noise.sigma().values();
        let sx = self.noise.dsigma().values();
        let eps = self.epsilon;
        let drift = vec![
            ("transport", -tested(px, h, |j| u[j] * s[j] - e.antiderivative(u[j]))),
            ("pressure_flux", -tested(px, h, |j| s1[j] * p[j])),
            ("sigma_flux", -tested(px, h, |j| 0.75 * a_x[j] * s[j])),
            ("diffusion", -tested(pxx, h, |j| (0.5 * a[j] + eps) * s[j])),
            ("viscous", tested(phi, h, |j| eps * s2[j] * q[j] * q[j])),
            ("pressure", -tested(phi, h, |j| s2[j] * q[j] * p[j])),
            ("sigma_zero_order", -tested(phi, h, |j| 0.25 * a_xx[j] * s[j])),
        ];
        let noise = -tested(px, h, |j| sig[j] * s[j]) - tested(phi, h, |j| sx[j] * s[j]);
        let noise_derivative = if self.noise.is_zero() {
            0.0
        } else {
            let g = noise_direction(st, self.noise);
            let g = g.values();
            -tested(px, h, |j| sig[j] * s1[j] * g[j]) - tested(phi, h, |j| sx[j] * s1[j] * g[j])
        };
        Ok(Local {
            functional: tested(phi, h, |j| s[j]),
            drift,
            noise,
            noise_derivative,
        })
    }
}

fn assemble(traj: &Trajectory, locals: Vec<Local>, quadrature: ItoQuadrature) -> Result<EntropyResidual> {
    let dw = traj.snapshot_increments()?;
    let dts = traj.snapshot_dts();
    let k = locals.len();
    let mut terms: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (name, _) in &locals[0].drift {
        let mut acc = vec![0.0; k];
        let idx = locals[0].drift.iter().position(|(n, _)| n == name).expect("present");
        for j in 0..k - 1 {
            acc[j + 1] = acc[j] + 0.5 * (locals[j].drift[idx].1 + locals[j + 1].drift[idx].1) * dts[j];
        }
        terms.insert(name.to_string(), acc);
    }
    let mut stochastic = vec![0.0; k];
    for j in 0..k - 1 {
        let mut m = locals[j].noise * dw[j];
        if quadrature == ItoQuadrature::Milstein {
            m += 0.5 * locals[j].noise_derivative * (dw[j] * dw[j] - dts[j]);
        }
        stochastic[j + 1] = stochastic[j] + m;
    }
    let functional: Vec<f64> = locals.iter().map(|l| l.functional).collect();
    let f0 = functional[0];
    let mut residual = Vec::with_capacity(k);
    let mut scale = Vec::with_capacity(k);
    for j in 0..k {
        let mut r = functional[j] - f0 + stochastic[j];
        let mut m = (functional[j] - f0).abs().max(stochastic[j].abs());
        for series in terms.values() {
            r += series[j];
            m = m.max(series[j].abs());
        }
        residual.push(r);
        scale.push(m);
    }
    terms.insert("stochastic".into(), stochastic);
    Ok(EntropyResidual {
        times: traj.times(),
        relative: running_relative(&residual, &scale),
        functional,
        terms,
        residual,
    })
}

/// Residual of the renormalized equation for `S(q)` tested against `testfn`.
pub fn entropy_residual(
    traj: &Trajectory,
    spec: &EntropySpec,
    noise: &NoiseCoef,
    epsilon: f64,
    testfn: &Field,
) -> Result<EntropyResidual> {
    entropy_residual_with(traj, spec, noise, epsilon, testfn, ItoQuadrature::LeftPoint)
}

pub fn entropy_residual_with(
    traj: &Trajectory,
    spec: &EntropySpec,
    noise: &NoiseCoef,
    epsilon: f64,
    testfn: &Field,
    quadrature: ItoQuadrature,
) -> Result<EntropyResidual> {
    traj.grid().ensure_same(&noise.grid())?;
    let ctx = Ctx::new(spec, noise, epsilon, testfn)?;
    let locals = traj.snapshots.iter().map(|s| ctx.q_terms(s)).collect::<Result<Vec<_>>>()?;
    assemble(traj, locals, quadrature)
}

/// Residual of the renormalized equation for `S(u)` tested against `testfn`.
///
/// The noise-induced flux is `¾ ∂ₓσ² S(u)` and the zero-order noise term
/// `-¼ ∂ₓₓσ² S(u)`: the `u`-equation carries `σ u_x dW`, not `∂ₓ(σu) dW`.
pub fn entropy_residual_u(
    traj: &Trajectory,
    spec: &EntropySpec,
    noise: &NoiseCoef,
    epsilon: f64,
    testfn: &Field,
) -> Result<EntropyResidual> {
    entropy_residual_u_with(traj, spec, noise, epsilon, testfn, ItoQuadrature::LeftPoint)
}

pub fn entropy_residual_u_with(
    traj: &Trajectory,
    spec: &EntropySpec,
    noise: &NoiseCoef,
    epsilon: f64,
    testfn: &Field,
    quadrature: ItoQuadrature,
) -> Result<EntropyResidual> {
    traj.grid().ensure_same(&noise.grid())?;
    let ctx = Ctx::new(spec, noise, epsilon, testfn)?;
    let locals = traj.snapshots.iter().map(|s| ctx.u_terms(s)).collect::<Result<Vec<_>>>()?;
    assemble(traj, locals, quadrature)
}
