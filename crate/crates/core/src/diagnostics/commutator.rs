//! Mollification commutators `E¹_δ`, `E²_δ`, `E³_δ`.

use serde::{Deserialize, Serialize};

use super::ddx;
use crate::entropy::EntropySpec;
use crate::error::Result;
use crate::grid::{Field, Mollifier};
use crate::sde::NoiseCoef;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommutatorErrors {
    pub delta: f64,
    /// `‖∂ₓE¹_δ‖_{L¹}`, `E¹_δ = (w w_x)*J_δ - w_δ ∂ₓw_δ`.
    pub e1: f64,
    /// `‖E²_δ‖_{H¹}`, `E²_δ = (σ w_x)*J_δ - σ ∂ₓw_δ`.
    pub e2: f64,
    /// `‖E³_δ‖_{L²}`, `E³_δ = -½(σ(σw_x)_x)*J_δ + ½σ(σ∂ₓw_δ)_x`.
    pub e3: f64,
    /// `|∫ -φS'(∂ₓw_δ)∂ₓE³_δ + φS''(∂ₓw_δ)(½|∂ₓE²_δ|² + ∂ₓ(σ∂ₓw_δ)∂ₓE²_δ) dx|`,
    /// present in extended mode.
    pub second_order: Option<f64>,
}

struct Parts {
    w_d: Field,
    e1: Field,
    e2: Field,
    e3: Field,
}

fn parts(w: &Field, noise: &NoiseCoef, delta: f64) -> Result<Parts> {
    w.grid().ensure_same(&noise.grid())?;
    w.check_finite("commutator input")?;
    let j = Mollifier::new(w.grid(), delta)?;
    let sigma = noise.sigma();
    let wx = ddx(w);
    let w_d = j.apply(w)?;
    let w_dx = j.apply(&wx)?;
    let e1 = j.apply(&w.mul(&wx)?)?.sub(&w_d.mul(&w_dx)?)?;
    let e2 = j.apply(&sigma.mul(&wx)?)?.sub(&sigma.mul(&w_dx)?)?;
    let inner = sigma.mul(&ddx(&sigma.mul(&wx)?))?;
    let inner_d = sigma.mul(&ddx(&sigma.mul(&w_dx)?))?;
    let e3 = j.apply(&inner)?.scale(-0.5).add(&inner_d.scale(0.5))?;
    Ok(Parts { w_d, e1, e2, e3 })
}

/// The three first-order commutator norms for `w` and `σ` at radius `delta`.
pub fn commutator_errors(w: &Field, noise: &NoiseCoef, delta: f64) -> Result<CommutatorErrors> {
    let p = parts(w, noise, delta)?;
    Ok(CommutatorErrors {
        delta,
        e1: ddx(&p.e1).l1_norm(),
        e2: (p.e2.l2_norm_sq() + ddx(&p.e2).l2_norm_sq()).sqrt(),
        e3: p.e3.l2_norm_sq().sqrt(),
        second_order: None,
    })
}

/// [`commutator_errors`] plus the second-order probe for entropy `spec`
/// and test function `phi`. No convergence rate is attached to the probe.
pub fn commutator_errors_extended(
    w: &Field,
    noise: &NoiseCoef,
    delta: f64,
    spec: &EntropySpec,
    phi: &Field,
) -> Result<CommutatorErrors> {
    let ent = spec.validate()?;
    let mut out = commutator_errors(w, noise, delta)?;
    let p = parts(w, noise, delta)?;
    let q_d = ddx(&p.w_d);
    let e2x = ddx(&p.e2);
    let e3x = ddx(&p.e3);
    let flux = ddx(&noise.sigma().mul(&q_d)?);
    let h = w.grid().h();
    let mut acc = 0.0;
    for j in 0..w.grid().n() {
        let v = q_d.values()[j];
        let a = e2x.values()[j];
        acc += phi.values()[j]
            * (-ent.s_prime(v) * e3x.values()[j] + ent.s_second(v) * (0.5 * a * a + flux.values()[j] * a));
    }
    out.second_order = Some((h * acc).abs());
    Ok(out)
}

/// [`commutator_errors`] over a sweep of radii.
pub fn commutator_sweep(w: &Field, noise: &NoiseCoef, deltas: &[f64]) -> Result<Vec<CommutatorErrors>> {
    deltas.iter().map(|&d| commutator_errors(w, noise, d)).collect()
}
