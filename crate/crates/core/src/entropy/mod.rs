//! The renormalization family: `½v²`, the truncations `S_ℓ`, their positive
//! and negative parts, `v(|v|+1)^α`, together with derivatives, `β` and the
//! `H` functions.
//!
//! Every map is a closed-form scalar function. [`explicit`] collects the
//! expanded piecewise formulas and checks them against compositional
//! evaluation by exact Taylor arithmetic ([`jet`]).

pub mod explicit;
pub mod jet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Field;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EntropyKind {
    Square,
    SquarePos,
    SquareNeg,
    Sell,
    SellPos,
    SellNeg,
    PowerAlpha,
}

/// User-facing description; validated into an [`Entropy`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropySpec {
    pub kind: EntropyKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ell: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

impl EntropySpec {
    pub fn new(kind: EntropyKind) -> Self {
        EntropySpec {
            kind,
            ell: None,
            alpha: None,
        }
    }

    pub fn with_ell(kind: EntropyKind, ell: f64) -> Self {
        EntropySpec {
            kind,
            ell: Some(ell),
            alpha: None,
        }
    }

    pub fn power_alpha(alpha: f64) -> Self {
        EntropySpec {
            kind: EntropyKind::PowerAlpha,
            ell: None,
            alpha: Some(alpha),
        }
    }

    pub fn validate(&self) -> Result<Entropy> {
        use EntropyKind::*;
        let ell = || match self.ell {
            Some(l) if l.is_finite() && l > 0.0 => Ok(l),
            Some(l) => Err(Error::InvalidEntropy(format!("ell must be positive (got {l})"))),
            None => Err(Error::InvalidEntropy(format!("{:?} requires ell", self.kind))),
        };
        Ok(match self.kind {
            Square => Entropy::Square,
            SquarePos => Entropy::SquarePos,
            SquareNeg => Entropy::SquareNeg,
            Sell => Entropy::Sell { ell: ell()? },
            SellPos => Entropy::SellPos { ell: ell()? },
            SellNeg => Entropy::SellNeg { ell: ell()? },
            PowerAlpha => Entropy::PowerAlpha {
                alpha: check_alpha(self.alpha.ok_or_else(|| {
                    Error::InvalidEntropy("PowerAlpha requires alpha".into())
                })?)?,
            },
        })
    }
}

fn check_alpha(alpha: f64) -> Result<f64> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(alpha)
    } else {
        Err(Error::InvalidEntropy(format!(
            "alpha must lie in (0, 1) (got {alpha})"
        )))
    }
}

/// Which part of `v` an entropy sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Part {
    Pos,
    Neg,
}

impl Part {
    /// `v₊` or `v₋`.
    #[inline]
    pub fn of(self, v: f64) -> f64 {
        match self {
            Part::Pos => v.max(0.0),
            Part::Neg => v.min(0.0),
        }
    }

    /// The indicator `1_{|v±| > 0}`.
    #[inline]
    pub fn active(self, v: f64) -> f64 {
        if self.of(v) != 0.0 {
            1.0
        } else {
            0.0
        }
    }
}

/// A validated entropy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Entropy {
    Square,
    SquarePos,
    SquareNeg,
    Sell { ell: f64 },
    SellPos { ell: f64 },
    SellNeg { ell: f64 },
    PowerAlpha { alpha: f64 },
}

#[inline]
fn sgn(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `S_ℓ(v)`.
pub fn sell(ell: f64, v: f64) -> f64 {
    let a = v.abs();
    if a <= ell {
        0.5 * v * v
    } else if a < 2.0 * ell {
        -a * a * a / (6.0 * ell) + v * v - 0.5 * ell * a + ell * ell / 6.0
    } else {
        1.5 * ell * a - 7.0 / 6.0 * ell * ell
    }
}

/// `S'_ℓ(v)`.
pub fn sell_prime(ell: f64, v: f64) -> f64 {
    let a = v.abs();
    if a <= ell {
        v
    } else if a < 2.0 * ell {
        sgn(v) * (2.0 * a - v * v / (2.0 * ell) - 0.5 * ell)
    } else {
        1.5 * sgn(v) * ell
    }
}

/// `S''_ℓ(v)`.
pub fn sell_second(ell: f64, v: f64) -> f64 {
    let a = v.abs();
    if a <= ell {
        1.0
    } else if a < 2.0 * ell {
        (2.0 * ell - a) / ell
    } else {
        0.0
    }
}

/// `S'''_ℓ(v)` (zero off the middle branch).
pub fn sell_third(ell: f64, v: f64) -> f64 {
    let a = v.abs();
    if a > ell && a < 2.0 * ell {
        -sgn(v) / ell
    } else {
        0.0
    }
}

/// `∫₀^v S_ℓ(ξ) dξ`.
pub fn sell_antiderivative(ell: f64, v: f64) -> f64 {
    let a = v.abs();
    let mid = |x: f64| -x.powi(4) / (24.0 * ell) + x.powi(3) / 3.0 - ell * x * x / 4.0 + ell * ell * x / 6.0;
    let at_ell = ell.powi(3) / 6.0;
    let g = if a <= ell {
        a.powi(3) / 6.0
    } else {
        let at_2ell = at_ell + mid(2.0 * ell) - mid(ell);
        if a < 2.0 * ell {
            at_ell + mid(a) - mid(ell)
        } else {
            let out = |x: f64| 0.75 * ell * x * x - 7.0 / 6.0 * ell * ell * x;
            at_2ell + out(a) - out(2.0 * ell)
        }
    };
    sgn(v) * g
}

/// `(S, S', S'')` of `v (|v|+1)^α`.
pub fn power_alpha_bundle(alpha: f64, v: f64) -> Result<(f64, f64, f64)> {
    let alpha = check_alpha(alpha)?;
    Ok(power_alpha_unchecked(alpha, v))
}

fn power_alpha_unchecked(alpha: f64, v: f64) -> (f64, f64, f64) {
    let a = v.abs();
    let w = a + 1.0;
    let s = v * w.powf(alpha);
    let s1 = w.powf(alpha) + alpha * a * w.powf(alpha - 1.0);
    let s2 = alpha * sgn(v) * w.powf(alpha - 2.0) * (2.0 + (alpha + 1.0) * a);
    (s, s1, s2)
}

impl Entropy {
    pub fn spec(&self) -> EntropySpec {
        use EntropyKind as K;
        match *self {
            Entropy::Square => EntropySpec::new(K::Square),
            Entropy::SquarePos => EntropySpec::new(K::SquarePos),
            Entropy::SquareNeg => EntropySpec::new(K::SquareNeg),
            Entropy::Sell { ell } => EntropySpec::with_ell(K::Sell, ell),
            Entropy::SellPos { ell } => EntropySpec::with_ell(K::SellPos, ell),
            Entropy::SellNeg { ell } => EntropySpec::with_ell(K::SellNeg, ell),
            Entropy::PowerAlpha { alpha } => EntropySpec::power_alpha(alpha),
        }
    }

    fn part(&self) -> Option<Part> {
        match self {
            Entropy::SquarePos | Entropy::SellPos { .. } => Some(Part::Pos),
            Entropy::SquareNeg | Entropy::SellNeg { .. } => Some(Part::Neg),
            _ => None,
        }
    }

    pub fn s(&self, v: f64) -> f64 {
        let w = self.part().map_or(v, |p| p.of(v));
        match *self {
            Entropy::Square | Entropy::SquarePos | Entropy::SquareNeg => 0.5 * w * w,
            Entropy::Sell { ell } | Entropy::SellPos { ell } | Entropy::SellNeg { ell } => {
                sell(ell, w)
            }
            Entropy::PowerAlpha { alpha } => power_alpha_unchecked(alpha, v).0,
        }
    }

    pub fn s_prime(&self, v: f64) -> f64 {
        let w = self.part().map_or(v, |p| p.of(v));
        match *self {
            Entropy::Square | Entropy::SquarePos | Entropy::SquareNeg => w,
            Entropy::Sell { ell } | Entropy::SellPos { ell } | Entropy::SellNeg { ell } => {
                sell_prime(ell, w)
            }
            Entropy::PowerAlpha { alpha } => power_alpha_unchecked(alpha, v).1,
        }
    }

    /// Second derivative; positive and negative parts carry `1_{|v±|>0}`.
    pub fn s_second(&self, v: f64) -> f64 {
        let (w, ind) = match self.part() {
            Some(p) => (p.of(v), p.active(v)),
            None => (v, 1.0),
        };
        match *self {
            Entropy::Square | Entropy::SquarePos | Entropy::SquareNeg => ind,
            Entropy::Sell { ell } | Entropy::SellPos { ell } | Entropy::SellNeg { ell } => {
                sell_second(ell, w) * ind
            }
            Entropy::PowerAlpha { alpha } => power_alpha_unchecked(alpha, v).2,
        }
    }

    /// `3S(v) - 2S'(v)v`.
    pub fn h1(&self, v: f64) -> f64 {
        3.0 * self.s(v) - 2.0 * self.s_prime(v) * v
    }

    /// `S(v)v - ½S'(v)v²`.
    pub fn h2(&self, v: f64) -> f64 {
        self.s(v) * v - 0.5 * self.s_prime(v) * v * v
    }

    /// `S(v) - S'(v)v`.
    pub fn h3(&self, v: f64) -> f64 {
        self.s(v) - self.s_prime(v) * v
    }

    /// `∫₀^v S(ξ) dξ` in closed form.
    pub fn antiderivative(&self, v: f64) -> f64 {
        match *self {
            Entropy::Square => v.powi(3) / 6.0,
            Entropy::SquarePos => v.max(0.0).powi(3) / 6.0,
            Entropy::SquareNeg => v.min(0.0).powi(3) / 6.0,
            Entropy::Sell { ell } => sell_antiderivative(ell, v),
            Entropy::SellPos { ell } => sell_antiderivative(ell, v.max(0.0)),
            Entropy::SellNeg { ell } => sell_antiderivative(ell, v.min(0.0)),
            Entropy::PowerAlpha { alpha } => {
                let w = v.abs() + 1.0;
                let g = |w: f64| w.powf(alpha + 2.0) / (alpha + 2.0) - w.powf(alpha + 1.0) / (alpha + 1.0);
                g(w) - g(1.0)
            }
        }
    }

    pub fn map_s(&self, f: &Field) -> Field {
        f.map(|v| self.s(v))
    }

    pub fn map_s_prime(&self, f: &Field) -> Field {
        f.map(|v| self.s_prime(v))
    }

    pub fn map_s_second(&self, f: &Field) -> Field {
        f.map(|v| self.s_second(v))
    }
}

fn valid(spec: &EntropySpec) -> Result<Entropy> {
    spec.validate()
}

pub fn s(spec: &EntropySpec, v: f64) -> Result<f64> {
    Ok(valid(spec)?.s(v))
}

pub fn s_prime(spec: &EntropySpec, v: f64) -> Result<f64> {
    Ok(valid(spec)?.s_prime(v))
}

pub fn s_second(spec: &EntropySpec, v: f64) -> Result<f64> {
    Ok(valid(spec)?.s_second(v))
}

pub fn h1(spec: &EntropySpec, v: f64) -> Result<f64> {
    Ok(valid(spec)?.h1(v))
}

pub fn h2(spec: &EntropySpec, v: f64) -> Result<f64> {
    Ok(valid(spec)?.h2(v))
}

pub fn h3(spec: &EntropySpec, v: f64) -> Result<f64> {
    Ok(valid(spec)?.h3(v))
}

/// `β(v) = S_ℓ(v±)' v`.
pub fn beta(ell: f64, part: Part, v: f64) -> f64 {
    sell_prime(ell, part.of(v)) * v
}

/// `β'(v) = S''_ℓ(v±) 1_{|v±|>0} v + S'_ℓ(v±)`.
pub fn beta_prime(ell: f64, part: Part, v: f64) -> f64 {
    let w = part.of(v);
    sell_second(ell, w) * part.active(v) * v + sell_prime(ell, w)
}

/// `β''(v) = S'''_ℓ(v±) 1_{|v±|>0} v + 2 S''_ℓ(v±) 1_{|v±|>0}`.
pub fn beta_second(ell: f64, part: Part, v: f64) -> f64 {
    let w = part.of(v);
    let ind = part.active(v);
    sell_third(ell, w) * ind * v + 2.0 * sell_second(ell, w) * ind
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sell2() -> Entropy {
        Entropy::Sell { ell: 2.0 }
    }

    #[test]
    fn sell_branch_values() {
        let e = sell2();
        assert_eq!(e.s(1.0), 0.5);
        assert!((e.s(3.0) - (-27.0 / 12.0 + 9.0 - 3.0 + 4.0 / 6.0)).abs() < 1e-14);
        assert!((e.s(3.0) - 4.416_666_7).abs() < 1e-7);
        assert!((e.s(5.0) - 10.333_333_3).abs() < 1e-7);
        assert_eq!(e.s_prime(1.0), 1.0);
        assert_eq!(e.s_prime(5.0), 3.0);
        assert_eq!(Entropy::SellPos { ell: 0.7 }.s_prime(-1.0), 0.0);
        assert_eq!(e.s_second(1.0), 1.0);
        assert_eq!(e.s_second(3.0), 0.5);
        assert_eq!(e.s_second(5.0), 0.0);
    }

    #[test]
    fn h_functions() {
        for v in [-3.0, -0.2, 0.0, 1.7, 9.0] {
            assert_eq!(Entropy::Square.h2(v), 0.0);
        }
        assert_eq!(sell2().h2(1.0), 0.0);
    }

    #[test]
    fn beta_values() {
        assert_eq!(beta(2.0, Part::Pos, 1.0), 1.0);
        assert_eq!(beta(2.0, Part::Pos, -3.0), 0.0);
        assert_eq!(beta(2.0, Part::Pos, 5.0), 15.0);
    }

    #[test]
    fn power_alpha_values() {
        assert_eq!(power_alpha_bundle(0.5, 0.0).unwrap(), (0.0, 1.0, 0.0));
        assert_eq!(power_alpha_bundle(0.5, 3.0).unwrap().0, 6.0);
        assert!(power_alpha_bundle(1.0, 1.0).is_err());
        assert!(power_alpha_bundle(0.0, 1.0).is_err());
    }

    #[test]
    fn validation() {
        assert!(EntropySpec::new(EntropyKind::Sell).validate().is_err());
        assert!(EntropySpec::with_ell(EntropyKind::SellNeg, -1.0).validate().is_err());
        assert!(EntropySpec::power_alpha(1.5).validate().is_err());
        assert!(s(&EntropySpec::new(EntropyKind::PowerAlpha), 1.0).is_err());
        assert_eq!(
            s(&EntropySpec::with_ell(EntropyKind::Sell, 2.0), 1.0).unwrap(),
            0.5
        );
    }

    #[test]
    fn splitting_is_exact() {
        for ell in [0.3, 1.0, 2.0, 5.0] {
            for i in -500..=500 {
                let v = i as f64 * ell / 100.0;
                let whole = Entropy::Sell { ell }.s(v);
                let split = Entropy::SellPos { ell }.s(v) + Entropy::SellNeg { ell }.s(v);
                assert_eq!(whole, split);
            }
        }
    }

    #[test]
    fn antiderivative_matches_quadrature() {
        let kinds = [
            Entropy::Square,
            Entropy::SquarePos,
            Entropy::SquareNeg,
            Entropy::Sell { ell: 1.3 },
            Entropy::SellPos { ell: 1.3 },
            Entropy::SellNeg { ell: 1.3 },
            Entropy::PowerAlpha { alpha: 0.4 },
        ];
        for e in kinds {
            for v in [-4.1, -2.0, -0.5, 0.0, 0.9, 2.2, 3.7] {
                // Composite Simpson with many panels on a piecewise-smooth integrand.
                let m = 20_000;
                let hq = v / m as f64;
                let mut acc = e.s(0.0) + e.s(v);
                for i in 1..m {
                    let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                    acc += w * e.s(i as f64 * hq);
                }
                let quad = acc * hq / 3.0;
                let exact = e.antiderivative(v);
                assert!((quad - exact).abs() < 1e-8, "{e:?} v={v}: {quad} vs {exact}");
            }
        }
    }
}
