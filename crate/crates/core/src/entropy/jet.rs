//! Third-order forward-mode differentiation.
//!
//! A [`Jet`] carries a value and its first three derivatives with respect to
//! one scalar input. Evaluating a formula on `Jet::var(v)` yields the exact
//! derivatives of that formula at `v` (up to round-off), which makes it an
//! oracle for hand-derived derivative and composition formulas.

use std::ops::{Add, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

impl Jet {
    pub const fn constant(v: f64) -> Jet {
        Jet {
            v,
            d1: 0.0,
            d2: 0.0,
            d3: 0.0,
        }
    }

    pub const fn var(v: f64) -> Jet {
        Jet {
            v,
            d1: 1.0,
            d2: 0.0,
            d3: 0.0,
        }
    }

    pub fn scale(self, c: f64) -> Jet {
        Jet {
            v: c * self.v,
            d1: c * self.d1,
            d2: c * self.d2,
            d3: c * self.d3,
        }
    }

    /// `|x|`, differentiated on the side given by the sign of the value.
    pub fn abs(self) -> Jet {
        if self.v < 0.0 {
            -self
        } else {
            self
        }
    }

    /// `x₊`: the identity where `x > 0`, the zero jet elsewhere.
    pub fn pos(self) -> Jet {
        if self.v > 0.0 {
            self
        } else {
            Jet::constant(0.0)
        }
    }

    /// `x₋`: the identity where `x < 0`, the zero jet elsewhere.
    pub fn neg_part(self) -> Jet {
        if self.v < 0.0 {
            self
        } else {
            Jet::constant(0.0)
        }
    }

    pub fn powi(self, n: u32) -> Jet {
        (0..n).fold(Jet::constant(1.0), |acc, _| acc * self)
    }

    /// `x^α` for `x > 0` (Faà di Bruno to third order).
    pub fn powf(self, alpha: f64) -> Jet {
        let y = self.v;
        let h1 = alpha * y.powf(alpha - 1.0);
        let h2 = alpha * (alpha - 1.0) * y.powf(alpha - 2.0);
        let h3 = alpha * (alpha - 1.0) * (alpha - 2.0) * y.powf(alpha - 3.0);
        let (g1, g2, g3) = (self.d1, self.d2, self.d3);
        Jet {
            v: y.powf(alpha),
            d1: h1 * g1,
            d2: h2 * g1 * g1 + h1 * g2,
            d3: h3 * g1 * g1 * g1 + 3.0 * h2 * g1 * g2 + h1 * g3,
        }
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        Jet {
            v: self.v + o.v,
            d1: self.d1 + o.d1,
            d2: self.d2 + o.d2,
            d3: self.d3 + o.d3,
        }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self + (-o)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        // Leibniz rule up to third order.
        Jet {
            v: self.v * o.v,
            d1: self.d1 * o.v + self.v * o.d1,
            d2: self.d2 * o.v + 2.0 * self.d1 * o.d1 + self.v * o.d2,
            d3: self.d3 * o.v + 3.0 * self.d2 * o.d1 + 3.0 * self.d1 * o.d2 + self.v * o.d3,
        }
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(self, c: f64) -> Jet {
        Jet { v: self.v + c, ..self }
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, c: f64) -> Jet {
        self.scale(c)
    }
}

fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `S_ℓ` evaluated on a jet, branch by branch from its definition.
pub fn sell(ell: f64, x: Jet) -> Jet {
    let a = x.abs();
    if a.v <= ell {
        (x * x) * 0.5
    } else if a.v < 2.0 * ell {
        a.powi(3) * (-1.0 / (6.0 * ell)) + x * x + a * (-0.5 * ell) + ell * ell / 6.0
    } else {
        a * (1.5 * ell) + (-7.0 / 6.0 * ell * ell)
    }
}

/// The closed-form first derivative `S'_ℓ` evaluated on a jet.
pub fn sell_prime(ell: f64, x: Jet) -> Jet {
    let a = x.abs();
    if a.v <= ell {
        x
    } else if a.v < 2.0 * ell {
        (a * 2.0 - (x * x) * (1.0 / (2.0 * ell)) + (-0.5 * ell)) * sgn(x.v)
    } else {
        Jet::constant(1.5 * sgn(x.v) * ell)
    }
}
