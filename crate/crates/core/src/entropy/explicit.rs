//! Expanded piecewise formulas for the positive/negative-part entropies and
//! an identity checker comparing them with compositional evaluation.

use serde::{Deserialize, Serialize};

use super::jet::{self, Jet};
use super::{
    beta, beta_prime, beta_second, power_alpha_unchecked, sell, sell_prime, sell_second,
    sell_third, Entropy, Part,
};

fn ind(c: bool) -> f64 {
    if c {
        1.0
    } else {
        0.0
    }
}

// Compositions written out for |v±| ≤ ℓ, ℓ < |v±| < 2ℓ, |v±| ≥ 2ℓ.

/// `S_ℓ(v±) - S_ℓ(v±)'v` by branches of `|v±|`.
pub fn h3_branches(ell: f64, part: Part, v: f64) -> f64 {
    let w = part.of(v);
    let a = w.abs();
    if a <= ell {
        -0.5 * w * w
    } else if a < 2.0 * ell {
        a.powi(3) / (3.0 * ell) - w * w + ell * ell / 6.0
    } else {
        -7.0 / 6.0 * ell * ell
    }
}

/// `3S_ℓ(v±) - 2S_ℓ(v±)'v` by branches of `|v±|`.
pub fn h1_branches(ell: f64, part: Part, v: f64) -> f64 {
    let w = part.of(v);
    let a = w.abs();
    if a <= ell {
        -0.5 * w * w
    } else if a < 2.0 * ell {
        a.powi(3) / (2.0 * ell) - w * w - 0.5 * a * ell + 0.5 * ell * ell
    } else {
        1.5 * ell * a - 3.5 * ell * ell
    }
}

/// `S_ℓ(v±)v - ½S_ℓ(v±)'v²` by branches of `|v±|`.
pub fn h2_branches(ell: f64, part: Part, v: f64) -> f64 {
    let w = part.of(v);
    let a = w.abs();
    if a <= ell {
        0.0
    } else if a < 2.0 * ell {
        a.powi(3) * w / (12.0 * ell) - 0.25 * a * w * ell + w * ell * ell / 6.0
    } else {
        0.75 * a * w * ell - 7.0 / 6.0 * w * ell * ell
    }
}

// Expansions in v with indicator functions, positive part.

pub fn pos_s(l: f64, v: f64) -> f64 {
    let p = v.max(0.0);
    0.5 * p * p - (v - l).powi(3) / (6.0 * l) * ind(l < v && v < 2.0 * l)
        - (3.0 * v * v - 9.0 * l * v + 7.0 * l * l) / 6.0 * ind(v >= 2.0 * l)
}

pub fn pos_s1(l: f64, v: f64) -> f64 {
    v.max(0.0) - (v - l).powi(2) / (2.0 * l) * ind(l < v && v < 2.0 * l)
        + 0.5 * (3.0 * l - 2.0 * v) * ind(v >= 2.0 * l)
}

pub fn pos_s2(l: f64, v: f64) -> f64 {
    ind(0.0 < v && v < 2.0 * l) - (v - l) / l * ind(l < v && v < 2.0 * l)
}

pub fn pos_h3(l: f64, v: f64) -> f64 {
    let p = v.max(0.0);
    -0.5 * p * p
        + (2.0 * v.powi(3) - 3.0 * l * v * v + l.powi(3)) / (6.0 * l) * ind(l < v && v < 2.0 * l)
        + (3.0 * v * v - 7.0 * l * l) / 6.0 * ind(v >= 2.0 * l)
}

pub fn pos_h1(l: f64, v: f64) -> f64 {
    let p = v.max(0.0);
    -0.5 * p * p
        + (v.powi(3) - l * v * v - l * l * v + l.powi(3)) / (2.0 * l) * ind(l < v && v < 2.0 * l)
        + 0.5 * (v * v + 3.0 * l * v - 7.0 * l * l) * ind(v >= 2.0 * l)
}

pub fn pos_h2(l: f64, v: f64) -> f64 {
    (v.powi(4) - 3.0 * l * l * v * v + 2.0 * l.powi(3) * v) / (12.0 * l) * ind(l < v && v < 2.0 * l)
        + (9.0 * l * v * v - 14.0 * l * l * v) / 12.0 * ind(v >= 2.0 * l)
}

pub fn pos_half_s2_v2(l: f64, v: f64) -> f64 {
    let p = v.max(0.0);
    0.5 * p * p - v * v * (v - l) / (2.0 * l) * ind(l < v && v < 2.0 * l)
        - 0.5 * v * v * ind(v >= 2.0 * l)
}

// Negative part.

pub fn neg_s(l: f64, v: f64) -> f64 {
    let m = v.min(0.0);
    0.5 * m * m + (v + l).powi(3) / (6.0 * l) * ind(-2.0 * l < v && v < -l)
        - (3.0 * v * v + 9.0 * l * v + 7.0 * l * l) / 6.0 * ind(v <= -2.0 * l)
}

pub fn neg_s1(l: f64, v: f64) -> f64 {
    v.min(0.0) + (v + l).powi(2) / (2.0 * l) * ind(-2.0 * l < v && v < -l)
        - 0.5 * (3.0 * l + 2.0 * v) * ind(v <= -2.0 * l)
}

pub fn neg_s2(l: f64, v: f64) -> f64 {
    ind(-2.0 * l < v && v < 0.0) + (v + l) / l * ind(-2.0 * l < v && v < -l)
}

pub fn neg_h3(l: f64, v: f64) -> f64 {
    let m = v.min(0.0);
    -0.5 * m * m
        + (-2.0 * v.powi(3) - 3.0 * l * v * v + l.powi(3)) / (6.0 * l)
            * ind(-2.0 * l < v && v < -l)
        + (3.0 * v * v - 7.0 * l * l) / 6.0 * ind(v <= -2.0 * l)
}

pub fn neg_h1(l: f64, v: f64) -> f64 {
    let m = v.min(0.0);
    -0.5 * m * m
        + (-v.powi(3) - l * v * v + l * l * v + l.powi(3)) / (2.0 * l)
            * ind(-2.0 * l < v && v < -l)
        + 0.5 * (v * v - 3.0 * l * v - 7.0 * l * l) * ind(v <= -2.0 * l)
}

pub fn neg_h2(l: f64, v: f64) -> f64 {
    -(v.powi(4) - 3.0 * l * l * v * v - 2.0 * l.powi(3) * v) / (12.0 * l)
        * ind(-2.0 * l < v && v < -l)
        - (9.0 * l * v * v + 14.0 * l * l * v) / 12.0 * ind(v <= -2.0 * l)
}

pub fn neg_half_s2_v2(l: f64, v: f64) -> f64 {
    let m = v.min(0.0);
    0.5 * m * m + v * v * (v + l) / (2.0 * l) * ind(-2.0 * l < v && v < -l)
        - 0.5 * v * v * ind(v <= -2.0 * l)
}

/// Compositional `S_ℓ(v±)` as a jet in `v`.
fn comp(ell: f64, part: Part, v: f64) -> Jet {
    let x = Jet::var(v);
    let w = match part {
        Part::Pos => x.pos(),
        Part::Neg => x.neg_part(),
    };
    jet::sell(ell, w)
}

/// `v ↦ S'_ℓ(v±) v` as a jet, with `S'_ℓ` in closed form.
fn comp_beta(ell: f64, part: Part, v: f64) -> Jet {
    let x = Jet::var(v);
    let w = match part {
        Part::Pos => x.pos(),
        Part::Neg => x.neg_part(),
    };
    jet::sell_prime(ell, w) * x
}

type Scalar = fn(f64, f64) -> f64;

/// One identity: a formula under test and its independent reference.
pub struct Identity {
    pub name: &'static str,
    pub group: &'static str,
    pub formula: Box<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    pub reference: Box<dyn Fn(f64, f64) -> f64 + Send + Sync>,
}

fn identity(
    group: &'static str,
    name: &'static str,
    formula: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    reference: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
) -> Identity {
    Identity {
        name,
        group,
        formula: Box::new(formula),
        reference: Box::new(reference),
    }
}

/// The 14 expanded positive/negative-part formulas, in the order
/// `S, S', S'', S - S'v, 3S - 2S'v, Sv - ½S'v², ½S''v²` for `v₊` then `v₋`.
pub fn part_expansions() -> Vec<Identity> {
    let table: [(Part, &'static str, Scalar, fn(Jet, f64) -> f64); 14] = [
        (Part::Pos, "S(v+)", pos_s, |j, _| j.v),
        (Part::Pos, "S(v+)'", pos_s1, |j, _| j.d1),
        (Part::Pos, "S(v+)''", pos_s2, |j, _| j.d2),
        (Part::Pos, "S(v+) - S(v+)'v", pos_h3, |j, v| j.v - j.d1 * v),
        (Part::Pos, "3S(v+) - 2S(v+)'v", pos_h1, |j, v| 3.0 * j.v - 2.0 * j.d1 * v),
        (Part::Pos, "S(v+)v - S(v+)'v^2/2", pos_h2, |j, v| j.v * v - 0.5 * j.d1 * v * v),
        (Part::Pos, "S(v+)''v^2/2", pos_half_s2_v2, |j, v| 0.5 * j.d2 * v * v),
        (Part::Neg, "S(v-)", neg_s, |j, _| j.v),
        (Part::Neg, "S(v-)'", neg_s1, |j, _| j.d1),
        (Part::Neg, "S(v-)''", neg_s2, |j, _| j.d2),
        (Part::Neg, "S(v-) - S(v-)'v", neg_h3, |j, v| j.v - j.d1 * v),
        (Part::Neg, "3S(v-) - 2S(v-)'v", neg_h1, |j, v| 3.0 * j.v - 2.0 * j.d1 * v),
        (Part::Neg, "S(v-)v - S(v-)'v^2/2", neg_h2, |j, v| j.v * v - 0.5 * j.d1 * v * v),
        (Part::Neg, "S(v-)''v^2/2", neg_half_s2_v2, |j, v| 0.5 * j.d2 * v * v),
    ];
    table
        .into_iter()
        .map(|(part, name, f, r)| {
            identity("part expansions", name, f, move |l, v| r(comp(l, part, v), v))
        })
        .collect()
}

/// Every identity of the family, each against an independent reference.
pub fn catalog() -> Vec<Identity> {
    let mut out = vec![
        identity("derivatives", "S'_l closed form", sell_prime, |l, v| {
            jet::sell(l, Jet::var(v)).d1
        }),
        identity("derivatives", "S''_l closed form", sell_second, |l, v| {
            jet::sell(l, Jet::var(v)).d2
        }),
        identity("derivatives", "S''_l from S'_l", sell_second, |l, v| {
            jet::sell_prime(l, Jet::var(v)).d1
        }),
        identity("derivatives", "S'''_l closed form", sell_third, |l, v| {
            jet::sell(l, Jet::var(v)).d3
        }),
    ];
    for part in [Part::Pos, Part::Neg] {
        let (tag_s1, tag_s2, tag_h3, tag_h1, tag_h2, tag_b, tag_b1, tag_b2) = match part {
            Part::Pos => (
                "S(v+)' = S'(v+)",
                "S(v+)'' = S''(v+)1{v+ != 0}",
                "S(v+) - S(v+)'v by branches",
                "3S(v+) - 2S(v+)'v by branches",
                "S(v+)v - S(v+)'v^2/2 by branches",
                "beta+",
                "beta+'",
                "beta+''",
            ),
            Part::Neg => (
                "S(v-)' = S'(v-)",
                "S(v-)'' = S''(v-)1{v- != 0}",
                "S(v-) - S(v-)'v by branches",
                "3S(v-) - 2S(v-)'v by branches",
                "S(v-)v - S(v-)'v^2/2 by branches",
                "beta-",
                "beta-'",
                "beta-''",
            ),
        };
        let ent = move |l: f64| match part {
            Part::Pos => Entropy::SellPos { ell: l },
            Part::Neg => Entropy::SellNeg { ell: l },
        };
        out.extend([
            identity(
                "compositions",
                tag_s1,
                move |l, v| ent(l).s_prime(v),
                move |l, v| comp(l, part, v).d1,
            ),
            identity(
                "compositions",
                tag_s2,
                move |l, v| ent(l).s_second(v),
                move |l, v| comp(l, part, v).d2,
            ),
            identity(
                "compositions",
                tag_h3,
                move |l, v| h3_branches(l, part, v),
                move |l, v| {
                    let j = comp(l, part, v);
                    j.v - j.d1 * v
                },
            ),
            identity(
                "compositions",
                tag_h1,
                move |l, v| h1_branches(l, part, v),
                move |l, v| {
                    let j = comp(l, part, v);
                    3.0 * j.v - 2.0 * j.d1 * v
                },
            ),
            identity(
                "compositions",
                tag_h2,
                move |l, v| h2_branches(l, part, v),
                move |l, v| {
                    let j = comp(l, part, v);
                    j.v * v - 0.5 * j.d1 * v * v
                },
            ),
            identity(
                "beta",
                tag_b,
                move |l, v| beta(l, part, v),
                move |l, v| comp_beta(l, part, v).v,
            ),
            identity(
                "beta",
                tag_b1,
                move |l, v| beta_prime(l, part, v),
                move |l, v| comp_beta(l, part, v).d1,
            ),
            identity(
                "beta",
                tag_b2,
                move |l, v| beta_second(l, part, v),
                move |l, v| comp_beta(l, part, v).d2,
            ),
        ]);
        // The H maps of the entropy type itself against the branch forms.
        out.extend([
            identity(
                "h functions",
                match part {
                    Part::Pos => "h1 of SellPos",
                    Part::Neg => "h1 of SellNeg",
                },
                move |l, v| ent(l).h1(v),
                move |l, v| h1_branches(l, part, v),
            ),
            identity(
                "h functions",
                match part {
                    Part::Pos => "h2 of SellPos",
                    Part::Neg => "h2 of SellNeg",
                },
                move |l, v| ent(l).h2(v),
                move |l, v| h2_branches(l, part, v),
            ),
            identity(
                "h functions",
                match part {
                    Part::Pos => "h3 of SellPos",
                    Part::Neg => "h3 of SellNeg",
                },
                move |l, v| ent(l).h3(v),
                move |l, v| h3_branches(l, part, v),
            ),
        ]);
    }
    out.extend(part_expansions());
    out
}

/// `|a - b| / max(1, |a|, |b|)`.
pub fn mixed_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / 1f64.max(a.abs()).max(b.abs())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IdentityResult {
    pub group: String,
    pub name: String,
    pub ell: f64,
    pub samples: usize,
    pub max_error: f64,
    pub worst_v: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IdentityReport {
    pub tolerance: f64,
    pub ells: Vec<f64>,
    pub span: f64,
    pub steps_per_ell: usize,
    pub part_expansions: usize,
    pub results: Vec<IdentityResult>,
    pub convexity_ok: bool,
    pub splitting_ok: bool,
    pub continuity_max_jump: f64,
    pub coercivity_alpha: f64,
    pub coercivity_min_margin: f64,
    pub coercivity_ok: bool,
    pub passed: bool,
}

/// Sample grid `v_i = i ℓ / steps` covering `[-span ℓ, span ℓ]`; break points
/// `0, ±ℓ, ±2ℓ` are hit exactly when `steps` divides evenly.
pub fn sample_grid(ell: f64, span: f64, steps: usize) -> Vec<f64> {
    let m = (span * steps as f64).round() as i64;
    (-m..=m).map(|i| i as f64 * ell / steps as f64).collect()
}

/// `H2 - ((1-α)/2)|v|^{2+α}` for `S = v(|v|+1)^α`, minimized over `[-vmax, vmax]`.
pub fn coercivity_margin(alpha: f64, vmax: f64, samples: usize) -> f64 {
    (0..=samples)
        .map(|i| -vmax + 2.0 * vmax * i as f64 / samples as f64)
        .map(|v| {
            let (s, s1, _) = power_alpha_unchecked(alpha, v);
            let h2 = s * v - 0.5 * s1 * v * v;
            h2 - 0.5 * (1.0 - alpha) * v.abs().powf(2.0 + alpha)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Largest one-sided jump of `S_ℓ` and `S'_ℓ` across `±ℓ, ±2ℓ`.
pub fn continuity_jump(ell: f64) -> f64 {
    let mut worst = 0.0f64;
    for bp in [-2.0 * ell, -ell, ell, 2.0 * ell] {
        let (lo, hi) = (f64::next_down(bp), f64::next_up(bp));
        for f in [sell as Scalar, sell_prime as Scalar] {
            worst = worst.max((f(ell, lo) - f(ell, bp)).abs());
            worst = worst.max((f(ell, hi) - f(ell, bp)).abs());
        }
    }
    worst
}

pub fn verify(ells: &[f64], span: f64, steps_per_ell: usize, tolerance: f64) -> IdentityReport {
    let catalog = catalog();
    let mut results = Vec::new();
    let mut convexity_ok = true;
    let mut splitting_ok = true;
    let mut continuity_max_jump = 0.0f64;
    for &ell in ells {
        let vs = sample_grid(ell, span, steps_per_ell);
        for id in &catalog {
            let (mut max_error, mut worst_v) = (0.0f64, f64::NAN);
            for &v in &vs {
                let e = mixed_error((id.formula)(ell, v), (id.reference)(ell, v));
                if !(e <= max_error) {
                    max_error = e;
                    worst_v = v;
                }
            }
            results.push(IdentityResult {
                group: id.group.into(),
                name: id.name.into(),
                ell,
                samples: vs.len(),
                max_error,
                worst_v,
                passed: max_error <= tolerance,
            });
        }
        for &v in &vs {
            convexity_ok &= sell_second(ell, v) >= 0.0;
            let whole = Entropy::Sell { ell }.s(v);
            let split = Entropy::SellPos { ell }.s(v) + Entropy::SellNeg { ell }.s(v);
            splitting_ok &= whole == split;
        }
        continuity_max_jump = continuity_max_jump.max(continuity_jump(ell));
    }
    let coercivity_alpha = 0.5;
    let coercivity_min_margin = coercivity_margin(coercivity_alpha, 50.0, 100_000);
    let coercivity_ok = coercivity_min_margin >= 0.0;
    let passed = results.iter().all(|r| r.passed)
        && convexity_ok
        && splitting_ok
        && continuity_max_jump <= 1e-12
        && coercivity_ok;
    IdentityReport {
        tolerance,
        ells: ells.to_vec(),
        span,
        steps_per_ell,
        part_expansions: part_expansions().len(),
        results,
        convexity_ok,
        splitting_ok,
        continuity_max_jump,
        coercivity_alpha,
        coercivity_min_margin,
        coercivity_ok,
        passed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_passes_on_small_grid() {
        let r = verify(&[1.0, 3.0], 4.0, 20, 1e-12);
        if let Some(res) = r.results.iter().find(|r| !r.passed) {
            panic!("{} (ell={}) error {} at v={}", res.name, res.ell, res.max_error, res.worst_v);
        }
        assert!(r.passed);
        assert_eq!(r.part_expansions, 14);
    }

    #[test]
    fn power_alpha_derivatives_match_jets() {
        for alpha in [0.1, 0.5, 0.9] {
            for v in [-7.5, -1.0, -0.3, 0.2, 1.0, 4.0, 33.0] {
                let x = Jet::var(v);
                let j = x * (x.abs() + 1.0).powf(alpha);
                let (s, s1, s2) = power_alpha_unchecked(alpha, v);
                assert!(mixed_error(s, j.v) < 1e-13);
                assert!(mixed_error(s1, j.d1) < 1e-13);
                assert!(mixed_error(s2, j.d2) < 1e-13);
            }
        }
    }
}
