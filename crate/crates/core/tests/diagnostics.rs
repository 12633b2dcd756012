use std::collections::BTreeMap;
use std::f64::consts::PI;

use proptest::prelude::*;
use sch_core::diagnostics::{
    commutator_errors, commutator_errors_extended, commutator_sweep, defect_estimate, defect_field, diagnose,
    energy_balance_residual, energy_balance_residual_with, energy_inequality_check, entropy_residual,
    entropy_residual_u, higher_integrability, space_time_lq, translation_functional, translation_of_series,
    wave_breaking_detector, DiagnoseOptions, ItoQuadrature,
};
use sch_core::entropy::{EntropyKind, EntropySpec};
use sch_core::parallel::Execution;
use sch_core::sde::{simulate_path, InitialSpec, NoiseCoef, Scheme, SigmaSpec, SimConfig, Trajectory};
use sch_core::{Error, Field, Grid};

fn constant_initial(c: f64) -> InitialSpec {
    InitialSpec::Fourier {
        mean: c,
        cos: BTreeMap::new(),
        sin: BTreeMap::new(),
    }
}

fn run(config: &SimConfig) -> Trajectory {
    simulate_path(config, 0).unwrap()
}

fn short(sigma: SigmaSpec, initial: InitialSpec) -> SimConfig {
    SimConfig::new(64, 0.05, 1e-3, 0.05, sigma, initial)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[test]
fn constant_state_has_zero_residuals() {
    let c = short(SigmaSpec::Sin(1), constant_initial(1.5));
    let traj = run(&c);
    let noise = c.noise().unwrap();
    let phi = Field::from_fn(traj.grid(), |x| 1.0 + 0.5 * x.cos());
    let spec = EntropySpec::with_ell(EntropyKind::Sell, 5.0);
    let e = energy_balance_residual(&traj, &noise, c.epsilon).unwrap();
    assert!(e.max_abs_residual() < 1e-12, "{}", e.max_abs_residual());
    let sq = entropy_residual(&traj, &spec, &noise, c.epsilon, &phi).unwrap();
    assert!(sq.max_abs_residual() < 1e-12, "{}", sq.max_abs_residual());
    let su = entropy_residual_u(&traj, &spec, &noise, c.epsilon, &phi).unwrap();
    assert!(su.max_abs_residual() < 1e-12, "{}", su.max_abs_residual());
}

#[test]
fn deterministic_inviscid_energy_balance_closes() {
    let mut c = SimConfig::new(64, 0.0, 1e-3, 0.1, SigmaSpec::Zero, InitialSpec::sine());
    c.scheme = Scheme::Lawson4;
    let traj = run(&c);
    let e = energy_balance_residual(&traj, &c.noise().unwrap(), 0.0).unwrap();
    // Every term is zero, so the relative residual is round-off over round-off.
    assert!(e.max_abs_residual() < 1e-12 * e.energy[0], "{}", e.max_abs_residual());
    assert!(e.stochastic.iter().all(|&s| s == 0.0));
}

#[test]
fn constant_sigma_has_no_noise_terms() {
    let c = short(SigmaSpec::Const(0.7), InitialSpec::sine());
    let traj = run(&c);
    let noise = c.noise().unwrap();
    let e = energy_balance_residual(&traj, &noise, c.epsilon).unwrap();
    // Both the martingale integrand and the (σ²)_xx drift vanish.
    assert!(max_abs(&e.stochastic) < 1e-12, "{}", max_abs(&e.stochastic));
    let phi = Field::constant(traj.grid(), 1.0);
    let r = entropy_residual(&traj, &EntropySpec::new(EntropyKind::Square), &noise, c.epsilon, &phi).unwrap();
    for (name, series) in &r.terms {
        if name.contains("sigma_sq_xx") || name.contains("zero_order") {
            assert!(max_abs(series) < 1e-12, "{name}: {}", max_abs(series));
        }
    }
}

#[test]
fn missing_increments_are_reported() {
    let c = short(SigmaSpec::Sin(1), InitialSpec::sine());
    let mut traj = run(&c);
    traj.wiener.clear();
    let err = energy_balance_residual(&traj, &c.noise().unwrap(), c.epsilon).unwrap_err();
    assert!(matches!(err, Error::MissingIncrements), "{err:?}");
}

#[test]
fn milstein_quadrature_shrinks_energy_residual() {
    let residual = |dt: f64| {
        let mut c = SimConfig::new(64, 0.05, dt, 0.2, SigmaSpec::Sin(1), InitialSpec::sine());
        c.scheme = Scheme::MilsteinImex;
        c.seed = 11;
        let traj = run(&c);
        energy_balance_residual_with(&traj, &c.noise().unwrap(), c.epsilon, ItoQuadrature::Milstein)
            .unwrap()
            .l1_in_time()
    };
    let (a, b) = (residual(1e-3), residual(5e-4));
    assert!(b < a, "{a} -> {b}");
}

#[test]
fn sell_above_sup_norm_matches_square() {
    let c = short(SigmaSpec::Sin(1), InitialSpec::sine());
    let traj = run(&c);
    let qmax = traj.snapshots.iter().map(|s| s.q.sup_norm()).fold(0.0, f64::max);
    let noise = c.noise().unwrap();
    let phi = Field::from_fn(traj.grid(), |x| 1.0 + 0.5 * x.cos());
    let sell = EntropySpec::with_ell(EntropyKind::Sell, 2.0 * qmax + 1.0);
    let square = EntropySpec::new(EntropyKind::Square);
    let a = entropy_residual(&traj, &sell, &noise, c.epsilon, &phi).unwrap();
    let b = entropy_residual(&traj, &square, &noise, c.epsilon, &phi).unwrap();
    for (x, y) in a.residual.iter().zip(&b.residual) {
        assert!((x - y).abs() <= 1e-14 * (1.0 + y.abs()), "{x} vs {y}");
    }
    assert_eq!(a.functional, b.functional);
}

#[test]
fn square_entropy_sums_to_half_the_energy() {
    let c = short(SigmaSpec::Sin(1), InitialSpec::sine());
    let traj = run(&c);
    let noise = c.noise().unwrap();
    let phi = Field::constant(traj.grid(), 1.0);
    let square = EntropySpec::new(EntropyKind::Square);
    let sq = entropy_residual(&traj, &square, &noise, c.epsilon, &phi).unwrap();
    let su = entropy_residual_u(&traj, &square, &noise, c.epsilon, &phi).unwrap();
    let e = energy_balance_residual(&traj, &noise, c.epsilon).unwrap();
    for k in 0..e.energy.len() {
        let half = 0.5 * e.energy[k];
        let sum = sq.functional[k] + su.functional[k];
        assert!((sum - half).abs() < 1e-12 * half.max(1.0), "{sum} vs {half}");
    }
}

#[test]
fn translation_closed_form() {
    let t_end = 2.0;
    let times: Vec<f64> = (0..=40).map(|k| k as f64 * t_end / 40.0).collect();
    let grid = Grid::new(64).unwrap();
    let phi = Field::from_fn(grid, f64::cos);
    let q: Vec<Field> = times.iter().map(|&t| Field::from_fn(grid, |x| t * x.cos())).collect();
    for tau in [0.05, 0.3, 1.0, 1.7] {
        let v = translation_functional(&q, &times, &phi, tau).unwrap();
        let exact = tau * PI * (t_end - tau);
        assert!((v - exact).abs() < 1e-10, "tau {tau}: {v} vs {exact}");
    }
    let still: Vec<Field> = times.iter().map(|_| Field::from_fn(grid, f64::sin)).collect();
    assert!(translation_functional(&still, &times, &phi, 0.5).unwrap().abs() < 1e-14);
    assert!(translation_functional(&q, &times, &phi, t_end).is_err());
    assert!(translation_functional(&q, &times, &phi, -0.1).is_err());
}

proptest! {
    #[test]
    fn translation_nonnegative_and_homogeneous(
        f in prop::collection::vec(-10.0f64..10.0, 3..30),
        frac in 0.0f64..0.95,
        scale in -5.0f64..5.0,
    ) {
        let times: Vec<f64> = (0..f.len()).map(|k| 0.1 * k as f64).collect();
        let tau = frac * times[times.len() - 1];
        let v = translation_of_series(&times, &f, tau).unwrap();
        prop_assert!(v >= 0.0);
        let scaled: Vec<f64> = f.iter().map(|x| scale * x).collect();
        let w = translation_of_series(&times, &scaled, tau).unwrap();
        prop_assert!((w - scale.abs() * v).abs() <= 1e-9 * (1.0 + v.abs() * scale.abs()));
    }

    #[test]
    fn defect_field_is_antisymmetric(
        a in prop::collection::vec(-20.0f64..20.0, 16),
        b in prop::collection::vec(-20.0f64..20.0, 16),
    ) {
        let grid = Grid::new(16).unwrap();
        let fa = Field::new(grid, a).unwrap();
        let fb = Field::new(grid, b).unwrap();
        let ab = defect_field(&fa, &fb).unwrap();
        let ba = defect_field(&fb, &fa).unwrap();
        prop_assert!(ab.values().iter().zip(ba.values()).all(|(x, y)| *x == -*y));
        prop_assert!(defect_field(&fa, &fa).unwrap().values().iter().all(|&x| x == 0.0));
    }
}

#[test]
fn commutators_vanish_in_trivial_cases() {
    let grid = Grid::new(256).unwrap();
    let w = Field::from_fn(grid, |x| x.sin() + 0.3 * (2.0 * x).cos());
    let constant_sigma = NoiseCoef::from_spec(&SigmaSpec::Const(1.0), grid, None).unwrap();
    let e = commutator_errors(&w, &constant_sigma, 0.2).unwrap();
    assert!(e.e2 < 1e-12, "{}", e.e2);
    let sin_sigma = NoiseCoef::from_spec(&SigmaSpec::Sin(1), grid, None).unwrap();
    let flat = Field::constant(grid, 0.8);
    let e = commutator_errors(&flat, &sin_sigma, 0.2).unwrap();
    assert!(e.e1 < 1e-12 && e.e2 < 1e-12 && e.e3 < 1e-12, "{e:?}");
    let err = commutator_errors(&w, &sin_sigma, grid.h()).unwrap_err();
    assert!(matches!(err, Error::UnderResolved { .. }), "{err:?}");
}

#[test]
fn commutators_decrease_with_radius() {
    let grid = Grid::new(512).unwrap();
    let w = Field::from_fn(grid, |x| x.sin() + 0.5 * (3.0 * x).cos());
    let noise = NoiseCoef::from_spec(&SigmaSpec::Sin(1), grid, None).unwrap();
    let rows = commutator_sweep(&w, &noise, &[0.4, 0.2, 0.1, 0.05]).unwrap();
    for pair in rows.windows(2) {
        assert!(pair[1].e1 < pair[0].e1 && pair[1].e2 < pair[0].e2 && pair[1].e3 < pair[0].e3);
    }
    let spec = EntropySpec::with_ell(EntropyKind::Sell, 5.0);
    let phi = Field::constant(grid, 1.0);
    let ext = commutator_errors_extended(&w, &noise, 0.2, &spec, &phi).unwrap();
    assert!(ext.second_order.unwrap() >= 0.0);
    assert_eq!((ext.e1, ext.e2, ext.e3), (rows[1].e1, rows[1].e2, rows[1].e3));
}

#[test]
fn breaking_detector() {
    let c = short(SigmaSpec::Zero, InitialSpec::sine());
    let traj = run(&c);
    let d = wave_breaking_detector(&traj, 10.0).unwrap();
    assert_eq!(d.time, None);
    assert_eq!(d.min_q.len(), traj.snapshots.len());
    let flat = run(&short(SigmaSpec::Zero, constant_initial(2.0)));
    assert_eq!(wave_breaking_detector(&flat, 1e-6).unwrap().time, None);
    // sin x has min q = -1 from the start.
    assert_eq!(wave_breaking_detector(&traj, 0.5).unwrap().time, Some(0.0));
    assert!(wave_breaking_detector(&traj, 0.0).is_err());
    assert!(wave_breaking_detector(&traj, -1.0).is_err());
}

#[test]
fn defect_sweep() {
    let mut a = SimConfig::new(32, 0.1, 1e-3, 0.02, SigmaSpec::Sin(1), InitialSpec::sine());
    a.n_paths = 2;
    a.record_every = 5;
    let mut b = a.clone();
    b.epsilon = 0.02;
    let est = defect_estimate(&[a.clone(), b.clone()], 0.02, Execution::Sequential).unwrap();
    assert_eq!(est.series.len(), 2);
    assert_eq!(est.times.len(), 5);
    let reference = &est.series[1];
    assert!(reference.integral.iter().all(|m| m.mean == 0.0));
    assert!(reference.l1.iter().all(|m| m.mean == 0.0));
    // Same start, so the proxy begins at zero and then opens up.
    assert_eq!(est.series[0].l1[0].mean, 0.0);
    assert!(est.series[0].l1.last().unwrap().mean > 0.0);

    assert!(defect_estimate(&[a.clone(), b.clone()], 0.1, Execution::Sequential).is_err());
    let mut other = b.clone();
    other.n = 64;
    assert!(defect_estimate(&[a.clone(), other], 0.02, Execution::Sequential).is_err());
    assert!(defect_estimate(&[], 0.02, Execution::Sequential).is_err());
}

#[test]
fn higher_integrability_cases() {
    let mut flat = short(SigmaSpec::Sin(1), constant_initial(1.0));
    flat.n_paths = 2;
    let h = higher_integrability(&flat, 0.5, Execution::Sequential).unwrap();
    assert_eq!(h.estimate.mean, 0.0);

    let mut det = short(SigmaSpec::Zero, InitialSpec::sine());
    det.n_paths = 3;
    let h = higher_integrability(&det, 0.5, Execution::Sequential).unwrap();
    let single = space_time_lq(&run(&det), 0.5);
    assert_eq!(h.estimate.mean, single);
    assert_eq!(h.estimate.variance, 0.0);
    assert!(higher_integrability(&det, 0.0, Execution::Sequential).is_err());
    assert!(higher_integrability(&det, 1.0, Execution::Sequential).is_err());
}

#[test]
fn constant_sigma_energy_inequality_holds() {
    let mut c = SimConfig::new(32, 0.05, 1e-3, 0.1, SigmaSpec::Const(0.5), InitialSpec::sine());
    c.n_paths = 8;
    let r = energy_inequality_check(&c, 10, Execution::Sequential).unwrap();
    assert!(r.holds, "{r:?}");
    assert_eq!(r.excluded, 0);
    assert!(!r.pairs.is_empty());
}

#[test]
fn diagnose_series_cover_every_snapshot() {
    let mut c = short(SigmaSpec::Sin(1), InitialSpec::sine());
    c.record_every = 5;
    let traj = run(&c);
    let report = diagnose(&traj, &c, &DiagnoseOptions::default()).unwrap();
    assert_eq!(report.times.len(), traj.snapshots.len());
    assert_eq!(report.energy_series.len(), traj.snapshots.len());
    for (name, series) in &report.residual_series {
        assert_eq!(series.len(), traj.snapshots.len(), "{name}");
    }
    assert_eq!(report.metadata.quadrature, ItoQuadrature::LeftPoint);
    assert_eq!(report.metadata.seed, c.seed);
}
