//! Executes a validated plan and writes its artifacts and manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use sch_core::diagnostics::{
    commutator_errors, commutator_errors_extended, defect_estimate, diagnose, DiagnoseOptions,
};
use sch_core::entropy::explicit;
use sch_core::grid::snapshot;
use sch_core::kernel::dual_path_check;
use sch_core::parallel::{worker_count, Execution};
use sch_core::sde::{run_records, EnsembleSummary, NoiseCoef, PathRecord, SigmaSpec, Simulation, Trajectory};
use sch_core::{Field, Grid};

use crate::error::CliError;
use crate::plan::{ExperimentPlan, ModeParams};

pub const TOOL: &str = "sch";
pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Artifact {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Collects files under the output directory together with their digests.
struct Outputs {
    dir: PathBuf,
    artifacts: Vec<Artifact>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn csv_bytes<R: Serialize>(rows: impl IntoIterator<Item = R>) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Io {
            path: PathBuf::from("<csv>"),
            message: e.to_string(),
        })?;
    }
    w.into_inner().map_err(|e| CliError::Io {
        path: PathBuf::from("<csv>"),
        message: e.to_string(),
    })
}

fn json_bytes<T: Serialize + ?Sized>(v: &T) -> Vec<u8> {
    let mut b = serde_json::to_vec_pretty(v).expect("report serializes");
    b.push(b'\n');
    b
}

fn trajectory_bytes(traj: &Trajectory) -> Vec<u8> {
    let mut buf = Vec::new();
    for s in &traj.snapshots {
        buf.extend_from_slice(&snapshot::encode(&s.u));
    }
    buf
}

impl Outputs {
    fn create(dir: &Path) -> Result<Outputs, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let probe = dir.join(".sch-write-probe");
        fs::write(&probe, b"").map_err(|e| CliError::io(&probe, e))?;
        fs::remove_file(&probe).map_err(|e| CliError::io(&probe, e))?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            artifacts: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.artifacts.push(Artifact {
            path: name.to_string(),
            bytes: bytes.len() as u64,
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    fn json<T: Serialize + ?Sized>(&mut self, name: &str, v: &T) -> Result<(), CliError> {
        self.write(name, &json_bytes(v))
    }

    fn csv<R: Serialize>(&mut self, name: &str, rows: impl IntoIterator<Item = R>) -> Result<(), CliError> {
        let b = csv_bytes(rows)?;
        self.write(name, &b)
    }

    fn trajectory(&mut self, stem: &str, traj: &Trajectory) -> Result<(), CliError> {
        self.write(&format!("{stem}.schf"), &trajectory_bytes(traj))?;
        self.json(&format!("{stem}.json"), &traj.sidecar())
    }
}

/// SHA-256 of the resolved plan (output directory excluded).
pub fn plan_hash(plan: &ExperimentPlan) -> String {
    let mut p = plan.clone();
    p.output_dir = None;
    sha256_hex(&serde_json::to_vec(&p).expect("plan serializes"))
}

/// Digest over the sorted artifact list; independent of wall time and of
/// the output directory.
pub fn artifacts_hash(artifacts: &[Artifact]) -> String {
    let mut sorted: Vec<&Artifact> = artifacts.iter().collect();
    sorted.sort_by(|a, b| a.path.cmp(&b.path));
    let mut h = Sha256::new();
    for a in sorted {
        h.update(a.path.as_bytes());
        h.update(b"\0");
        h.update(a.sha256.as_bytes());
        h.update(b"\n");
    }
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub core_version: &'static str,
    pub mode: &'static str,
    pub config_hash: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sim_config_hash: Option<String>,
    pub plan: ExperimentPlan,
    pub seeds: Value,
    pub threads: usize,
    pub parallel: bool,
    pub wall_time_s: f64,
    pub artifacts: Vec<Artifact>,
    pub artifacts_hash: String,
    /// Outcome of the mode's own check, when it has one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub check_passed: Option<bool>,
}

/// Result of [`run`]: the manifest is always written; `failure` carries a
/// failed check or a path that stopped early.
#[derive(Debug)]
pub struct RunOutcome {
    pub manifest: Manifest,
    pub failure: Option<CliError>,
}

pub fn run(plan: &ExperimentPlan, output_dir: &Path) -> Result<RunOutcome, CliError> {
    run_with(plan, output_dir, Execution::default())
}

pub fn run_with(plan: &ExperimentPlan, output_dir: &Path, exec: Execution) -> Result<RunOutcome, CliError> {
    plan.validate()?;
    let mut out = Outputs::create(output_dir)?;
    let start = Instant::now();
    let mode_result = match &plan.params {
        ModeParams::Simulate(p) => simulate(plan, p.path_index, &mut out),
        ModeParams::Ensemble => ensemble(plan, exec, &mut out),
        ModeParams::Diagnose(p) => diagnose_path(plan, p, &mut out),
        ModeParams::Sweep(_) => sweep(plan, exec, &mut out),
        ModeParams::EntropyCheck(p) => entropy_check(p, &mut out),
        ModeParams::KernelCheck(p) => kernel_check(p, &mut out),
        ModeParams::CommutatorStudy(p) => commutator_study(plan, p, &mut out),
    }?;
    let wall_time_s = start.elapsed().as_secs_f64();
    let seeds = match (&plan.config, &plan.params) {
        (_, ModeParams::KernelCheck(k)) => json!({ "seed": k.seed }),
        (Some(c), _) => json!({ "seed": c.seed, "n_paths": c.n_paths }),
        (None, _) => Value::Null,
    };
    let manifest = Manifest {
        tool: TOOL,
        version: env!("CARGO_PKG_VERSION"),
        core_version: sch_core::VERSION,
        mode: plan.mode.name(),
        config_hash: plan_hash(plan),
        sim_config_hash: plan.config.as_ref().map(|c| c.hash()),
        plan: plan.clone(),
        seeds,
        threads: worker_count(),
        parallel: exec.is_parallel(),
        wall_time_s,
        artifacts_hash: artifacts_hash(&out.artifacts),
        artifacts: out.artifacts.clone(),
        check_passed: mode_result.check_passed,
    };
    let path = output_dir.join(MANIFEST);
    fs::write(&path, json_bytes(&manifest)).map_err(|e| CliError::io(&path, e))?;
    Ok(RunOutcome {
        manifest,
        failure: mode_result.failure,
    })
}

#[derive(Default)]
struct ModeResult {
    check_passed: Option<bool>,
    failure: Option<CliError>,
}

#[derive(Serialize)]
struct SeriesRow {
    t: f64,
    step: u64,
    h1_energy: f64,
    min_q: f64,
    sup_u: f64,
    sup_q: f64,
}

fn series_rows(traj: &Trajectory) -> Vec<SeriesRow> {
    traj.snapshots
        .iter()
        .zip(&traj.steps)
        .map(|(s, &step)| SeriesRow {
            t: s.t,
            step,
            h1_energy: s.h1_energy(),
            min_q: s.q.min(),
            sup_u: s.u.sup_norm(),
            sup_q: s.q.sup_norm(),
        })
        .collect()
}

fn simulate(plan: &ExperimentPlan, path_index: u64, out: &mut Outputs) -> Result<ModeResult, CliError> {
    let sim = Simulation::new(plan.sim_config()?)?;
    let outcome = sim.run(path_index)?;
    let stem = format!("path_{path_index}");
    out.trajectory(&stem, &outcome.trajectory)?;
    out.csv(&format!("{stem}_series.csv"), series_rows(&outcome.trajectory))?;
    Ok(ModeResult {
        check_passed: None,
        failure: outcome.failure.map(CliError::Core),
    })
}

#[derive(Serialize)]
struct PathRow {
    path_index: u64,
    completed: bool,
    failure_t: Option<f64>,
    breaking_time: Option<f64>,
    lq_time_integral: f64,
    final_h1: f64,
    final_min_q: f64,
}

impl From<&PathRecord> for PathRow {
    fn from(r: &PathRecord) -> PathRow {
        PathRow {
            path_index: r.path_index,
            completed: r.failure.is_none(),
            failure_t: r.failure.as_ref().and_then(|f| f.t),
            breaking_time: r.breaking_time,
            lq_time_integral: r.lq_time_integral,
            final_h1: *r.h1.last().expect("initial snapshot"),
            final_min_q: *r.min_q.last().expect("initial snapshot"),
        }
    }
}

#[derive(Serialize)]
struct EnsembleRow {
    t: f64,
    h1_mean: f64,
    h1_se: f64,
    lq_mean: f64,
    lq_se: f64,
    sup_u_mean: f64,
    sup_q_mean: f64,
}

fn ensemble_rows(s: &EnsembleSummary) -> Vec<EnsembleRow> {
    (0..s.times.len())
        .map(|k| EnsembleRow {
            t: s.times[k],
            h1_mean: s.h1[k].mean,
            h1_se: s.h1[k].std_error,
            lq_mean: s.lq[k].mean,
            lq_se: s.lq[k].std_error,
            sup_u_mean: s.sup_u[k].mean,
            sup_q_mean: s.sup_q[k].mean,
        })
        .collect()
}

fn ensemble(plan: &ExperimentPlan, exec: Execution, out: &mut Outputs) -> Result<ModeResult, CliError> {
    let config = plan.sim_config()?;
    let (hash, records) = run_records(config, exec)?;
    let summary = EnsembleSummary::from_records(config, &hash, &records);
    out.json("summary.json", &summary)?;
    out.csv("paths.csv", records.iter().map(PathRow::from))?;
    out.csv("ensemble_series.csv", ensemble_rows(&summary))?;
    Ok(ModeResult::default())
}

fn diagnose_path(
    plan: &ExperimentPlan,
    p: &crate::plan::DiagnoseParams,
    out: &mut Outputs,
) -> Result<ModeResult, CliError> {
    let config = plan.sim_config()?;
    let sim = Simulation::new(config)?;
    let outcome = sim.run(p.path_index)?;
    let traj = &outcome.trajectory;
    let options = DiagnoseOptions {
        entropy: p.entropy,
        quadrature: p.quadrature,
    };
    let stem = format!("path_{}", p.path_index);
    out.trajectory(&stem, traj)?;
    if traj.snapshots.len() < 2 {
        return Ok(ModeResult {
            check_passed: None,
            failure: Some(outcome.failure.map(CliError::Core).unwrap_or_else(|| {
                CliError::Core(sch_core::Error::InvalidArgument("fewer than two snapshots".into()))
            })),
        });
    }
    let report = diagnose(traj, config, &options)?;
    out.json("diagnostics.json", &report)?;
    let names: Vec<&String> = report.residual_series.keys().collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["t".to_string(), "energy".to_string()];
    header.extend(names.iter().map(|s| s.to_string()));
    let csv_err = |e: csv::Error| CliError::Io {
        path: PathBuf::from("residuals.csv"),
        message: e.to_string(),
    };
    w.write_record(&header).map_err(csv_err)?;
    for k in 0..report.times.len() {
        let mut row = vec![report.times[k].to_string(), report.energy_series[k].to_string()];
        row.extend(names.iter().map(|n| report.residual_series[*n][k].to_string()));
        w.write_record(&row).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io {
        path: PathBuf::from("residuals.csv"),
        message: e.to_string(),
    })?;
    out.write("residuals.csv", &bytes)?;
    Ok(ModeResult {
        check_passed: None,
        failure: outcome.failure.map(CliError::Core),
    })
}

#[derive(Serialize)]
struct DefectRow {
    epsilon: f64,
    t: f64,
    integral_mean: f64,
    integral_se: f64,
    l1_mean: f64,
    l1_se: f64,
}

fn sweep(plan: &ExperimentPlan, exec: Execution, out: &mut Outputs) -> Result<ModeResult, CliError> {
    let configs = plan.sweep_configs()?;
    let reference = plan.reference_epsilon().expect("validated sweep");
    let mut members = Vec::new();
    for (i, c) in configs.iter().enumerate() {
        let sim = Simulation::new(c)?;
        let mut records = Vec::with_capacity(c.n_paths);
        let mut failed = 0usize;
        // Paths are written one at a time so memory stays at one trajectory.
        for p in 0..c.n_paths as u64 {
            let outcome = sim.run(p)?;
            out.trajectory(&format!("eps_{i}/path_{p}"), &outcome.trajectory)?;
            let mut rec = PathRecord::from_trajectory(&outcome.trajectory, c.alpha, c.breaking_threshold);
            if let Some(e) = outcome.failure {
                failed += 1;
                rec.failure = Some(sch_core::sde::PathFailure {
                    path_index: p,
                    t: e.failure_time(),
                    message: e.to_string(),
                });
            }
            records.push(rec);
        }
        out.csv(&format!("eps_{i}/paths.csv"), records.iter().map(PathRow::from))?;
        members.push(json!({
            "index": i,
            "epsilon": c.epsilon,
            "config_hash": c.hash(),
            "failed_paths": failed,
        }));
    }
    let estimate = defect_estimate(&configs, reference, exec)?;
    let rows = estimate.series.iter().flat_map(|s| {
        estimate.times.iter().enumerate().map(move |(k, &t)| DefectRow {
            epsilon: s.epsilon,
            t,
            integral_mean: s.integral[k].mean,
            integral_se: s.integral[k].std_error,
            l1_mean: s.l1[k].mean,
            l1_se: s.l1[k].std_error,
        })
    });
    out.csv("defect.csv", rows)?;
    out.json(
        "sweep.json",
        &json!({
            "reference_epsilon": reference,
            "members": members,
            "defect": estimate,
        }),
    )?;
    Ok(ModeResult::default())
}

#[derive(Serialize)]
struct IdentityRow<'a> {
    group: &'a str,
    name: &'a str,
    ell: f64,
    samples: usize,
    max_error: f64,
    worst_v: f64,
    passed: bool,
}

fn entropy_check(p: &crate::plan::EntropyCheckParams, out: &mut Outputs) -> Result<ModeResult, CliError> {
    let report = explicit::verify(&p.ells, p.span, p.steps_per_ell, p.tolerance);
    out.json("identities.json", &report)?;
    out.csv(
        "identities.csv",
        report.results.iter().map(|r| IdentityRow {
            group: &r.group,
            name: &r.name,
            ell: r.ell,
            samples: r.samples,
            max_error: r.max_error,
            worst_v: r.worst_v,
            passed: r.passed,
        }),
    )?;
    let failed: Vec<String> = report
        .results
        .iter()
        .filter(|r| !r.passed)
        .map(|r| format!("{}/{} (ell = {})", r.group, r.name, r.ell))
        .collect();
    Ok(ModeResult {
        check_passed: Some(report.passed),
        failure: (!report.passed).then(|| {
            CliError::CheckFailed(format!(
                "entropy identities: {} failing rows{}{}",
                failed.len(),
                if failed.is_empty() { "" } else { ": " },
                failed.join(", ")
            ))
        }),
    })
}

fn kernel_check(p: &crate::plan::KernelCheckParams, out: &mut Outputs) -> Result<ModeResult, CliError> {
    let grid = Grid::new(p.n)?;
    let kmax = p.kmax.unwrap_or(p.n / 16);
    let report = dual_path_check(grid, kmax, p.samples, p.seed)?;
    let mass_error = (report.mass - 1.0).abs();
    let passed = report.max_abs_diff <= p.tolerance && mass_error <= p.mass_tolerance;
    out.csv("kernel_check.csv", &report.rows)?;
    out.json(
        "kernel_check.json",
        &json!({
            "report": report,
            "mass_error": mass_error,
            "tolerance": p.tolerance,
            "mass_tolerance": p.mass_tolerance,
            "passed": passed,
        }),
    )?;
    Ok(ModeResult {
        check_passed: Some(passed),
        failure: (!passed).then(|| {
            CliError::CheckFailed(format!(
                "kernel dual path: max |diff| = {:e} (tol {:e}), |h·ΣK - 1| = {:e} (tol {:e})",
                report.max_abs_diff, p.tolerance, mass_error, p.mass_tolerance
            ))
        }),
    })
}

#[derive(Serialize)]
struct CommutatorRow {
    delta: f64,
    e1: f64,
    e2: f64,
    e3: f64,
    second_order: Option<f64>,
    e2_constant_sigma: f64,
}

fn strictly_decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] < w[0])
}

fn commutator_study(
    plan: &ExperimentPlan,
    p: &crate::plan::CommutatorParams,
    out: &mut Outputs,
) -> Result<ModeResult, CliError> {
    let config = plan.sim_config()?;
    let sim = Simulation::new(config)?;
    let outcome = sim.run(p.path_index)?;
    if let Some(e) = outcome.failure {
        return Err(CliError::Core(e));
    }
    let w: &Field = &outcome.trajectory.last().u;
    out.write("w.schf", &snapshot::encode(w))?;
    let grid = w.grid();
    let phi = Field::from_fn(grid, |x| 1.0 + 0.5 * x.cos());
    let constant = NoiseCoef::from_spec(&SigmaSpec::Const(1.0), grid, None)?;
    let mut deltas = p.deltas.clone();
    deltas.sort_by(|a, b| b.total_cmp(a));
    let rows = deltas
        .iter()
        .map(|&d| {
            let e = commutator_errors_extended(w, sim.noise(), d, &p.entropy, &phi)?;
            let c = commutator_errors(w, &constant, d)?;
            Ok(CommutatorRow {
                delta: d,
                e1: e.e1,
                e2: e.e2,
                e3: e.e3,
                second_order: e.second_order,
                e2_constant_sigma: c.e2,
            })
        })
        .collect::<Result<Vec<_>, sch_core::Error>>()?;
    let col = |f: fn(&CommutatorRow) -> f64| rows.iter().map(f).collect::<Vec<_>>();
    let summary = json!({
        "t": outcome.trajectory.last().t,
        "deltas_descending": deltas,
        "e1_strictly_decreasing": strictly_decreasing(&col(|r| r.e1)),
        "e2_strictly_decreasing": strictly_decreasing(&col(|r| r.e2)),
        "e3_strictly_decreasing": strictly_decreasing(&col(|r| r.e3)),
        "e2_constant_sigma_max": col(|r| r.e2_constant_sigma).into_iter().fold(0.0, f64::max),
        "test_function": "1 + 0.5 cos x",
        "entropy": p.entropy,
    });
    out.csv("commutators.csv", &rows)?;
    out.json("commutators.json", &summary)?;
    Ok(ModeResult::default())
}
