use std::path::{Path, PathBuf};
use std::process::Command;

use sch_cli::{parse_config, parse_config_with, run, CliError, Mode, ModeParams, Overrides};

const MINIMAL: &str = r#"{"mode":"simulate", "n":256, "epsilon":0.01, "dt":1e-4, "t_end":1,
    "sigma":"sin", "initial":{"peakon":{"c":1,"x0":3.14159}}, "seed":42}"#;

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("sch-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn sch(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_sch")).args(args).output().unwrap()
}

fn write_plan(dir: &Path, text: &str) -> String {
    let p = dir.join("plan.json");
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn minimal_document_is_valid() {
    let plan = parse_config(MINIMAL).unwrap();
    assert_eq!(plan.mode, Mode::Simulate);
    let c = plan.config.as_ref().unwrap();
    assert_eq!((c.n, c.seed, c.n_paths, c.record_every), (256, 42, 1, 1));
    assert_eq!(plan.params, ModeParams::Simulate(sch_cli::plan::SimulateParams { path_index: 0 }));
    // Defaults are echoed when the plan is serialized.
    let echoed = serde_json::to_value(&plan).unwrap();
    assert_eq!(echoed["config"]["breaking_threshold"], 50.0);
    assert_eq!(echoed["config"]["scheme"], "em_imex");
}

#[test]
fn missing_dt_names_the_field() {
    let text = MINIMAL.replace(r#""dt":1e-4,"#, "");
    match parse_config(&text).unwrap_err() {
        CliError::Config { field, message, .. } => {
            assert_eq!(field, "dt");
            assert!(message.contains("dt"), "{message}");
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn unstable_dt_reports_the_bound() {
    let text = MINIMAL.replace("1e-4", "0.01");
    let err = parse_config(&text).unwrap_err();
    let CliError::Config { field, bound, message } = &err else {
        panic!("{err:?}");
    };
    assert_eq!(field, "dt");
    let b = bound.expect("bound reported");
    assert!(b < 0.01 && b > 0.0);
    assert!(message.contains(&b.to_string()), "{message}");
    assert_eq!(err.exit_code(), 2);
    assert_eq!(err.to_json()["error"]["bound"], b);
}

#[test]
fn unknown_and_malformed_fields() {
    let text = MINIMAL.replace(r#""seed":42"#, r#""seed":42, "sigmaa":"sin""#);
    assert!(parse_config(&text).unwrap_err().to_string().contains("sigmaa"));
    let text = MINIMAL.replace(r#""sigma":"sin""#, r#""sigma":"wobble""#);
    match parse_config(&text).unwrap_err() {
        CliError::Config { field, .. } => assert_eq!(field, "sigma"),
        other => panic!("{other:?}"),
    }
    assert!(parse_config("[1, 2]").is_err());
    assert!(parse_config(r#"{"mode":"bogus"}"#).is_err());
}

#[test]
fn overrides_apply_before_validation() {
    let plan = parse_config_with(
        MINIMAL,
        Overrides {
            seed: Some(7),
            paths: Some(3),
        },
    )
    .unwrap();
    let c = plan.config.unwrap();
    assert_eq!((c.seed, c.n_paths), (7, 3));
    let text = MINIMAL.replace(r#""seed":42"#, r#""seed":42, "path_index":2"#);
    assert!(parse_config(&text).is_err());
    assert!(parse_config_with(&text, Overrides { seed: None, paths: Some(3) }).is_ok());
}

#[test]
fn sweep_template_validation() {
    let base = r#""n":64, "dt":1e-3, "t_end":0.01, "sigma":"sin", "initial":{"fourier":{"sin":{"1":1.0}}}"#;
    let ok = format!(r#"{{"mode":"sweep", {base}, "epsilons":[0.1, 0.01]}}"#);
    let plan = parse_config(&ok).unwrap();
    assert_eq!(plan.reference_epsilon(), Some(0.01));
    assert_eq!(plan.sweep_configs().unwrap().len(), 2);
    let bad = format!(r#"{{"mode":"sweep", {base}, "epsilons":[0.1, 0.01], "reference_epsilon":0.1}}"#);
    assert!(parse_config(&bad).unwrap_err().to_string().contains("reference_epsilon"));
    let smoothing = format!(r#"{{"mode":"sweep", {base}, "epsilons":[0.1, 0.01], "sigma_smoothing":true}}"#);
    assert!(parse_config(&smoothing).is_err());
}

#[test]
fn commutator_radii_must_be_resolved() {
    let text = r#"{"mode":"commutator-study", "n":64, "epsilon":0.05, "dt":1e-3, "t_end":0.01,
        "sigma":"sin", "initial":{"fourier":{"sin":{"1":1.0}}}}"#;
    match parse_config(text).unwrap_err() {
        CliError::Config { field, .. } => assert_eq!(field, "deltas[2]"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn entropy_check_exits_zero() {
    let dir = scratch("entropy");
    let plan = write_plan(&dir, r#"{"mode":"entropy-check"}"#);
    let out_dir = dir.join("out");
    let out = sch(&["--config", &plan, "--output", out_dir.to_str().unwrap(), "--quiet"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(out_dir.join("identities.csv")).unwrap();
    assert!(csv.lines().count() > 50);
    assert!(csv.lines().skip(1).all(|l| l.ends_with("true")));
}

#[test]
fn kernel_check_exits_zero_with_table() {
    let dir = scratch("kernel");
    let plan = write_plan(&dir, r#"{"mode":"kernel-check"}"#);
    let out_dir = dir.join("out");
    let out = sch(&["--config", &plan, "--output", out_dir.to_str().unwrap(), "--quiet"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(out_dir.join("kernel_check.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "sample,sup_norm,max_abs_diff");
    assert_eq!(csv.lines().count(), 21);
}

#[test]
fn failed_check_exits_three() {
    let dir = scratch("kernel-fail");
    let plan = write_plan(&dir, r#"{"mode":"kernel-check","kmax":64}"#);
    let out = sch(&["--config", &plan, "--output", dir.join("out").to_str().unwrap(), "--quiet"]);
    assert_eq!(out.status.code(), Some(3));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "check_failed");
    assert!(dir.join("out/manifest.json").exists());
}

#[test]
fn config_errors_exit_two_before_any_output() {
    let dir = scratch("bad");
    let plan = write_plan(&dir, &MINIMAL.replace(r#""dt":1e-4,"#, ""));
    let out_dir = dir.join("out");
    let out = sch(&["--config", &plan, "--output", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["field"], "dt");
    assert!(!out_dir.exists());
}

#[test]
fn sweep_writes_trajectories_and_defect_table() {
    let dir = scratch("sweep");
    let plan = write_plan(
        &dir,
        r#"{"mode":"sweep", "n":64, "dt":5e-4, "t_end":0.02, "sigma":"sin",
            "initial":{"fourier":{"sin":{"1":1.0}}}, "seed":4, "n_paths":2, "record_every":10,
            "epsilons":[0.1, 0.01]}"#,
    );
    let out_dir = dir.join("out");
    let out = sch(&["--config", &plan, "--output", out_dir.to_str().unwrap(), "--quiet"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for i in 0..2 {
        for p in 0..2 {
            let bytes = std::fs::read(out_dir.join(format!("eps_{i}/path_{p}.schf"))).unwrap();
            let frames = sch_core::grid::snapshot::decode_all(&bytes).unwrap();
            assert_eq!(frames.len(), 5);
        }
    }
    let defect = std::fs::read_to_string(out_dir.join("defect.csv")).unwrap();
    let rows: Vec<&str> = defect.lines().skip(1).collect();
    assert_eq!(rows.len(), 10);
    assert!(rows.iter().any(|r| r.starts_with("0.1,")));
    // The reference member compares against itself.
    assert!(rows
        .iter()
        .filter(|r| r.starts_with("0.01,"))
        .all(|r| r.ends_with(",0.0,0.0,0.0,0.0")));
}

#[test]
fn simulate_is_bit_reproducible() {
    let dir = scratch("repro");
    let text = r#"{"mode":"simulate", "n":64, "epsilon":0.02, "dt":1e-3, "t_end":0.05,
        "sigma":"sin", "initial":{"fourier":{"sin":{"1":1.0}}}, "seed":9, "record_every":5}"#;
    let plan = parse_config(text).unwrap();
    let a = run(&plan, &dir.join("a")).unwrap();
    let b = run(&plan, &dir.join("b")).unwrap();
    assert!(a.failure.is_none());
    assert_eq!(a.manifest.artifacts, b.manifest.artifacts);
    assert_eq!(a.manifest.artifacts_hash, b.manifest.artifacts_hash);
    assert_eq!(
        std::fs::read(dir.join("a/path_0.schf")).unwrap(),
        std::fs::read(dir.join("b/path_0.schf")).unwrap()
    );
    let m: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.join("a/manifest.json")).unwrap()).unwrap();
    assert_eq!(m["plan"]["config"]["n_paths"], 1);
    assert_eq!(m["seeds"]["seed"], 9);
    assert!(m["wall_time_s"].as_f64().unwrap() >= 0.0);
}

#[test]
fn diagnose_writes_report() {
    let dir = scratch("diagnose");
    let text = r#"{"mode":"diagnose", "n":64, "epsilon":0.05, "dt":1e-3, "t_end":0.02,
        "sigma":"sin", "initial":{"fourier":{"sin":{"1":1.0}}}, "scheme":"milstein_imex"}"#;
    let plan = parse_config(text).unwrap();
    let out = run(&plan, &dir).unwrap();
    assert!(out.failure.is_none());
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.join("diagnostics.json")).unwrap()).unwrap();
    assert_eq!(report["metadata"]["quadrature"], "milstein");
    assert_eq!(report["times"].as_array().unwrap().len(), 21);
    let csv = std::fs::read_to_string(dir.join("residuals.csv")).unwrap();
    assert!(csv.starts_with("t,energy,energy_balance,"));
}
