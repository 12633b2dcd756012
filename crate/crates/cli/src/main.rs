use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use serde_json::json;

use sch_cli::{parse_config_with, run, CliError, Mode, Overrides};

/// Stochastic Camassa-Holm experiments: simulation, ensembles, diagnostics
/// and self-checks.
#[derive(Debug, Parser)]
#[command(name = "sch", version)]
struct Args {
    /// Overrides the `mode` field of the config document.
    #[arg(value_enum)]
    mode: Option<Mode>,
    /// JSON plan document.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to `output_dir` of the plan, then `sch-output`.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `n_paths`.
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    quiet: bool,
}

fn threads_from_env() -> Result<Option<usize>, CliError> {
    match std::env::var("SCH_THREADS") {
        Err(_) => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::config("SCH_THREADS", format!("expected a positive integer, got {s:?}"))),
        },
    }
}

fn main_inner(args: Args) -> Result<Option<CliError>, CliError> {
    if let Some(n) = threads_from_env()? {
        sch_core::parallel::init_threads(n);
    }
    let text = std::fs::read_to_string(&args.config).map_err(|e| CliError::io(&args.config, e))?;
    let text = match args.mode {
        None => text,
        Some(mode) => {
            let mut doc: serde_json::Value =
                serde_json::from_str(&text).map_err(|e| CliError::config("document", e.to_string()))?;
            if let Some(obj) = doc.as_object_mut() {
                obj.insert("mode".into(), json!(mode.name()));
            }
            doc.to_string()
        }
    };
    let plan = parse_config_with(
        &text,
        Overrides {
            seed: args.seed,
            paths: args.paths,
        },
    )?;
    let output = args
        .output
        .or_else(|| plan.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("sch-output"));
    let outcome = run(&plan, &output)?;
    if !args.quiet {
        let m = &outcome.manifest;
        println!(
            "{}",
            json!({
                "mode": m.mode,
                "output": output.display().to_string(),
                "config_hash": m.config_hash,
                "artifacts_hash": m.artifacts_hash,
                "artifacts": m.artifacts.len(),
                "check_passed": m.check_passed,
                "wall_time_s": m.wall_time_s,
            })
        );
    }
    Ok(outcome.failure)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let err = match main_inner(args) {
        Ok(None) => return ExitCode::SUCCESS,
        Ok(Some(e)) | Err(e) => e,
    };
    eprintln!("{}", err.to_json());
    ExitCode::from(err.exit_code() as u8)
}
