//! Experiment plans: one flat JSON object holding `mode`, an optional
//! `output_dir`, the mode's own parameters and the simulation config.

use std::path::PathBuf;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use sch_core::entropy::{EntropyKind, EntropySpec};
use sch_core::sde::SimConfig;
use sch_core::Grid;

use crate::error::{validation, CliError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Simulate,
    Ensemble,
    Diagnose,
    Sweep,
    EntropyCheck,
    KernelCheck,
    CommutatorStudy,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Simulate => "simulate",
            Mode::Ensemble => "ensemble",
            Mode::Diagnose => "diagnose",
            Mode::Sweep => "sweep",
            Mode::EntropyCheck => "entropy-check",
            Mode::KernelCheck => "kernel-check",
            Mode::CommutatorStudy => "commutator-study",
        }
    }

    fn needs_config(self) -> bool {
        !matches!(self, Mode::EntropyCheck | Mode::KernelCheck)
    }
}

fn default_entropy() -> EntropySpec {
    EntropySpec::with_ell(EntropyKind::Sell, 5.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateParams {
    #[serde(default)]
    pub path_index: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnoseParams {
    #[serde(default)]
    pub path_index: u64,
    #[serde(default = "default_entropy")]
    pub entropy: EntropySpec,
    /// `left_point` or `milstein`; chosen from the scheme when absent.
    #[serde(default)]
    pub quadrature: Option<sch_core::diagnostics::ItoQuadrature>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepParams {
    pub epsilons: Vec<f64>,
    /// Defaults to the smallest epsilon.
    #[serde(default)]
    pub reference_epsilon: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntropyCheckParams {
    #[serde(default = "default_ells")]
    pub ells: Vec<f64>,
    #[serde(default = "default_span")]
    pub span: f64,
    #[serde(default = "default_steps")]
    pub steps_per_ell: usize,
    #[serde(default = "default_identity_tol")]
    pub tolerance: f64,
}

fn default_ells() -> Vec<f64> {
    vec![1.0, 2.0, 5.0, 10.0]
}
fn default_span() -> f64 {
    4.0
}
fn default_steps() -> usize {
    100
}
fn default_identity_tol() -> f64 {
    1e-12
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelCheckParams {
    #[serde(default = "default_kernel_n")]
    pub n: usize,
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Highest mode of the random fields; `n / 16` when absent. The kink
    /// correction of the table degrades as `(kmax·h)⁸`.
    #[serde(default)]
    pub kmax: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_kernel_tol")]
    pub tolerance: f64,
    #[serde(default = "default_mass_tol")]
    pub mass_tolerance: f64,
}

fn default_kernel_n() -> usize {
    256
}
fn default_samples() -> usize {
    20
}
fn default_kernel_tol() -> f64 {
    1e-8
}
fn default_mass_tol() -> f64 {
    1e-10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommutatorParams {
    #[serde(default = "default_deltas")]
    pub deltas: Vec<f64>,
    #[serde(default = "default_entropy")]
    pub entropy: EntropySpec,
    #[serde(default)]
    pub path_index: u64,
}

fn default_deltas() -> Vec<f64> {
    vec![0.4, 0.2, 0.1, 0.05]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ModeParams {
    Simulate(SimulateParams),
    Ensemble,
    Diagnose(DiagnoseParams),
    Sweep(SweepParams),
    EntropyCheck(EntropyCheckParams),
    KernelCheck(KernelCheckParams),
    CommutatorStudy(CommutatorParams),
}

/// Keys of the document that belong to the mode rather than to the config.
fn mode_keys(mode: Mode) -> &'static [&'static str] {
    match mode {
        Mode::Simulate => &["path_index"],
        Mode::Ensemble => &[],
        Mode::Diagnose => &["path_index", "entropy", "quadrature"],
        Mode::Sweep => &["epsilons", "reference_epsilon"],
        Mode::EntropyCheck => &["ells", "span", "steps_per_ell", "tolerance"],
        Mode::KernelCheck => &["n", "samples", "kmax", "seed", "tolerance", "mass_tolerance"],
        Mode::CommutatorStudy => &["deltas", "entropy", "path_index"],
    }
}

/// Command-line overrides applied before validation.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub paths: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub mode: Mode,
    /// Absent for the check modes. For a sweep this is the template; its
    /// `epsilon` is replaced by each member of `epsilons`.
    pub config: Option<SimConfig>,
    pub params: ModeParams,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

fn field_of(path: &str, message: &str) -> String {
    for prefix in ["missing field `", "unknown field `"] {
        if let Some(rest) = message.strip_prefix(prefix) {
            if let Some(end) = rest.find('`') {
                let name = &rest[..end];
                return if path.is_empty() || path == "." {
                    name.to_string()
                } else {
                    format!("{path}.{name}")
                };
            }
        }
    }
    if path.is_empty() || path == "." {
        "config".into()
    } else {
        path.to_string()
    }
}

fn typed<T: DeserializeOwned>(obj: Map<String, Value>) -> Result<T, CliError> {
    serde_path_to_error::deserialize(Value::Object(obj)).map_err(|e| {
        let path = e.path().to_string();
        let message = e.inner().to_string();
        let field = field_of(&path, &message);
        CliError::config(field, message)
    })
}

/// Parses and validates a plan document.
pub fn parse_config(text: &str) -> Result<ExperimentPlan, CliError> {
    parse_config_with(text, Overrides::default())
}

/// [`parse_config`] with `--seed` / `--paths` applied before validation.
pub fn parse_config_with(text: &str, overrides: Overrides) -> Result<ExperimentPlan, CliError> {
    let doc: Value = serde_json::from_str(text).map_err(|e| CliError::config("document", e.to_string()))?;
    let Value::Object(mut obj) = doc else {
        return Err(CliError::config("document", "top level must be a JSON object"));
    };
    let mode = obj
        .remove("mode")
        .ok_or_else(|| CliError::config("mode", "missing field `mode`"))?;
    let mode: Mode = serde_json::from_value(mode).map_err(|e| CliError::config("mode", e.to_string()))?;
    let output_dir = match obj.remove("output_dir") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(PathBuf::from(s)),
        Some(other) => return Err(CliError::config("output_dir", format!("expected a string, got {other}"))),
    };
    let mut own = Map::new();
    for key in mode_keys(mode) {
        if let Some(v) = obj.remove(*key) {
            own.insert((*key).to_string(), v);
        }
    }
    if mode == Mode::KernelCheck {
        if let Some(s) = overrides.seed {
            own.insert("seed".into(), s.into());
        }
    }
    let params = match mode {
        Mode::Simulate => ModeParams::Simulate(typed(own)?),
        Mode::Ensemble => ModeParams::Ensemble,
        Mode::Diagnose => ModeParams::Diagnose(typed(own)?),
        Mode::Sweep => ModeParams::Sweep(typed(own)?),
        Mode::EntropyCheck => ModeParams::EntropyCheck(typed(own)?),
        Mode::KernelCheck => ModeParams::KernelCheck(typed(own)?),
        Mode::CommutatorStudy => ModeParams::CommutatorStudy(typed(own)?),
    };
    let config = if mode.needs_config() {
        if let ModeParams::Sweep(p) = &params {
            // The template's own epsilon is optional; it is overwritten per member.
            if !obj.contains_key("epsilon") {
                if let Some(&e) = p.epsilons.first() {
                    obj.insert("epsilon".into(), e.into());
                }
            }
        }
        let mut c: SimConfig = typed(obj)?;
        if let Some(s) = overrides.seed {
            c.seed = s;
        }
        if let Some(p) = overrides.paths {
            c.n_paths = p;
        }
        Some(c)
    } else {
        if let Some(key) = obj.keys().next() {
            return Err(CliError::config(
                key.clone(),
                format!("unknown field `{key}` for mode {}", mode.name()),
            ));
        }
        None
    };
    let plan = ExperimentPlan {
        mode,
        config,
        params,
        output_dir,
    };
    plan.validate()?;
    Ok(plan)
}

fn positive(field: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(CliError::config(field, format!("must be positive and finite (got {v})")))
    }
}

impl ExperimentPlan {
    /// The simulation config; only the check modes run without one.
    pub fn sim_config(&self) -> Result<&SimConfig, CliError> {
        self.config
            .as_ref()
            .ok_or_else(|| CliError::config("config", format!("mode {} needs a config", self.mode.name())))
    }

    /// One config per member of a sweep, in the order given.
    pub fn sweep_configs(&self) -> Result<Vec<SimConfig>, CliError> {
        let (ModeParams::Sweep(p), Some(c)) = (&self.params, &self.config) else {
            return Err(CliError::config("mode", "not a sweep plan"));
        };
        Ok(p
            .epsilons
            .iter()
            .map(|&e| SimConfig { epsilon: e, ..c.clone() })
            .collect())
    }

    pub fn reference_epsilon(&self) -> Option<f64> {
        match &self.params {
            ModeParams::Sweep(p) => p
                .reference_epsilon
                .or_else(|| p.epsilons.iter().copied().reduce(f64::min)),
            _ => None,
        }
    }

    /// Every check that can run without time stepping.
    pub fn validate(&self) -> Result<(), CliError> {
        if let Some(c) = &self.config {
            if self.mode != Mode::Sweep {
                c.validate().map_err(validation)?;
            }
        }
        match &self.params {
            ModeParams::Simulate(p) => self.check_path(p.path_index)?,
            ModeParams::Ensemble => {}
            ModeParams::Diagnose(p) => {
                self.check_path(p.path_index)?;
                p.entropy.validate().map_err(validation)?;
            }
            ModeParams::Sweep(p) => {
                if p.epsilons.is_empty() {
                    return Err(CliError::config("epsilons", "must not be empty"));
                }
                for (i, c) in self.sweep_configs()?.iter().enumerate() {
                    c.validate().map_err(|e| match validation(e) {
                        CliError::Config { field, message, bound } => CliError::Config {
                            field,
                            message: format!("{message} (epsilons[{i}] = {})", p.epsilons[i]),
                            bound,
                        },
                        other => other,
                    })?;
                }
                let min = p.epsilons.iter().copied().fold(f64::INFINITY, f64::min);
                if self.reference_epsilon() != Some(min) {
                    return Err(CliError::config(
                        "reference_epsilon",
                        format!("must be the smallest epsilon of the sweep ({min})"),
                    ));
                }
                let configs = self.sweep_configs()?;
                let noises = configs
                    .iter()
                    .map(|c| c.noise())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(validation)?;
                if noises.iter().any(|n| n.sigma() != noises[0].sigma()) {
                    return Err(CliError::config(
                        "sigma_smoothing",
                        "members of a sweep must share sigma; disable sigma_smoothing",
                    ));
                }
            }
            ModeParams::EntropyCheck(p) => {
                if p.ells.is_empty() {
                    return Err(CliError::config("ells", "must not be empty"));
                }
                for (i, &l) in p.ells.iter().enumerate() {
                    positive(&format!("ells[{i}]"), l)?;
                }
                positive("span", p.span)?;
                positive("tolerance", p.tolerance)?;
                if p.steps_per_ell == 0 {
                    return Err(CliError::config("steps_per_ell", "must be at least 1"));
                }
            }
            ModeParams::KernelCheck(p) => {
                Grid::new(p.n).map_err(|e| CliError::config("n", e.to_string()))?;
                if p.samples == 0 {
                    return Err(CliError::config("samples", "must be at least 1"));
                }
                let kmax = p.kmax.unwrap_or(p.n / 16);
                if kmax == 0 || 2 * kmax >= p.n {
                    return Err(CliError::config("kmax", format!("must lie in [1, n/2), got {kmax}")));
                }
                positive("tolerance", p.tolerance)?;
                positive("mass_tolerance", p.mass_tolerance)?;
            }
            ModeParams::CommutatorStudy(p) => {
                self.check_path(p.path_index)?;
                p.entropy.validate().map_err(validation)?;
                if p.deltas.is_empty() {
                    return Err(CliError::config("deltas", "must not be empty"));
                }
                let h = self.sim_config()?.grid().map_err(validation)?.h();
                for (i, &d) in p.deltas.iter().enumerate() {
                    positive(&format!("deltas[{i}]"), d)?;
                    if d < 2.0 * h {
                        return Err(CliError::config(
                            format!("deltas[{i}]"),
                            format!("delta = {d} is below the resolvable radius 2h = {}", 2.0 * h),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    fn check_path(&self, index: u64) -> Result<(), CliError> {
        let c = self.sim_config()?;
        if index >= c.n_paths as u64 {
            return Err(CliError::config(
                "path_index",
                format!("{index} is out of range for n_paths = {}", c.n_paths),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_names_from_serde_messages() {
        assert_eq!(field_of(".", "missing field `dt`"), "dt");
        assert_eq!(field_of("initial", "unknown field `cc`, expected"), "initial.cc");
        assert_eq!(field_of("sigma", "bad preset"), "sigma");
    }

    #[test]
    fn kernel_check_needs_no_config() {
        let p = parse_config(r#"{"mode":"kernel-check","samples":3}"#).unwrap();
        assert!(p.config.is_none());
        match p.params {
            ModeParams::KernelCheck(k) => {
                assert_eq!(k.n, 256);
                assert_eq!(k.samples, 3);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn stray_keys_rejected_for_check_modes() {
        let e = parse_config(r#"{"mode":"entropy-check","dt":1}"#).unwrap_err();
        assert!(e.to_string().contains("dt"), "{e}");
    }
}
