//! JSON run configuration and its resolution into model inputs.

use std::path::{Path, PathBuf};

use qbattery_core::dynamics::max_step;
use qbattery_core::model::{bose_occupation, DriveKind, DriveProfile, ModelParams};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const DEFAULT_OMEGA_ENV: f64 = 0.05;
pub const DEFAULT_SAMPLE_STRIDE: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub drive: DriveConfig,
    #[serde(default)]
    pub numerics: NumericsConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    pub output: OutputConfig,
}

/// Physical constants in units of `omega0`. The bath may be given as `nbar`
/// or as a thermal energy `kt`; the detuning as `delta_r` or as
/// `kappa = omega_d / omega0`. Missing pairs default to zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default = "one")]
    pub omega0: f64,
    pub g: f64,
    pub gamma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nbar: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveConfig {
    pub profile: DriveKind,
    #[serde(default, rename = "F0", alias = "f0")]
    pub f0: f64,
    #[serde(default = "default_omega_env")]
    pub omega_env: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsConfig {
    /// Defaults to the largest stable step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    /// Defaults to `tau`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(default = "default_stride")]
    pub sample_stride: usize,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        NumericsConfig {
            step: None,
            t_end: None,
            sample_stride: DEFAULT_SAMPLE_STRIDE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SweepParameter {
    #[serde(rename = "kappa")]
    Kappa,
    #[serde(rename = "gamma")]
    Gamma,
    #[serde(rename = "F0", alias = "f0")]
    F0,
    #[serde(rename = "omega_env")]
    OmegaEnv,
    #[serde(rename = "g")]
    G,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::Kappa => "kappa",
            SweepParameter::Gamma => "gamma",
            SweepParameter::F0 => "F0",
            SweepParameter::OmegaEnv => "omega_env",
            SweepParameter::G => "g",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub path: PathBuf,
    #[serde(default)]
    pub format: OutputFormat,
}

/// Validated inputs of a single run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedRun {
    pub params: ModelParams,
    pub profile: DriveProfile,
    pub step: f64,
    pub t_end: f64,
    pub sample_stride: usize,
}

fn one() -> f64 {
    1.0
}

fn default_omega_env() -> f64 {
    DEFAULT_OMEGA_ENV
}

fn default_stride() -> usize {
    DEFAULT_SAMPLE_STRIDE
}

fn config_error(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| config_error(format!("malformed config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn resolve(&self) -> Result<ResolvedRun, CliError> {
        let m = &self.model;
        let nbar = match (m.nbar, m.kt) {
            (Some(_), Some(_)) => return Err(config_error("give at most one of `nbar` and `kt`")),
            (Some(n), None) => n,
            (None, Some(kt)) => {
                if !(kt.is_finite() && kt >= 0.0) {
                    return Err(config_error(format!("`kt` = {kt} must be finite and >= 0")));
                }
                bose_occupation(m.omega0, kt)
            }
            (None, None) => 0.0,
        };
        let delta_r = match (m.delta_r, m.kappa) {
            (Some(_), Some(_)) => return Err(config_error("give at most one of `delta_r` and `kappa`")),
            (Some(d), None) => d,
            (None, Some(k)) => m.omega0 * (1.0 - k),
            (None, None) => 0.0,
        };
        let params = ModelParams::new(m.omega0, m.g, m.gamma, nbar, delta_r, m.tau)
            .map_err(|e| config_error(e.to_string()))?;
        let profile = DriveProfile {
            kind: self.drive.profile,
            f0: self.drive.f0,
            omega_env: self.drive.omega_env,
        };
        params
            .validate_with(&profile)
            .map_err(|e| config_error(e.to_string()))?;

        let limit = max_step(&params, &profile);
        let step = self.numerics.step.unwrap_or(limit);
        if !(step.is_finite() && step > 0.0) {
            return Err(config_error(format!("`step` = {step} must be > 0")));
        }
        if step > limit * (1.0 + 1e-12) {
            return Err(config_error(format!("`step` = {step} exceeds stability limit {limit}")));
        }
        let t_end = self.numerics.t_end.unwrap_or(params.tau);
        if !(t_end.is_finite() && t_end >= 0.0) {
            return Err(config_error(format!("`t_end` = {t_end} must be finite and >= 0")));
        }
        if self.numerics.sample_stride == 0 {
            return Err(config_error("`sample_stride` must be >= 1"));
        }
        if let Some(sweep) = &self.sweep {
            if sweep.values.is_empty() {
                return Err(config_error("sweep `values` is empty"));
            }
            if let Some(v) = sweep.values.iter().find(|v| !v.is_finite()) {
                return Err(config_error(format!("sweep value {v} is not finite")));
            }
        }
        Ok(ResolvedRun {
            params,
            profile,
            step,
            t_end,
            sample_stride: self.numerics.sample_stride,
        })
    }

    /// The single-run configuration for one sweep value, without the sweep
    /// block and with the output path left unchanged.
    pub fn with_sweep_value(&self, parameter: SweepParameter, value: f64) -> RunConfig {
        let mut cfg = self.clone();
        cfg.sweep = None;
        match parameter {
            SweepParameter::Kappa => {
                cfg.model.kappa = Some(value);
                cfg.model.delta_r = None;
            }
            SweepParameter::Gamma => cfg.model.gamma = value,
            SweepParameter::F0 => cfg.drive.f0 = value,
            SweepParameter::OmegaEnv => cfg.drive.omega_env = value,
            SweepParameter::G => cfg.model.g = value,
        }
        cfg
    }
}
