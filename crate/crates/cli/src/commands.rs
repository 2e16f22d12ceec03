//! `simulate`, `sweep` and `compare`.

use std::path::{Path, PathBuf};

use qbattery_core::dynamics::integrate;
use qbattery_core::model::{DriveKind, DriveProfile};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ResolvedRun, RunConfig};
use crate::output::{render, rows_from_trajectory, OutputRow, SCHEMA_VERSION};
use crate::CliError;

/// Runs the moment integrator and converts the retained samples to rows.
pub fn run_rows(run: &ResolvedRun) -> Result<Vec<OutputRow>, CliError> {
    run_profile_rows(run, &run.profile)
}

fn run_profile_rows(run: &ResolvedRun, profile: &DriveProfile) -> Result<Vec<OutputRow>, CliError> {
    let traj = integrate(&run.params, profile, run.step, run.t_end)?;
    Ok(rows_from_trajectory(&traj, run.sample_stride)?)
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    let io = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(io)?;
    }
    std::fs::write(path, contents).map_err(io)
}

/// `out.csv` -> `out.manifest.json`.
pub fn manifest_path(output: &Path) -> PathBuf {
    output.with_extension("manifest.json")
}

/// `out.csv` -> `out.kappa-2.csv` for the third value of a kappa sweep.
pub fn sweep_point_path(output: &Path, parameter: &str, index: usize) -> PathBuf {
    let stem = output.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match output.extension() {
        Some(ext) => format!("{stem}.{parameter}-{index}.{}", ext.to_string_lossy()),
        None => format!("{stem}.{parameter}-{index}"),
    };
    output.with_file_name(name)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputRecord {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    pub file: PathBuf,
    pub rows: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Written next to every output; the embedded config reproduces the run.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub schema_version: &'static str,
    pub command: &'static str,
    pub config: RunConfig,
    pub outputs: Vec<OutputRecord>,
}

fn write_manifest(config: &RunConfig, manifest: &Manifest) -> Result<PathBuf, CliError> {
    let path = manifest_path(&config.output.path);
    let mut text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    text.push('\n');
    write_file(&path, &text)?;
    Ok(path)
}

pub fn simulate(config: &RunConfig) -> Result<Manifest, CliError> {
    if config.sweep.is_some() {
        return Err(CliError::Config("`simulate` does not take a sweep block; use `sweep`".into()));
    }
    let run = config.resolve()?;
    let rows = run_rows(&run)?;
    write_file(&config.output.path, &render(&rows, config.output.format))?;
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        command: "simulate",
        config: config.clone(),
        outputs: vec![OutputRecord {
            value: None,
            file: config.output.path.clone(),
            rows: rows.len(),
            error: None,
        }],
    };
    write_manifest(config, &manifest)?;
    Ok(manifest)
}

/// Runs every sweep point concurrently, one file each, then writes the
/// manifest. Fails after writing the manifest if any point failed.
pub fn sweep(config: &RunConfig) -> Result<Manifest, CliError> {
    let block = config
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Config("`sweep` requires a sweep block".into()))?;
    config.resolve()?;
    let points: Vec<(f64, ResolvedRun, PathBuf)> = block
        .values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let run = config.with_sweep_value(block.parameter, v).resolve()?;
            Ok((v, run, sweep_point_path(&config.output.path, block.parameter.name(), i)))
        })
        .collect::<Result<_, CliError>>()?;

    let outputs: Vec<OutputRecord> = points
        .par_iter()
        .map(|(value, run, file)| {
            let result = run_rows(run).and_then(|rows| {
                write_file(file, &render(&rows, config.output.format))?;
                Ok(rows.len())
            });
            let (rows, error) = match result {
                Ok(n) => (n, None),
                Err(e) => (0, Some(e.to_string())),
            };
            OutputRecord {
                value: Some(*value),
                file: file.clone(),
                rows,
                error,
            }
        })
        .collect();

    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        command: "sweep",
        config: config.clone(),
        outputs,
    };
    write_manifest(config, &manifest)?;
    let failed: Vec<String> = manifest
        .outputs
        .iter()
        .filter_map(|o| o.error.as_ref().map(|e| format!("{} = {}: {e}", block.parameter.name(), o.value.unwrap_or(f64::NAN))))
        .collect();
    if !failed.is_empty() {
        return Err(CliError::Runtime(failed.join("; ")));
    }
    Ok(manifest)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErgotropyPeak {
    pub max_ergotropy: f64,
    pub t_at_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparePoint {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    pub cd: ErgotropyPeak,
    pub bare: ErgotropyPeak,
    #[serde(rename = "static")]
    pub static_drive: ErgotropyPeak,
    /// `None` when the static maximum is zero.
    pub ratio_cd_static: Option<f64>,
    /// `None` when the bare maximum is zero.
    pub ratio_cd_bare: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareReport {
    pub schema_version: &'static str,
    pub command: &'static str,
    pub config: RunConfig,
    pub points: Vec<ComparePoint>,
}

fn peak(rows: &[OutputRow]) -> ErgotropyPeak {
    rows.iter().fold(
        ErgotropyPeak {
            max_ergotropy: 0.0,
            t_at_max: 0.0,
        },
        |best, r| {
            if r.ergotropy() > best.max_ergotropy {
                ErgotropyPeak {
                    max_ergotropy: r.ergotropy(),
                    t_at_max: r.t(),
                }
            } else {
                best
            }
        },
    )
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den > 0.0).then(|| num / den)
}

/// Peak ergotropy of the counterdiabatic drive against the same envelope
/// without correction and a static drive of amplitude `F0`.
pub fn compare_run(run: &ResolvedRun, value: Option<f64>) -> Result<ComparePoint, CliError> {
    if run.profile.kind != DriveKind::CdSinSq {
        return Err(CliError::Config("`compare` requires the cd_sin_sq profile".into()));
    }
    let profiles = [
        run.profile,
        run.profile.with_kind(DriveKind::SinSq),
        run.profile.with_kind(DriveKind::Static),
    ];
    let peaks = profiles
        .par_iter()
        .map(|p| run_profile_rows(run, p).map(|rows| peak(&rows)))
        .collect::<Result<Vec<_>, CliError>>()?;
    let (cd, bare, static_drive) = (peaks[0], peaks[1], peaks[2]);
    Ok(ComparePoint {
        value,
        cd,
        bare,
        static_drive,
        ratio_cd_static: ratio(cd.max_ergotropy, static_drive.max_ergotropy),
        ratio_cd_bare: ratio(cd.max_ergotropy, bare.max_ergotropy),
    })
}

/// Writes the comparison report as JSON to the configured output path.
pub fn compare(config: &RunConfig) -> Result<CompareReport, CliError> {
    let runs: Vec<(Option<f64>, ResolvedRun)> = match &config.sweep {
        None => vec![(None, config.resolve()?)],
        Some(block) => {
            config.resolve()?;
            block
                .values
                .iter()
                .map(|&v| Ok((Some(v), config.with_sweep_value(block.parameter, v).resolve()?)))
                .collect::<Result<_, CliError>>()?
        }
    };
    let points = runs
        .par_iter()
        .map(|(v, run)| compare_run(run, *v))
        .collect::<Result<Vec<_>, CliError>>()?;
    let report = CompareReport {
        schema_version: SCHEMA_VERSION,
        command: "compare",
        config: config.clone(),
        points,
    };
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    write_file(&config.output.path, &text)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_paths() {
        let out = Path::new("runs/fig2.csv");
        assert_eq!(manifest_path(out), Path::new("runs/fig2.manifest.json"));
        assert_eq!(sweep_point_path(out, "kappa", 2), Path::new("runs/fig2.kappa-2.csv"));
        assert_eq!(sweep_point_path(Path::new("plain"), "g", 0), Path::new("plain.g-0"));
    }

    #[test]
    fn ratio_undefined_for_zero_denominator() {
        assert_eq!(ratio(0.0, 0.0), None);
        assert_eq!(ratio(3.0, 2.0), Some(1.5));
    }
}
