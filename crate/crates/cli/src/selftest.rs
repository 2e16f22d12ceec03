//! Built-in cross-checks between the moment integrator, the Fock-space
//! oracle, the energy decomposition, the two-level transitionless demo and
//! the closed-form amplitudes.

use qbattery_core::analytic::{validate_against_numerics, ValidationReport, ValidationStatus};
use qbattery_core::cd_control::TwoLevelSweep;
use qbattery_core::dynamics::{integrate_with_rhs, MomentEquations, MomentState};
use qbattery_core::energetics::{decompose, ERGOTROPY_CLAMP};
use qbattery_core::model::{DriveProfile, ModelParams};
use qbattery_core::oracle::{dense_evolve_with, extract_moments, Cutoffs};
use serde::Serialize;

use crate::output::SCHEMA_VERSION;

/// A deliberate corruption of the moment equations, used to prove that the
/// harness catches sign errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Reverses the sign of `d<b^dag b>/dt`.
    FlipBatteryExchange,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SelftestOptions {
    pub fault: Option<Fault>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CheckStatus {
    Pass,
    Warn,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub status: CheckStatus,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelftestReport {
    pub schema_version: &'static str,
    pub status: CheckStatus,
    pub checks: Vec<CheckResult>,
    pub analytic: Vec<ValidationReport>,
}

impl SelftestReport {
    pub fn failed(&self) -> bool {
        self.status == CheckStatus::Fail
    }
}

/// Largest absolute deviation over all eight moments between the moment
/// integrator and the dense oracle, sampled on every grid point.
pub fn moment_oracle_deviation(
    params: &ModelParams,
    profile: &DriveProfile,
    cutoff: usize,
    step: f64,
    t_end: f64,
    fault: Option<Fault>,
) -> qbattery_core::Result<f64> {
    let eqs = MomentEquations::new(params, profile)?;
    let traj = integrate_with_rhs(MomentState::vacuum(), params, profile, step, t_end, |t, s, w| {
        let mut d = eqs.rhs_in_window(t, s, w);
        if fault == Some(Fault::FlipBatteryExchange) {
            d.nb = -d.nb;
        }
        d
    })?;
    let mut worst: f64 = 0.0;
    let mut index = 0;
    dense_evolve_with(params, profile, Cutoffs::uniform(cutoff)?, step, t_end, |t, rho| {
        let sample = &traj.samples[index];
        debug_assert_eq!(sample.t, t);
        worst = worst.max(extract_moments(rho).max_abs_diff(&sample.state));
        index += 1;
    })?;
    Ok(worst)
}

const ORACLE_TOL: f64 = 1e-6;

fn selftest_points() -> Vec<(ModelParams, DriveProfile)> {
    let p = |g, gamma, nbar, kappa, tau| {
        ModelParams::new(1.0, g, gamma, nbar, 0.0, tau)
            .expect("fixture parameters are valid")
            .with_kappa(kappa)
    };
    vec![
        (p(0.2, 1.0, 0.1, 0.5, 5.0), DriveProfile::cd_sin_sq(0.3, 0.3)),
        (p(0.4, 0.05, 0.05, 1.0, 3.0), DriveProfile::constant(0.01)),
        (p(0.3, 1.0, 0.2, 1.0, 5.0), DriveProfile::sin_sq(0.4, 0.3)),
    ]
}

fn check_oracle(fault: Option<Fault>) -> CheckResult {
    let mut worst: f64 = 0.0;
    for (params, profile) in selftest_points() {
        match moment_oracle_deviation(&params, &profile, 14, 0.01, 5.0, fault) {
            Ok(d) => worst = worst.max(d),
            Err(e) => {
                return CheckResult {
                    name: "oracle_equivalence".into(),
                    status: CheckStatus::Fail,
                    detail: e.to_string(),
                }
            }
        }
    }
    CheckResult {
        name: "oracle_equivalence".into(),
        status: if worst < ORACLE_TOL { CheckStatus::Pass } else { CheckStatus::Fail },
        detail: format!("max moment deviation {worst:e} (tolerance {ORACLE_TOL:e})"),
    }
}

fn check_decomposition() -> CheckResult {
    let params = ModelParams::new(1.0, 0.2, 1.0, 0.5, 0.0, 20.0).expect("fixture parameters are valid");
    let profile = DriveProfile::cd_sin_sq(0.3, 0.05);
    let (status, detail) = match decompose(&params, &profile, 0.01, 20.0) {
        Ok(d) if d.thermal_ergotropy_max <= ERGOTROPY_CLAMP => (
            CheckStatus::Pass,
            format!(
                "additivity {:e}, coherent ergotropy {:e}, thermal ergotropy {:e}",
                d.additivity_residual, d.coherent_ergotropy_residual, d.thermal_ergotropy_max
            ),
        ),
        Ok(d) => (
            CheckStatus::Fail,
            format!("thermal-only ergotropy {:e} is not zero", d.thermal_ergotropy_max),
        ),
        Err(e) => (CheckStatus::Fail, e.to_string()),
    };
    CheckResult {
        name: "energy_decomposition".into(),
        status,
        detail,
    }
}

fn check_transitionless() -> CheckResult {
    let sweep = TwoLevelSweep {
        delta: 1.0,
        lambda_start: -10.0,
        lambda_end: 10.0,
        duration: 10.0,
    };
    let (status, detail) = match (sweep.run(2000, false), sweep.run(2000, true)) {
        (Ok(bare), Ok(cd)) => {
            let ok = bare.final_overlap < 0.9 && cd.min_overlap >= 1.0 - 1e-4;
            (
                if ok { CheckStatus::Pass } else { CheckStatus::Fail },
                format!(
                    "bare final overlap {:.6}, counterdiabatic min overlap {:.10}",
                    bare.final_overlap, cd.min_overlap
                ),
            )
        }
        (Err(e), _) | (_, Err(e)) => (CheckStatus::Fail, e.to_string()),
    };
    CheckResult {
        name: "transitionless_two_level".into(),
        status,
        detail,
    }
}

/// Analytic cases: overdamped at two detunings and underdamped on resonance.
pub fn analytic_cases() -> Vec<(&'static str, ModelParams, DriveProfile)> {
    let fig2 = |kappa| {
        ModelParams::new(1.0, 0.2, 1.0, 0.0, 0.0, 50.0)
            .expect("fixture parameters are valid")
            .with_kappa(kappa)
    };
    let fig3 = ModelParams::new(1.0, 0.2, 0.05, 0.0, 0.0, 50.0).expect("fixture parameters are valid");
    let drive = DriveProfile::cd_sin_sq(1.0, 0.05);
    vec![
        ("overdamped kappa=1", fig2(1.0), drive),
        ("overdamped kappa=0.5", fig2(0.5), drive),
        ("underdamped kappa=1", fig3, drive),
    ]
}

fn check_analytic() -> (Vec<CheckResult>, Vec<ValidationReport>) {
    analytic_cases()
        .into_iter()
        .map(|(label, params, profile)| {
            let report = validate_against_numerics(&params, &profile, 0.01, params.tau);
            let (status, detail) = match (&report.error, report.status, &report.best) {
                (Some(e), _, _) => (CheckStatus::Fail, e.clone()),
                (None, ValidationStatus::Verified, Some(b)) => (
                    CheckStatus::Pass,
                    format!("VERIFIED: best residual {:e} ({:?}, {:?})", b.residual, b.b_interpretation, b.beta_convention),
                ),
                (None, _, best) => (
                    CheckStatus::Warn,
                    format!(
                        "UNVERIFIED: best residual {:e} above {:e}",
                        best.as_ref().map_or(f64::NAN, |b| b.residual),
                        report.threshold
                    ),
                ),
            };
            (
                CheckResult {
                    name: format!("analytic {label}"),
                    status,
                    detail,
                },
                report,
            )
        })
        .unzip()
}

pub fn run_selftest(options: &SelftestOptions) -> SelftestReport {
    let mut checks = vec![check_oracle(options.fault), check_decomposition(), check_transitionless()];
    let (analytic_checks, analytic) = check_analytic();
    checks.extend(analytic_checks);
    let status = if checks.iter().any(|c| c.status == CheckStatus::Fail) {
        CheckStatus::Fail
    } else if checks.iter().any(|c| c.status == CheckStatus::Warn) {
        CheckStatus::Warn
    } else {
        CheckStatus::Pass
    };
    SelftestReport {
        schema_version: SCHEMA_VERSION,
        status,
        checks,
        analytic,
    }
}
