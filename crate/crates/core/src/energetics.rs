//! Stored energy, ergotropy and the coherent/thermal split.
//!
//! For a single-mode Gaussian state the passive energy has the closed form
//! `omega0 (sqrt(M) - 1) / 2` with
//! `M = (1 + 2 <b^dag b> - 2 |<b>|^2)^2 - 4 |<b^2> - <b>^2|^2`,
//! so no minimization over unitaries is needed.

use crate::dynamics::{integrate, MomentState, Trajectory};
use crate::model::{DriveKind, DriveProfile, ModelParams};
use crate::{Error, Result, C64};

/// Ergotropy below zero by less than this is floating-point noise.
pub const ERGOTROPY_CLAMP: f64 = 1e-9;
/// `M` below `1 - UNPHYSICAL_M_TOL` is rejected.
pub const UNPHYSICAL_M_TOL: f64 = 1e-6;
/// Pointwise tolerance of the decomposition identities.
pub const DECOMPOSITION_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyReport {
    pub e_b: f64,
    pub ergotropy_b: f64,
    pub passive_b: f64,
    pub m_value: f64,
    pub e_a: f64,
}

pub fn energy_b(s: &MomentState, omega0: f64) -> f64 {
    omega0 * s.nb
}

/// Energy `omega0 |alpha|^2` of a coherent charger amplitude.
pub fn energy_a(alpha: C64, omega0: f64) -> f64 {
    omega0 * alpha.norm_sqr()
}

/// The Gaussian purity-like quantity `M` of the battery mode.
pub fn m_value(s: &MomentState) -> f64 {
    1.0 + m_excess(s)
}

/// `M - 1 = 4 (n_c + n_c^2 - |s_c|^2)` in centered moments, free of the
/// cancellation in `(1 + 2 n_c)^2 - 1` for nearly pure states.
fn m_excess(s: &MomentState) -> f64 {
    let centered_n = s.nb - s.b_mean.norm_sqr();
    let centered_sq = s.b_sq - s.b_mean * s.b_mean;
    4.0 * (centered_n + centered_n * centered_n - centered_sq.norm_sqr())
}

pub fn ergotropy_b(s: &MomentState, omega0: f64) -> Result<EnergyReport> {
    let excess = m_excess(s);
    let m = 1.0 + excess;
    if !(excess >= -UNPHYSICAL_M_TOL) {
        return Err(Error::UnphysicalState { m_value: m });
    }
    let e_b = energy_b(s, omega0);
    // M < 1 within tolerance is integration noise; passive energy stays >= 0.
    // (sqrt(M) - 1) / 2 = (M - 1) / (2 (sqrt(M) + 1))
    let excess = excess.max(0.0);
    let passive = 0.5 * omega0 * excess / ((1.0 + excess).sqrt() + 1.0);
    let mut ergotropy = e_b - passive;
    if ergotropy < 0.0 && ergotropy > -ERGOTROPY_CLAMP {
        ergotropy = 0.0;
    }
    Ok(EnergyReport {
        e_b,
        ergotropy_b: ergotropy,
        passive_b: e_b - ergotropy,
        m_value: m,
        e_a: energy_a(s.a_mean, omega0),
    })
}

/// Energy reports for every sample of a trajectory.
pub fn energy_series(traj: &Trajectory) -> Result<Vec<EnergyReport>> {
    traj.samples
        .iter()
        .map(|s| ergotropy_b(&s.state, traj.params.omega0))
        .collect()
}

/// Aligned energy series of the full run and its two single-source parts.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub times: Vec<f64>,
    /// Drive and bath together.
    pub total: Vec<EnergyReport>,
    /// Bath only (`F = 0`).
    pub thermal_part: Vec<EnergyReport>,
    /// Drive only (`T = 0`).
    pub coherent_part: Vec<EnergyReport>,
    /// Largest `|E_B(F,T) - E_B(0,T) - E_B(F,0)|`.
    pub additivity_residual: f64,
    /// Largest `|ergotropy(F,T) - E_B(F,0)|`.
    pub coherent_ergotropy_residual: f64,
    /// Largest `|ergotropy(0,T)|`.
    pub thermal_ergotropy_max: f64,
}

/// Runs the mixed, thermal-only and coherent-only trajectories and checks
/// that battery energy splits additively and that only the coherent part is
/// extractable.
pub fn decompose(
    params: &ModelParams,
    profile: &DriveProfile,
    step: f64,
    t_end: f64,
) -> Result<Decomposition> {
    let thermal_params = *params;
    let thermal_profile = profile.with_kind(DriveKind::Off);
    let coherent_params = ModelParams { nbar: 0.0, ..*params };

    let runs = [
        (*params, *profile),
        (thermal_params, thermal_profile),
        (coherent_params, *profile),
    ];
    let trajectories = std::thread::scope(|scope| {
        let handles: Vec<_> = runs
            .iter()
            .map(|(p, f)| scope.spawn(move || integrate(p, f, step, t_end)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("trajectory thread panicked"))
            .collect::<Result<Vec<_>>>()
    })?;
    let [total, thermal, coherent] = [
        energy_series(&trajectories[0])?,
        energy_series(&trajectories[1])?,
        energy_series(&trajectories[2])?,
    ];

    let mut additivity: f64 = 0.0;
    let mut coherent_ergo: f64 = 0.0;
    let mut thermal_ergo: f64 = 0.0;
    for ((t, th), co) in total.iter().zip(&thermal).zip(&coherent) {
        additivity = additivity.max((t.e_b - th.e_b - co.e_b).abs());
        coherent_ergo = coherent_ergo.max((t.ergotropy_b - co.e_b).abs());
        thermal_ergo = thermal_ergo.max(th.ergotropy_b.abs());
    }
    let worst = additivity.max(coherent_ergo);
    if worst > DECOMPOSITION_TOL {
        return Err(Error::DecompositionMismatch { max_residual: worst });
    }
    Ok(Decomposition {
        times: trajectories[0].times().collect(),
        total,
        thermal_part: thermal,
        coherent_part: coherent,
        additivity_residual: additivity,
        coherent_ergotropy_residual: coherent_ergo,
        thermal_ergotropy_max: thermal_ergo,
    })
}
