//! Physical parameters, drive envelopes, coupling window and bath occupation.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Constants of the two-oscillator open system.
///
/// All quantities are expressed in units of `omega0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub omega0: f64,
    /// Charger-battery coupling strength.
    pub g: f64,
    /// Decay rate of the charger into its bath.
    pub gamma: f64,
    /// Mean bath occupation at `omega0`.
    pub nbar: f64,
    /// Detuning between oscillator and drive carrier, `omega0 - omega_d`.
    pub delta_r: f64,
    /// Length of the charging interval.
    pub tau: f64,
}

impl ModelParams {
    pub fn new(omega0: f64, g: f64, gamma: f64, nbar: f64, delta_r: f64, tau: f64) -> Result<Self> {
        let params = ModelParams {
            omega0,
            g,
            gamma,
            nbar,
            delta_r,
            tau,
        };
        params.validate()?;
        Ok(params)
    }

    /// Sets the detuning from the normalized drive frequency `kappa = omega_d / omega0`.
    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.delta_r = self.omega0 * (1.0 - kappa);
        self
    }

    /// Sets the bath occupation from a thermal energy `kT`.
    pub fn with_thermal_energy(mut self, kt: f64) -> Self {
        self.nbar = bose_occupation(self.omega0, kt);
        self
    }

    pub fn kappa(&self) -> f64 {
        1.0 - self.delta_r / self.omega0
    }

    pub fn validate(&self) -> Result<()> {
        fn check(name: &'static str, value: f64, ok: bool, rule: &str) -> Result<()> {
            if value.is_finite() && ok {
                Ok(())
            } else {
                Err(Error::invalid(name, format!("{value} violates {rule}")))
            }
        }
        check("omega0", self.omega0, self.omega0 > 0.0, "omega0 > 0")?;
        check("g", self.g, self.g >= 0.0, "g >= 0")?;
        check("gamma", self.gamma, self.gamma >= 0.0, "gamma >= 0")?;
        check("nbar", self.nbar, self.nbar >= 0.0, "nbar >= 0")?;
        check("delta_r", self.delta_r, true, "finite")?;
        check("tau", self.tau, self.tau > 0.0, "tau > 0")?;
        Ok(())
    }

    /// Checks the parameters against a drive profile, rejecting a
    /// counterdiabatic profile whose correction denominator vanishes.
    pub fn validate_with(&self, profile: &DriveProfile) -> Result<()> {
        self.validate()?;
        profile.validate()?;
        if profile.kind == DriveKind::CdSinSq && self.gamma == 0.0 && self.delta_r == 0.0 {
            return Err(Error::SingularDenominator);
        }
        Ok(())
    }

    pub fn coupling(&self, t: f64) -> f64 {
        self.g * coupling_window(t, self.tau)
    }
}

/// Shape of the coherent field applied to the charger.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriveKind {
    Off,
    Static,
    SinSq,
    CdSinSq,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveProfile {
    pub kind: DriveKind,
    /// Peak amplitude `F0`.
    pub f0: f64,
    /// Envelope angular frequency of `F0 sin^2(omega_env t)`.
    pub omega_env: f64,
}

impl DriveProfile {
    pub fn off() -> Self {
        DriveProfile {
            kind: DriveKind::Off,
            f0: 0.0,
            omega_env: 0.0,
        }
    }

    pub fn constant(f0: f64) -> Self {
        DriveProfile {
            kind: DriveKind::Static,
            f0,
            omega_env: 0.0,
        }
    }

    pub fn sin_sq(f0: f64, omega_env: f64) -> Self {
        DriveProfile {
            kind: DriveKind::SinSq,
            f0,
            omega_env,
        }
    }

    pub fn cd_sin_sq(f0: f64, omega_env: f64) -> Self {
        DriveProfile {
            kind: DriveKind::CdSinSq,
            f0,
            omega_env,
        }
    }

    /// Same profile with a different kind, keeping amplitude and envelope.
    pub fn with_kind(self, kind: DriveKind) -> Self {
        DriveProfile { kind, ..self }
    }

    /// Same profile with the amplitude multiplied by `factor`.
    pub fn scaled(self, factor: f64) -> Self {
        DriveProfile {
            f0: self.f0 * factor,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.f0.is_finite() && self.f0 >= 0.0) {
            return Err(Error::invalid("f0", format!("{} violates f0 >= 0", self.f0)));
        }
        let needs_envelope = matches!(self.kind, DriveKind::SinSq | DriveKind::CdSinSq);
        if needs_envelope && !(self.omega_env.is_finite() && self.omega_env > 0.0) {
            return Err(Error::invalid(
                "omega_env",
                format!("{} violates omega_env > 0", self.omega_env),
            ));
        }
        Ok(())
    }
}

/// Bose-Einstein occupation `1 / (exp(omega0 / kT) - 1)`, zero at `kT = 0`.
pub fn bose_occupation(omega0: f64, kt: f64) -> f64 {
    if kt <= 0.0 {
        return 0.0;
    }
    1.0 / (omega0 / kt).exp_m1()
}

/// Indicator of the charging interval `[0, tau]`.
pub fn coupling_window(t: f64, tau: f64) -> f64 {
    if (0.0..=tau).contains(&t) {
        1.0
    } else {
        0.0
    }
}

/// Bare drive envelope `F(t)`. The counterdiabatic correction is added by
/// [`crate::cd_control::cd_field`].
pub fn envelope(t: f64, profile: &DriveProfile) -> f64 {
    match profile.kind {
        DriveKind::Off => 0.0,
        DriveKind::Static => profile.f0,
        DriveKind::SinSq | DriveKind::CdSinSq => {
            let s = (profile.omega_env * t).sin();
            profile.f0 * s * s
        }
    }
}

/// Time derivative of [`envelope`], evaluated analytically.
pub fn envelope_rate(t: f64, profile: &DriveProfile) -> f64 {
    match profile.kind {
        DriveKind::Off | DriveKind::Static => 0.0,
        DriveKind::SinSq | DriveKind::CdSinSq => {
            profile.f0 * profile.omega_env * (2.0 * profile.omega_env * t).sin()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, LN_2};

    #[test]
    fn bose_occupation_values() {
        assert_eq!(bose_occupation(1.0, 0.0), 0.0);
        assert_abs_diff_eq!(bose_occupation(1.0, 1.0 / LN_2), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(bose_occupation(1.0, 1.0 / 1.5f64.ln()), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn window_edges() {
        assert_eq!(coupling_window(-0.1, 1.0), 0.0);
        assert_eq!(coupling_window(0.0, 1.0), 1.0);
        assert_eq!(coupling_window(0.5, 1.0), 1.0);
        assert_eq!(coupling_window(1.0, 1.0), 1.0);
        assert_eq!(coupling_window(1.1, 1.0), 0.0);
    }

    #[test]
    fn envelope_values() {
        assert_eq!(envelope(3.7, &DriveProfile::off()), 0.0);
        let p = DriveProfile::sin_sq(2.0, 0.5);
        assert_abs_diff_eq!(envelope(FRAC_PI_2 / 0.5, &p), 2.0, epsilon = 1e-14);
        assert_eq!(envelope(0.0, &p), 0.0);
        assert_eq!(envelope(0.0, &DriveProfile::constant(0.3)), 0.3);
    }

    #[test]
    fn envelope_rate_matches_finite_difference() {
        let p = DriveProfile::cd_sin_sq(0.7, 0.3);
        let h = 1e-5;
        for &t in &[0.1, 1.0, 2.5, 7.0] {
            let fd = (envelope(t + h, &p) - envelope(t - h, &p)) / (2.0 * h);
            assert_abs_diff_eq!(envelope_rate(t, &p), fd, epsilon = 1e-9);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(ModelParams::new(0.0, 0.2, 1.0, 0.0, 0.0, 1.0).is_err());
        assert!(ModelParams::new(1.0, -0.2, 1.0, 0.0, 0.0, 1.0).is_err());
        assert!(ModelParams::new(1.0, 0.2, 1.0, -1.0, 0.0, 1.0).is_err());
        assert!(ModelParams::new(1.0, 0.2, 1.0, 0.0, 0.0, 0.0).is_err());
        assert!(DriveProfile::sin_sq(1.0, 0.0).validate().is_err());
        assert!(DriveProfile::constant(-1.0).validate().is_err());

        let closed = ModelParams::new(1.0, 0.2, 0.0, 0.0, 0.0, 1.0).unwrap();
        assert_eq!(
            closed.validate_with(&DriveProfile::cd_sin_sq(1.0, 0.1)),
            Err(Error::SingularDenominator)
        );
        assert!(closed.validate_with(&DriveProfile::sin_sq(1.0, 0.1)).is_ok());
    }

    #[test]
    fn kappa_sets_detuning() {
        let p = ModelParams::new(2.0, 0.2, 1.0, 0.0, 0.0, 1.0).unwrap().with_kappa(0.5);
        assert_eq!(p.delta_r, 1.0);
        assert_eq!(p.kappa(), 0.5);
    }

    proptest! {
        #[test]
        fn bose_occupation_increases_with_temperature(kt in 0.01f64..50.0, dk in 0.001f64..5.0) {
            prop_assert!(bose_occupation(1.0, kt + dk) > bose_occupation(1.0, kt));
        }

        #[test]
        fn envelope_bounded_by_peak(t in -100.0f64..100.0, f0 in 0.0f64..5.0, w in 0.01f64..3.0) {
            for profile in [
                DriveProfile::off(),
                DriveProfile::constant(f0),
                DriveProfile::sin_sq(f0, w),
                DriveProfile::cd_sin_sq(f0, w),
            ] {
                let f = envelope(t, &profile);
                prop_assert!((0.0..=f0).contains(&f));
            }
        }

        #[test]
        fn window_is_indicator(t in -10.0f64..10.0, tau in 0.01f64..10.0) {
            let w = coupling_window(t, tau);
            prop_assert!(w == 0.0 || w == 1.0);
        }
    }
}
