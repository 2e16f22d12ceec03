//! Closed first- and second-moment equations of the charger-battery system.
//!
//! The master equation is quadratic in the mode operators, so starting from
//! the vacuum the state stays Gaussian and eight moments describe it
//! completely. With `H = g(t) (a b^dag + a^dag b) + F(t) a^dag + F*(t) a` and
//! thermal damping of `a` at rate `gamma` and occupation `nbar`:
//!
//! ```text
//! d<a>/dt      = -i (g <b> + F) - gamma/2 <a>
//! d<b>/dt      = -i g <a>
//! d<a b^dag>/dt = i (g (<a^dag a> - <b^dag b>) - F <b>*) - gamma/2 <a b^dag>
//! d<b^dag b>/dt = 2 g Im<a b^dag>
//! d<a^dag a>/dt = -2 g Im<a b^dag> - 2 Im(F* <a>) - gamma (<a^dag a> - nbar)
//! d<a^2>/dt    = -2i (g <a b> + F <a>) - gamma <a^2>
//! d<b^2>/dt    = -2i g <a b>
//! d<a b>/dt    = -i (g (<a^2> + <b^2>) + F <b>) - gamma/2 <a b>
//! ```

use std::ops::{Add, Mul, Sub};

use crate::cd_control::DriveField;
use crate::integrator::{rk4_step, time_grid, OdeState};
use crate::model::coupling_window;
use crate::model::{DriveProfile, ModelParams};
use crate::{Error, Result, C64};

const I: C64 = C64::new(0.0, 1.0);

/// Floor of the physicality tolerance for moment invariants. See
/// [`invariant_tolerance`] for the truncation budget added on top.
pub const PHYSICALITY_TOL: f64 = 1e-9;

/// Gaussian state of the two modes.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MomentState {
    /// `<a>`
    pub a_mean: C64,
    /// `<b>`
    pub b_mean: C64,
    /// `<a^dag a>`
    pub na: f64,
    /// `<b^dag b>`
    pub nb: f64,
    /// `<a b^dag>`
    pub ab_dag: C64,
    /// `<a^2>`
    pub a_sq: C64,
    /// `<b^2>`
    pub b_sq: C64,
    /// `<a b>`
    pub ab: C64,
}

impl MomentState {
    pub fn vacuum() -> Self {
        Self::default()
    }

    /// Product of coherent states `|alpha> (x) |beta>`.
    pub fn coherent(alpha: C64, beta: C64) -> Self {
        MomentState {
            a_mean: alpha,
            b_mean: beta,
            na: alpha.norm_sqr(),
            nb: beta.norm_sqr(),
            ab_dag: alpha * beta.conj(),
            a_sq: alpha * alpha,
            b_sq: beta * beta,
            ab: alpha * beta,
        }
    }

    /// The eight moments in field order, with the real populations promoted
    /// to complex numbers.
    pub fn to_array(&self) -> [C64; 8] {
        [
            self.a_mean,
            self.b_mean,
            C64::new(self.na, 0.0),
            C64::new(self.nb, 0.0),
            self.ab_dag,
            self.a_sq,
            self.b_sq,
            self.ab,
        ]
    }

    pub const FIELD_NAMES: [&'static str; 8] =
        ["a_mean", "b_mean", "na", "nb", "ab_dag", "a_sq", "b_sq", "ab"];

    /// Largest absolute difference over all eight moments.
    pub fn max_abs_diff(&self, other: &MomentState) -> f64 {
        self.to_array()
            .iter()
            .zip(other.to_array().iter())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    /// Checks positivity of the centered populations and the Cauchy-Schwarz
    /// bound on `<a b^dag>`. Returns the name and size of the first violation.
    pub fn check_physical(&self, tol: f64) -> std::result::Result<(), (&'static str, f64)> {
        let tol = tol * (1.0 + self.na.abs() + self.nb.abs());
        let checks = [
            ("na >= 0", -self.na),
            ("nb >= 0", -self.nb),
            ("na >= |<a>|^2", self.a_mean.norm_sqr() - self.na),
            ("nb >= |<b>|^2", self.b_mean.norm_sqr() - self.nb),
            (
                "|<a b^dag>|^2 <= na (nb + 1)",
                self.ab_dag.norm_sqr() - self.na * (self.nb + 1.0),
            ),
        ];
        for (name, excess) in checks {
            if !(excess <= tol) {
                return Err((name, excess));
            }
        }
        Ok(())
    }
}

impl Add for MomentState {
    type Output = MomentState;
    fn add(self, o: MomentState) -> MomentState {
        MomentState {
            a_mean: self.a_mean + o.a_mean,
            b_mean: self.b_mean + o.b_mean,
            na: self.na + o.na,
            nb: self.nb + o.nb,
            ab_dag: self.ab_dag + o.ab_dag,
            a_sq: self.a_sq + o.a_sq,
            b_sq: self.b_sq + o.b_sq,
            ab: self.ab + o.ab,
        }
    }
}

impl Mul<f64> for MomentState {
    type Output = MomentState;
    fn mul(self, c: f64) -> MomentState {
        MomentState {
            a_mean: self.a_mean * c,
            b_mean: self.b_mean * c,
            na: self.na * c,
            nb: self.nb * c,
            ab_dag: self.ab_dag * c,
            a_sq: self.a_sq * c,
            b_sq: self.b_sq * c,
            ab: self.ab * c,
        }
    }
}

impl Sub for MomentState {
    type Output = MomentState;
    fn sub(self, o: MomentState) -> MomentState {
        self + o * -1.0
    }
}

impl OdeState for MomentState {
    fn add_scaled(&self, other: &Self, factor: f64) -> Self {
        *self + *other * factor
    }
}

/// Right-hand side of the moment equations with the drive resolved.
#[derive(Debug, Clone, Copy)]
pub struct MomentEquations {
    pub params: ModelParams,
    pub field: DriveField,
}

impl MomentEquations {
    pub fn new(params: &ModelParams, profile: &DriveProfile) -> Result<Self> {
        params.validate_with(profile)?;
        Ok(MomentEquations {
            params: *params,
            field: DriveField::new(profile, params.delta_r, params.gamma)?,
        })
    }

    pub fn rhs(&self, t: f64, s: &MomentState) -> MomentState {
        self.rhs_in_window(t, s, coupling_window(t, self.params.tau))
    }

    /// Right-hand side with the coupling window value supplied by the caller,
    /// so that an integration step never straddles the switch-off.
    pub fn rhs_in_window(&self, t: f64, s: &MomentState, window: f64) -> MomentState {
        let g = self.params.g * window;
        let gamma = self.params.gamma;
        let f = self.field.amplitude(t);
        MomentState {
            a_mean: -I * (g * s.b_mean + f) - 0.5 * gamma * s.a_mean,
            b_mean: -I * g * s.a_mean,
            ab_dag: I * (g * (s.na - s.nb) - f * s.b_mean.conj()) - 0.5 * gamma * s.ab_dag,
            nb: 2.0 * g * s.ab_dag.im,
            na: -2.0 * g * s.ab_dag.im - 2.0 * (f.conj() * s.a_mean).im
                - gamma * (s.na - self.params.nbar),
            a_sq: -2.0 * I * (g * s.ab + f * s.a_mean) - gamma * s.a_sq,
            b_sq: -2.0 * I * g * s.ab,
            ab: -I * (g * (s.a_sq + s.b_sq) + f * s.b_mean) - 0.5 * gamma * s.ab,
        }
    }
}

/// Time derivative of every moment at `(t, s)`.
pub fn moment_rhs(
    t: f64,
    s: &MomentState,
    params: &ModelParams,
    profile: &DriveProfile,
) -> Result<MomentState> {
    Ok(MomentEquations::new(params, profile)?.rhs(t, s))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSample {
    pub t: f64,
    pub state: MomentState,
}

/// Moment states on the integration grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<MomentSample>,
    pub params: ModelParams,
    pub profile: DriveProfile,
    pub step: f64,
}

impl Trajectory {
    pub fn final_state(&self) -> &MomentState {
        &self.samples.last().expect("trajectory has at least one sample").state
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.t)
    }
}

/// Fastest rate of the problem, `max(omega_env, g, gamma, omega0)`.
pub fn characteristic_rate(params: &ModelParams, profile: &DriveProfile) -> f64 {
    profile
        .omega_env
        .max(params.g)
        .max(params.gamma)
        .max(params.omega0)
}

/// Largest step accepted by [`integrate`].
pub fn max_step(params: &ModelParams, profile: &DriveProfile) -> f64 {
    0.05 / characteristic_rate(params, profile)
}

/// Tolerance passed to [`MomentState::check_physical`] at time `t`.
///
/// First and second moments are propagated independently, so identities such
/// as `na = |<a>|^2` for pure states drift by the RK4 global error, roughly
/// `(rate step)^4 rate t` per quantum. A pure state sits exactly on the
/// boundary, so the budget must cover that drift.
pub fn invariant_tolerance(step: f64, rate: f64, t: f64) -> f64 {
    PHYSICALITY_TOL + (rate * step).powi(4) * rate * t
}

/// Integrates the moment equations from the vacuum with fixed-step RK4.
pub fn integrate(params: &ModelParams, profile: &DriveProfile, step: f64, t_end: f64) -> Result<Trajectory> {
    integrate_from(MomentState::vacuum(), params, profile, step, t_end)
}

/// As [`integrate`] but from an arbitrary initial state.
pub fn integrate_from(
    initial: MomentState,
    params: &ModelParams,
    profile: &DriveProfile,
    step: f64,
    t_end: f64,
) -> Result<Trajectory> {
    let eqs = MomentEquations::new(params, profile)?;
    integrate_with_rhs(initial, params, profile, step, t_end, |t, s, w| eqs.rhs_in_window(t, s, w))
}

/// RK4 driver over an arbitrary right-hand side `rhs(t, state, window)`.
/// The grid contains `tau` and `window` is the coupling window on the current
/// step. Used directly by harnesses that need to inject modified equations.
pub fn integrate_with_rhs<F>(
    initial: MomentState,
    params: &ModelParams,
    profile: &DriveProfile,
    step: f64,
    t_end: f64,
    rhs: F,
) -> Result<Trajectory>
where
    F: Fn(f64, &MomentState, f64) -> MomentState,
{
    params.validate_with(profile)?;
    let limit = max_step(params, profile);
    if !(step > 0.0) || step > limit * (1.0 + 1e-12) {
        return Err(Error::StepTooLarge { step, limit });
    }
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::invalid("t_end", format!("{t_end} must be finite and >= 0")));
    }

    let rate = characteristic_rate(params, profile);
    let grid = time_grid(step, t_end, Some(params.tau));
    let mut samples = Vec::with_capacity(grid.len());
    let mut state = initial;
    samples.push(MomentSample { t: 0.0, state });
    for w in grid.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let window = coupling_window(0.5 * (t0 + t1), params.tau);
        let step_rhs = |t: f64, s: &MomentState| rhs(t, s, window);
        state = rk4_step(&step_rhs, t0, &state, t1 - t0);
        if let Err((invariant, residual)) = state.check_physical(invariant_tolerance(step, rate, t1)) {
            return Err(Error::InvariantViolation {
                t: t1,
                invariant,
                residual,
            });
        }
        samples.push(MomentSample { t: t1, state });
    }
    Ok(Trajectory {
        samples,
        params: *params,
        profile: *profile,
        step,
    })
}
