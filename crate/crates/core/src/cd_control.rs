//! Counterdiabatic control fields.
//!
//! Two constructions live here:
//!
//! * the open-system drive for the damped, driven charger, obtained by moving
//!   to a displaced frame that tracks the instantaneous steady state
//!   `alpha_bar(t) = i F(t) / (delta_r - i gamma / 2)`. The counterdiabatic
//!   Hamiltonian in that frame is `c(t) a^dag + h.c.` with
//!   `c(t) = -i F'(t) / (delta_r - i gamma / 2)`, so the total drive amplitude
//!   multiplying `a^dag` is `F_cd(t) = F(t) + c(t)`;
//! * the closed-system transitionless driving Hamiltonian
//!   `H_cd = i sum_n (|d_t n><n| - <n|d_t n> |n><n|)` built numerically from
//!   sampled instantaneous eigenvectors.

use nalgebra::{DMatrix, DVector};

use crate::model::{envelope, envelope_rate, DriveKind, DriveProfile};
use crate::{Error, Result, C64};

const I: C64 = C64::new(0.0, 1.0);

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Drive amplitude at one instant, split into the bare envelope and the
/// counterdiabatic correction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdDriveSample {
    pub t: f64,
    pub f_cd: C64,
    pub f_bare: f64,
    pub correction: C64,
}

fn displaced_frame_denominator(delta_r: f64, gamma: f64) -> Result<C64> {
    if delta_r == 0.0 && gamma == 0.0 {
        return Err(Error::SingularDenominator);
    }
    Ok(C64::new(delta_r, -0.5 * gamma))
}

/// Total drive amplitude at time `t`.
///
/// Only [`DriveKind::CdSinSq`] carries a correction; for the other profiles
/// the correction is identically zero and no denominator is formed.
pub fn cd_field(t: f64, profile: &DriveProfile, delta_r: f64, gamma: f64) -> Result<CdDriveSample> {
    let f_bare = envelope(t, profile);
    let correction = match profile.kind {
        DriveKind::CdSinSq => {
            let denom = displaced_frame_denominator(delta_r, gamma)?;
            -I * envelope_rate(t, profile) / denom
        }
        _ => C64::new(0.0, 0.0),
    };
    Ok(CdDriveSample {
        t,
        f_cd: f_bare + correction,
        f_bare,
        correction,
    })
}

/// Instantaneous steady-state amplitude of the driven damped oscillator,
/// `i F(t) / (delta_r - i gamma / 2)`.
pub fn steady_displacement(t: f64, profile: &DriveProfile, delta_r: f64, gamma: f64) -> Result<C64> {
    let denom = displaced_frame_denominator(delta_r, gamma)?;
    Ok(I * envelope(t, profile) / denom)
}

/// Precomputed drive amplitude as a function of time. Resolves the
/// denominator once so the hot integration loop stays infallible.
#[derive(Debug, Clone, Copy)]
pub struct DriveField {
    profile: DriveProfile,
    inv_denom: C64,
}

impl DriveField {
    pub fn new(profile: &DriveProfile, delta_r: f64, gamma: f64) -> Result<Self> {
        let inv_denom = match profile.kind {
            DriveKind::CdSinSq => displaced_frame_denominator(delta_r, gamma)?.inv(),
            _ => C64::new(0.0, 0.0),
        };
        Ok(DriveField {
            profile: *profile,
            inv_denom,
        })
    }

    pub fn amplitude(&self, t: f64) -> C64 {
        let bare = C64::new(envelope(t, &self.profile), 0.0);
        if self.profile.kind == DriveKind::CdSinSq {
            bare - I * envelope_rate(t, &self.profile) * self.inv_denom
        } else {
            bare
        }
    }
}

/// A Hermitian matrix sampled at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianTrajectorySample {
    pub t: f64,
    pub h: DMatrix<C64>,
}

impl HermitianTrajectorySample {
    pub fn hermiticity_error(&self) -> f64 {
        (&self.h - self.h.adjoint()).camax()
    }
}

/// Eigenvectors (as columns, ascending eigenvalue order) at time `t`.
#[derive(Debug, Clone)]
pub struct InstantaneousBasis {
    pub t: f64,
    pub energies: Vec<f64>,
    pub vectors: DMatrix<C64>,
}

#[derive(Debug, Clone, Copy)]
pub struct ClosedCdOptions {
    /// Smallest admissible spectral gap.
    pub gap_tolerance: f64,
    /// Smallest admissible `|<n(t_k)|n(t_{k+1})>|`.
    pub min_overlap: f64,
    /// Re-phase each eigenvector against the previous sample.
    pub gauge_fix: bool,
}

impl Default for ClosedCdOptions {
    fn default() -> Self {
        ClosedCdOptions {
            gap_tolerance: 1e-8,
            min_overlap: 0.9,
            gauge_fix: true,
        }
    }
}

/// Diagonalizes a Hermitian matrix and returns eigenpairs sorted by energy.
pub fn diagonalize(t: f64, h: &DMatrix<C64>, gap_tolerance: f64) -> Result<InstantaneousBasis> {
    let eig = h.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let energies: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let gap = energies
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    if gap < gap_tolerance {
        return Err(Error::DegenerateSpectrum {
            t,
            gap,
            tolerance: gap_tolerance,
        });
    }
    let columns: Vec<DVector<C64>> = order
        .iter()
        .map(|&i| eig.eigenvectors.column(i).into_owned())
        .collect();
    Ok(InstantaneousBasis {
        t,
        energies,
        vectors: DMatrix::from_columns(&columns),
    })
}

/// Transitionless driving Hamiltonian for each sample of `H0(t)`.
pub fn cd_hamiltonian_closed(
    samples: &[HermitianTrajectorySample],
    options: &ClosedCdOptions,
) -> Result<Vec<HermitianTrajectorySample>> {
    let bases = samples
        .iter()
        .map(|s| diagonalize(s.t, &s.h, options.gap_tolerance))
        .collect::<Result<Vec<_>>>()?;
    cd_from_bases(bases, options)
}

/// Same as [`cd_hamiltonian_closed`] but starting from already computed
/// eigenbases, whose phases are arbitrary.
pub fn cd_from_bases(
    mut bases: Vec<InstantaneousBasis>,
    options: &ClosedCdOptions,
) -> Result<Vec<HermitianTrajectorySample>> {
    let n = bases.len();
    if n < 3 {
        return Err(Error::invalid("samples", format!("need at least 3, got {n}")));
    }
    let h = bases[1].t - bases[0].t;
    if !(h > 0.0) {
        return Err(Error::invalid("samples", "times must be increasing"));
    }
    for w in bases.windows(2) {
        let dt = w[1].t - w[0].t;
        if (dt - h).abs() > 1e-9 * h.max(1.0) {
            return Err(Error::invalid("samples", "time grid must be uniform"));
        }
    }

    for k in 1..n {
        let (prev, cur) = bases.split_at_mut(k);
        let prev = &prev[k - 1];
        let cur = &mut cur[0];
        for col in 0..cur.vectors.ncols() {
            let overlap = prev.vectors.column(col).dotc(&cur.vectors.column(col));
            if overlap.norm() < options.min_overlap {
                return Err(Error::GridTooCoarse {
                    t: cur.t,
                    overlap: overlap.norm(),
                });
            }
            if options.gauge_fix {
                let phase = overlap.conj() / overlap.norm();
                cur.vectors.column_mut(col).scale_mut_complex(phase);
            }
        }
    }

    let dim = bases[0].vectors.nrows();
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let derivative = |col: usize| -> DVector<C64> {
            let v = |j: usize| bases[j].vectors.column(col).into_owned();
            if k == 0 {
                (v(0) * re(-3.0) + v(1) * re(4.0) - v(2)) * re(0.5 / h)
            } else if k == n - 1 {
                (v(n - 1) * re(3.0) - v(n - 2) * re(4.0) + v(n - 3)) * re(0.5 / h)
            } else {
                (v(k + 1) - v(k - 1)) * re(0.5 / h)
            }
        };
        let mut acc = DMatrix::<C64>::zeros(dim, dim);
        for col in 0..dim {
            let ket = bases[k].vectors.column(col).into_owned();
            let dket = derivative(col);
            let berry = ket.dotc(&dket);
            acc += (&dket - &ket * berry) * ket.adjoint();
        }
        acc *= I;
        let herm = (&acc + acc.adjoint()) * C64::new(0.5, 0.0);
        out.push(HermitianTrajectorySample { t: bases[k].t, h: herm });
    }
    Ok(out)
}

trait ScaleComplex {
    fn scale_mut_complex(&mut self, factor: C64);
}

impl<S> ScaleComplex for nalgebra::Matrix<C64, nalgebra::Dyn, nalgebra::U1, S>
where
    S: nalgebra::StorageMut<C64, nalgebra::Dyn, nalgebra::U1>,
{
    fn scale_mut_complex(&mut self, factor: C64) {
        for x in self.iter_mut() {
            *x *= factor;
        }
    }
}

/// `exp(-i H dt) psi` for Hermitian `H`.
pub fn unitary_step(h: &DMatrix<C64>, psi: &DVector<C64>, dt: f64) -> DVector<C64> {
    let eig = h.clone().symmetric_eigen();
    let v = &eig.eigenvectors;
    let mut coeffs = v.adjoint() * psi;
    for (c, &e) in coeffs.iter_mut().zip(eig.eigenvalues.iter()) {
        *c *= C64::from_polar(1.0, -e * dt);
    }
    v * coeffs
}

/// Landau-Zener style avoided crossing `H0(t) = (delta sx + lambda(t) sz) / 2`
/// with `lambda` swept linearly from `lambda_start` to `lambda_end` over
/// `duration`. Used to demonstrate transitionless driving.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLevelSweep {
    pub delta: f64,
    pub lambda_start: f64,
    pub lambda_end: f64,
    pub duration: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepFidelity {
    /// Smallest instantaneous-ground-state population along the sweep.
    pub min_overlap: f64,
    pub final_overlap: f64,
}

impl TwoLevelSweep {
    pub fn lambda(&self, t: f64) -> f64 {
        self.lambda_start + (self.lambda_end - self.lambda_start) * t / self.duration
    }

    pub fn sweep_rate(&self) -> f64 {
        (self.lambda_end - self.lambda_start) / self.duration
    }

    pub fn hamiltonian(&self, t: f64) -> DMatrix<C64> {
        let l = self.lambda(t);
        let d = self.delta;
        DMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(0.5 * l, 0.0),
                C64::new(0.5 * d, 0.0),
                C64::new(0.5 * d, 0.0),
                C64::new(-0.5 * l, 0.0),
            ],
        )
    }

    /// `H0` on a uniform grid of `points` samples spanning the sweep.
    pub fn samples(&self, points: usize) -> Vec<HermitianTrajectorySample> {
        let dt = self.duration / (points - 1) as f64;
        (0..points)
            .map(|k| {
                let t = k as f64 * dt;
                HermitianTrajectorySample {
                    t,
                    h: self.hamiltonian(t),
                }
            })
            .collect()
    }

    /// Evolves the initial instantaneous ground state with the exponential
    /// midpoint rule over a grid of `2 m + 1` samples, optionally adding the
    /// numerically synthesized counterdiabatic term.
    pub fn run(&self, intervals: usize, with_cd: bool) -> Result<SweepFidelity> {
        let points = 2 * intervals + 1;
        let h0 = self.samples(points);
        let cd = if with_cd {
            Some(cd_hamiltonian_closed(&h0, &ClosedCdOptions::default())?)
        } else {
            None
        };
        let total = |k: usize| match &cd {
            Some(cd) => &h0[k].h + &cd[k].h,
            None => h0[k].h.clone(),
        };
        let ground = |k: usize| -> Result<DVector<C64>> {
            Ok(diagonalize(h0[k].t, &h0[k].h, 0.0)?.vectors.column(0).into_owned())
        };

        let dt = 2.0 * (h0[1].t - h0[0].t);
        let mut psi = ground(0)?;
        let mut min_overlap: f64 = 1.0;
        let mut overlap = 1.0;
        for m in 0..intervals {
            psi = unitary_step(&total(2 * m + 1), &psi, dt);
            overlap = ground(2 * m + 2)?.dotc(&psi).norm_sqr();
            min_overlap = min_overlap.min(overlap);
        }
        Ok(SweepFidelity {
            min_overlap,
            final_overlap: overlap,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DriveProfile;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    #[test]
    fn cd_field_vanishes_at_start() {
        let p = DriveProfile::cd_sin_sq(0.8, 0.3);
        let s = cd_field(0.0, &p, 0.5, 1.0).unwrap();
        assert_eq!(s.f_cd, C64::new(0.0, 0.0));
    }

    #[test]
    fn cd_field_equals_peak_at_envelope_maximum() {
        let p = DriveProfile::cd_sin_sq(0.8, 0.3);
        let s = cd_field(FRAC_PI_2 / 0.3, &p, 0.5, 1.0).unwrap();
        assert_abs_diff_eq!(s.f_cd.re, 0.8, epsilon = 1e-12);
        assert_abs_diff_eq!(s.f_cd.im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn cd_field_hand_computed_value() {
        // F = 1/2, F' = 1, -i * 1 / (-i) = 1.
        let p = DriveProfile::cd_sin_sq(1.0, 1.0);
        let s = cd_field(FRAC_PI_4, &p, 0.0, 2.0).unwrap();
        assert_abs_diff_eq!(s.f_cd.re, 1.5, epsilon = 1e-12);
        assert_abs_diff_eq!(s.f_cd.im, 0.0, epsilon = 1e-12);
        assert_eq!(s.f_cd, s.f_bare + s.correction);
    }

    #[test]
    fn singular_denominator_rejected() {
        let p = DriveProfile::cd_sin_sq(1.0, 1.0);
        assert_eq!(cd_field(0.3, &p, 0.0, 0.0), Err(Error::SingularDenominator));
        assert!(DriveField::new(&p, 0.0, 0.0).is_err());
        // Bare profiles never form the denominator.
        let bare = DriveProfile::sin_sq(1.0, 1.0);
        assert!(cd_field(0.3, &bare, 0.0, 0.0).unwrap().correction == C64::new(0.0, 0.0));
    }

    #[test]
    fn steady_displacement_values() {
        let off = DriveProfile::off();
        assert_eq!(steady_displacement(1.0, &off, 1.0, 0.0).unwrap(), C64::new(0.0, 0.0));
        let unit = DriveProfile::constant(1.0);
        let a = steady_displacement(0.0, &unit, 1.0, 0.0).unwrap();
        assert_abs_diff_eq!(a.re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(a.im, 1.0, epsilon = 1e-15);
        let b = steady_displacement(0.0, &unit, 0.0, 2.0).unwrap();
        assert_abs_diff_eq!(b.re, -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(b.im, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn correction_is_derivative_of_steady_displacement() {
        // c(t) = -d/dt alpha_bar(t): the displaced frame generator.
        let p = DriveProfile::cd_sin_sq(0.6, 0.4);
        let (dr, gamma, h) = (0.3, 0.7, 1e-5);
        for &t in &[0.2, 1.1, 3.0] {
            let rate = (steady_displacement(t + h, &p, dr, gamma).unwrap()
                - steady_displacement(t - h, &p, dr, gamma).unwrap())
                / (2.0 * h);
            let c = cd_field(t, &p, dr, gamma).unwrap().correction;
            assert_abs_diff_eq!((c + rate).norm(), 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn drive_field_matches_cd_field() {
        let p = DriveProfile::cd_sin_sq(0.6, 0.4);
        let field = DriveField::new(&p, -0.3, 0.2).unwrap();
        for &t in &[0.0, 0.7, 2.9] {
            let s = cd_field(t, &p, -0.3, 0.2).unwrap();
            assert_abs_diff_eq!((field.amplitude(t) - s.f_cd).norm(), 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn correction_bounded_by_damping() {
        let p = DriveProfile::cd_sin_sq(0.9, 0.5);
        for &gamma in &[1.0, 10.0, 100.0, 1000.0] {
            for k in 0..50 {
                let t = 0.13 * k as f64;
                let c = cd_field(t, &p, 0.0, gamma).unwrap().correction.norm();
                assert!(c <= 2.0 * p.f0 * p.omega_env / gamma + 1e-15);
            }
        }
    }

    fn sweep() -> TwoLevelSweep {
        TwoLevelSweep {
            delta: 1.0,
            lambda_start: -10.0,
            lambda_end: 10.0,
            duration: 10.0,
        }
    }

    #[test]
    fn constant_hamiltonian_gives_zero_cd() {
        let h = sweep().hamiltonian(3.0);
        let samples: Vec<_> = (0..5)
            .map(|k| HermitianTrajectorySample { t: 0.1 * k as f64, h: h.clone() })
            .collect();
        let cd = cd_hamiltonian_closed(&samples, &ClosedCdOptions::default()).unwrap();
        for s in cd {
            assert!(s.h.camax() < 1e-12);
        }
    }

    #[test]
    fn identity_shift_leaves_cd_unchanged() {
        let samples = sweep().samples(201);
        let shifted: Vec<_> = samples
            .iter()
            .map(|s| {
                let c = (3.0 * s.t).sin() + 2.0;
                HermitianTrajectorySample {
                    t: s.t,
                    h: &s.h + DMatrix::<C64>::identity(2, 2) * C64::new(c, 0.0),
                }
            })
            .collect();
        let opts = ClosedCdOptions::default();
        let a = cd_hamiltonian_closed(&samples, &opts).unwrap();
        let b = cd_hamiltonian_closed(&shifted, &opts).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((&x.h - &y.h).camax() < 1e-9);
        }
    }

    #[test]
    fn two_level_cd_matches_angle_rate() {
        // H_cd = theta'/2 sigma_y with theta = atan2(delta, lambda); this is the
        // closed form of eigenvector differentiation for a real two-level sweep.
        let s = sweep();
        let samples = s.samples(2001);
        let cd = cd_hamiltonian_closed(&samples, &ClosedCdOptions::default()).unwrap();
        for out in &cd {
            let l = s.lambda(out.t);
            let theta_rate = -s.delta * s.sweep_rate() / (l * l + s.delta * s.delta);
            // sigma_y: [[0, -i], [i, 0]]
            assert!(out.h[(0, 0)].norm() < 1e-9 && out.h[(1, 1)].norm() < 1e-9);
            assert!(out.h[(0, 1)].re.abs() < 1e-12);
            assert_abs_diff_eq!(out.h[(0, 1)].im, -0.5 * theta_rate, epsilon = 1e-4);
            assert_abs_diff_eq!(out.h[(1, 0)].im, 0.5 * theta_rate, epsilon = 1e-4);
            assert!(out.hermiticity_error() < 1e-12);
            assert!(out.h.trace().norm() < 1e-12);
        }
    }

    #[test]
    fn gauge_phases_do_not_change_cd() {
        let samples = sweep().samples(401);
        let opts = ClosedCdOptions::default();
        let bases: Vec<_> = samples.iter().map(|s| diagonalize(s.t, &s.h, 1e-8).unwrap()).collect();
        let reference = cd_from_bases(bases.clone(), &opts).unwrap();
        let scrambled: Vec<_> = bases
            .into_iter()
            .enumerate()
            .map(|(k, mut b)| {
                for col in 0..2 {
                    let phase = C64::from_polar(1.0, 1.7 * k as f64 + 0.9 * col as f64);
                    b.vectors.column_mut(col).scale_mut_complex(phase);
                }
                b
            })
            .collect();
        let fixed = cd_from_bases(scrambled, &opts).unwrap();
        for (x, y) in reference.iter().zip(&fixed) {
            assert!((&x.h - &y.h).camax() < 1e-8);
        }
    }

    #[test]
    fn degenerate_spectrum_rejected() {
        let zero = DMatrix::<C64>::zeros(2, 2);
        let samples: Vec<_> = (0..3)
            .map(|k| HermitianTrajectorySample { t: k as f64, h: zero.clone() })
            .collect();
        assert!(matches!(
            cd_hamiltonian_closed(&samples, &ClosedCdOptions::default()),
            Err(Error::DegenerateSpectrum { .. })
        ));
    }

    #[test]
    fn coarse_grid_rejected() {
        let s = TwoLevelSweep {
            delta: 0.05,
            ..sweep()
        };
        assert!(matches!(
            cd_hamiltonian_closed(&s.samples(3), &ClosedCdOptions::default()),
            Err(Error::GridTooCoarse { .. })
        ));
    }

    #[test]
    fn transitionless_sweep_follows_ground_state() {
        let s = sweep();
        let bare = s.run(2000, false).unwrap();
        let driven = s.run(2000, true).unwrap();
        assert!(bare.final_overlap < 0.9, "{bare:?}");
        assert!(driven.min_overlap > 1.0 - 1e-4, "{driven:?}");
    }
}
