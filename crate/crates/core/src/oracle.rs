//! Brute-force density-matrix propagation in a truncated Fock space.
//!
//! The joint state of charger and battery is stored as a dense row-major
//! matrix over the product basis `|i>_A |j>_B`, index `i * n_b + j`. The
//! Lindblad generator is applied directly through the ladder-operator matrix
//! elements, so one evaluation costs `O(dim^2)`.

use nalgebra::DMatrix;

use crate::cd_control::DriveField;
use crate::dynamics::{MomentSample, MomentState};
use crate::integrator::{rk4_step, time_grid};
use crate::model::coupling_window;
use crate::model::{DriveProfile, ModelParams};
use crate::{Error, Result, C64};

/// Population allowed in the two highest Fock levels of either mode.
pub const LEAK_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cutoffs {
    pub a: usize,
    pub b: usize,
}

impl Cutoffs {
    pub fn new(a: usize, b: usize) -> Result<Self> {
        if a < 4 || b < 4 {
            return Err(Error::invalid("cutoffs", format!("({a}, {b}) must both be >= 4")));
        }
        Ok(Cutoffs { a, b })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::new(n, n)
    }

    pub fn dim(&self) -> usize {
        self.a * self.b
    }
}

/// Joint density matrix of charger and battery.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseState {
    pub cutoffs: Cutoffs,
    /// Row-major `dim x dim` entries.
    pub rho: Vec<C64>,
}

impl DenseState {
    pub fn vacuum(cutoffs: Cutoffs) -> Self {
        let d = cutoffs.dim();
        let mut rho = vec![C64::new(0.0, 0.0); d * d];
        rho[0] = C64::new(1.0, 0.0);
        DenseState { cutoffs, rho }
    }

    /// `rho_a (x) rho_b` for single-mode density matrices.
    pub fn product(rho_a: &DMatrix<C64>, rho_b: &DMatrix<C64>) -> Self {
        let cutoffs = Cutoffs {
            a: rho_a.nrows(),
            b: rho_b.nrows(),
        };
        let joint = rho_a.kronecker(rho_b);
        let d = cutoffs.dim();
        let mut rho = Vec::with_capacity(d * d);
        for r in 0..d {
            for c in 0..d {
                rho.push(joint[(r, c)]);
            }
        }
        DenseState { cutoffs, rho }
    }

    fn dim(&self) -> usize {
        self.cutoffs.dim()
    }

    fn at(&self, i: usize, j: usize, ip: usize, jp: usize) -> C64 {
        let nb = self.cutoffs.b;
        self.rho[(i * nb + j) * self.dim() + ip * nb + jp]
    }

    pub fn trace(&self) -> C64 {
        let d = self.dim();
        (0..d).map(|k| self.rho[k * d + k]).sum()
    }

    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut worst: f64 = 0.0;
        for r in 0..d {
            for c in r..d {
                worst = worst.max((self.rho[r * d + c] - self.rho[c * d + r].conj()).norm());
            }
        }
        worst
    }

    /// Smallest eigenvalue of the (Hermitian part of the) joint density matrix.
    pub fn min_eigenvalue(&self) -> f64 {
        let d = self.dim();
        let m = DMatrix::from_row_slice(d, d, &self.rho);
        let herm = (&m + m.adjoint()) * C64::new(0.5, 0.0);
        herm.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Population in the two highest Fock levels of mode A and of mode B.
    pub fn top_level_populations(&self) -> (f64, f64) {
        let Cutoffs { a: na, b: nb } = self.cutoffs;
        let (mut top_a, mut top_b) = (0.0, 0.0);
        for i in 0..na {
            for j in 0..nb {
                let p = self.at(i, j, i, j).re;
                if i + 2 >= na {
                    top_a += p;
                }
                if j + 2 >= nb {
                    top_b += p;
                }
            }
        }
        (top_a, top_b)
    }

    pub fn reduced_battery(&self) -> DMatrix<C64> {
        let Cutoffs { a: na, b: nb } = self.cutoffs;
        DMatrix::from_fn(nb, nb, |j, jp| (0..na).map(|i| self.at(i, j, i, jp)).sum())
    }

    pub fn reduced_charger(&self) -> DMatrix<C64> {
        let Cutoffs { a: na, b: nb } = self.cutoffs;
        DMatrix::from_fn(na, na, |i, ip| (0..nb).map(|j| self.at(i, j, ip, j)).sum())
    }
}

impl crate::integrator::OdeState for DenseState {
    fn add_scaled(&self, other: &Self, factor: f64) -> Self {
        DenseState {
            cutoffs: self.cutoffs,
            rho: self.rho.add_scaled(&other.rho, factor),
        }
    }
}

/// Density matrix of the coherent state `|alpha>` truncated to `n` levels and
/// renormalized.
pub fn coherent_density(alpha: C64, n: usize) -> DMatrix<C64> {
    let mut ket = Vec::with_capacity(n);
    let mut amp = C64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    for k in 0..n {
        ket.push(amp);
        amp *= alpha / ((k + 1) as f64).sqrt();
    }
    let norm: f64 = ket.iter().map(|c| c.norm_sqr()).sum();
    let v = nalgebra::DVector::from_vec(ket) / C64::new(norm.sqrt(), 0.0);
    &v * v.adjoint()
}

/// Thermal state with mean occupation `nbar`, truncated to `n` levels and
/// renormalized.
pub fn thermal_density(nbar: f64, n: usize) -> DMatrix<C64> {
    let ratio = nbar / (1.0 + nbar);
    let weights: Vec<f64> = (0..n).map(|k| ratio.powi(k as i32)).collect();
    let total: f64 = weights.iter().sum();
    DMatrix::from_fn(n, n, |r, c| {
        if r == c {
            C64::new(weights[r] / total, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// Lindblad generator with the drive resolved.
#[derive(Debug, Clone, Copy)]
struct Liouvillian {
    params: ModelParams,
    field: DriveField,
    cutoffs: Cutoffs,
}

impl Liouvillian {
    fn apply(&self, t: f64, state: &DenseState, window: f64) -> DenseState {
        let Cutoffs { a: na, b: nb } = self.cutoffs;
        let d = na * nb;
        let rho = &state.rho;
        let g = self.params.g * window;
        let f = self.field.amplitude(t);
        let gamma = self.params.gamma;
        let down = gamma * (self.params.nbar + 1.0);
        let up = gamma * self.params.nbar;
        let sq: Vec<f64> = (0..na.max(nb) + 1).map(|k| (k as f64).sqrt()).collect();
        // Truncated a a^dag is diag(1, .., n - 1, 0).
        let aad = |i: usize| if i + 1 < na { (i + 1) as f64 } else { 0.0 };

        // X = H rho, row by row over the nonzeros of H.
        let mut x = vec![C64::new(0.0, 0.0); d * d];
        for i in 0..na {
            for j in 0..nb {
                let k = i * nb + j;
                let mut terms: [(usize, C64); 4] = [(0, C64::new(0.0, 0.0)); 4];
                let mut count = 0;
                if i + 1 < na && j >= 1 {
                    terms[count] = ((i + 1) * nb + j - 1, C64::new(g * sq[i + 1] * sq[j], 0.0));
                    count += 1;
                }
                if i >= 1 && j + 1 < nb {
                    terms[count] = ((i - 1) * nb + j + 1, C64::new(g * sq[i] * sq[j + 1], 0.0));
                    count += 1;
                }
                if i >= 1 {
                    terms[count] = ((i - 1) * nb + j, f * sq[i]);
                    count += 1;
                }
                if i + 1 < na {
                    terms[count] = ((i + 1) * nb + j, f.conj() * sq[i + 1]);
                    count += 1;
                }
                let row = &mut x[k * d..(k + 1) * d];
                for &(m, v) in &terms[..count] {
                    if v == C64::new(0.0, 0.0) {
                        continue;
                    }
                    let src = &rho[m * d..(m + 1) * d];
                    for (out, r) in row.iter_mut().zip(src) {
                        *out += v * r;
                    }
                }
            }
        }

        let minus_i = C64::new(0.0, -1.0);
        let mut out = vec![C64::new(0.0, 0.0); d * d];
        for i in 0..na {
            for j in 0..nb {
                let k = i * nb + j;
                for ip in 0..na {
                    let decay_diag = -0.5 * down * (i + ip) as f64 - 0.5 * up * (aad(i) + aad(ip));
                    for jp in 0..nb {
                        let l = ip * nb + jp;
                        // rho H = (H rho)^dag for Hermitian rho and H.
                        let mut v = minus_i * (x[k * d + l] - x[l * d + k].conj());
                        v += decay_diag * rho[k * d + l];
                        if i + 1 < na && ip + 1 < na {
                            let src = ((i + 1) * nb + j) * d + (ip + 1) * nb + jp;
                            v += down * sq[i + 1] * sq[ip + 1] * rho[src];
                        }
                        if i >= 1 && ip >= 1 && up != 0.0 {
                            let src = ((i - 1) * nb + j) * d + (ip - 1) * nb + jp;
                            v += up * sq[i] * sq[ip] * rho[src];
                        }
                        out[k * d + l] = v;
                    }
                }
            }
        }
        DenseState {
            cutoffs: self.cutoffs,
            rho: out,
        }
    }
}

/// Propagates the joint density matrix from the vacuum with RK4 and hands
/// every grid state to `observe`. Fails with [`Error::TruncationLeak`] as
/// soon as the top Fock levels become populated.
pub fn dense_evolve_with<F>(
    params: &ModelParams,
    profile: &DriveProfile,
    cutoffs: Cutoffs,
    step: f64,
    t_end: f64,
    mut observe: F,
) -> Result<DenseState>
where
    F: FnMut(f64, &DenseState),
{
    params.validate_with(profile)?;
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::invalid("step", format!("{step} must be > 0")));
    }
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::invalid("t_end", format!("{t_end} must be finite and >= 0")));
    }
    let generator = Liouvillian {
        params: *params,
        field: DriveField::new(profile, params.delta_r, params.gamma)?,
        cutoffs,
    };

    let mut state = DenseState::vacuum(cutoffs);
    observe(0.0, &state);
    for w in time_grid(step, t_end, Some(params.tau)).windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let window = coupling_window(0.5 * (t0 + t1), params.tau);
        let rhs = |t: f64, s: &DenseState| generator.apply(t, s, window);
        state = rk4_step(&rhs, t0, &state, t1 - t0);
        let (top_a, top_b) = state.top_level_populations();
        for (mode, population) in [('A', top_a), ('B', top_b)] {
            if population > LEAK_THRESHOLD {
                return Err(Error::TruncationLeak { t: t1, mode, population });
            }
        }
        observe(t1, &state);
    }
    Ok(state)
}

/// Density matrices on every `stride`-th grid point (the final point is
/// always included).
pub fn dense_evolve(
    params: &ModelParams,
    profile: &DriveProfile,
    cutoffs: Cutoffs,
    step: f64,
    t_end: f64,
    stride: usize,
) -> Result<Vec<(f64, DenseState)>> {
    let stride = stride.max(1);
    let mut out = Vec::new();
    let mut index = 0usize;
    let last = dense_evolve_with(params, profile, cutoffs, step, t_end, |t, s| {
        if index.is_multiple_of(stride) {
            out.push((t, s.clone()));
        }
        index += 1;
    })?;
    if !(index - 1).is_multiple_of(stride) {
        out.push((t_end, last));
    }
    Ok(out)
}

/// Moments of the dense evolution on every grid point.
pub fn dense_moments(
    params: &ModelParams,
    profile: &DriveProfile,
    cutoffs: Cutoffs,
    step: f64,
    t_end: f64,
) -> Result<Vec<MomentSample>> {
    let mut out = Vec::new();
    dense_evolve_with(params, profile, cutoffs, step, t_end, |t, s| {
        out.push(MomentSample {
            t,
            state: extract_moments(s),
        })
    })?;
    Ok(out)
}

/// `tr(rho X)` for the eight moment operators.
pub fn extract_moments(state: &DenseState) -> MomentState {
    let Cutoffs { a: na, b: nb } = state.cutoffs;
    let s = |k: usize| (k as f64).sqrt();
    let zero = C64::new(0.0, 0.0);
    let mut m = MomentState::vacuum();
    let (mut pa, mut pb) = (0.0, 0.0);
    let (mut a_mean, mut b_mean, mut ab_dag, mut a_sq, mut b_sq, mut ab) =
        (zero, zero, zero, zero, zero, zero);
    for i in 0..na {
        for j in 0..nb {
            let diag = state.at(i, j, i, j).re;
            pa += i as f64 * diag;
            pb += j as f64 * diag;
            if i + 1 < na {
                a_mean += s(i + 1) * state.at(i + 1, j, i, j);
            }
            if j + 1 < nb {
                b_mean += s(j + 1) * state.at(i, j + 1, i, j);
            }
            if i + 1 < na && j >= 1 {
                ab_dag += s(i + 1) * s(j) * state.at(i + 1, j - 1, i, j);
            }
            if i + 2 < na {
                a_sq += s(i + 1) * s(i + 2) * state.at(i + 2, j, i, j);
            }
            if j + 2 < nb {
                b_sq += s(j + 1) * s(j + 2) * state.at(i, j + 2, i, j);
            }
            if i + 1 < na && j + 1 < nb {
                ab += s(i + 1) * s(j + 1) * state.at(i + 1, j + 1, i, j);
            }
        }
    }
    m.a_mean = a_mean;
    m.b_mean = b_mean;
    m.na = pa;
    m.nb = pb;
    m.ab_dag = ab_dag;
    m.a_sq = a_sq;
    m.b_sq = b_sq;
    m.ab = ab;
    m
}

/// Energy of the passive state of a single-mode density matrix: eigenvalues
/// sorted in decreasing order are assigned to Fock levels `0, 1, 2, ...`.
pub fn passive_energy(rho: &DMatrix<C64>, omega0: f64) -> f64 {
    let herm = (rho + rho.adjoint()) * C64::new(0.5, 0.0);
    let mut eig: Vec<f64> = herm.symmetric_eigenvalues().iter().copied().collect();
    eig.sort_by(|x, y| y.total_cmp(x));
    omega0 * eig.iter().enumerate().map(|(k, p)| k as f64 * p).sum::<f64>()
}

/// Mean energy `omega0 tr(rho n)` of a single-mode density matrix.
pub fn mode_energy(rho: &DMatrix<C64>, omega0: f64) -> f64 {
    omega0 * (0..rho.nrows()).map(|k| k as f64 * rho[(k, k)].re).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn cut(n: usize) -> Cutoffs {
        Cutoffs::uniform(n).unwrap()
    }

    #[test]
    fn cutoffs_must_be_large_enough() {
        assert!(Cutoffs::uniform(3).is_err());
        assert!(Cutoffs::new(4, 6).is_ok());
    }

    #[test]
    fn vacuum_has_zero_moments() {
        assert_eq!(extract_moments(&DenseState::vacuum(cut(6))), MomentState::vacuum());
    }

    #[test]
    fn coherent_state_moments() {
        let alpha = C64::new(0.6, -0.4);
        let state = DenseState::product(&coherent_density(alpha, 20), &thermal_density(0.0, 6));
        let m = extract_moments(&state);
        let expected = MomentState::coherent(alpha, C64::new(0.0, 0.0));
        assert!(m.max_abs_diff(&expected) < 1e-10, "{m:?}");
    }

    #[test]
    fn thermal_state_moments() {
        let state = DenseState::product(&thermal_density(0.3, 30), &thermal_density(0.0, 5));
        let m = extract_moments(&state);
        assert_abs_diff_eq!(m.na, 0.3, epsilon = 1e-10);
        assert_eq!(m.a_mean, C64::new(0.0, 0.0));
        assert_eq!(m.a_sq, C64::new(0.0, 0.0));
        assert_eq!(m.nb, 0.0);
    }

    #[test]
    fn product_state_cross_moments() {
        let (alpha, beta) = (C64::new(0.3, 0.1), C64::new(-0.2, 0.5));
        let state = DenseState::product(&coherent_density(alpha, 16), &coherent_density(beta, 16));
        let m = extract_moments(&state);
        assert!(m.max_abs_diff(&MomentState::coherent(alpha, beta)) < 1e-10);
    }

    #[test]
    fn vacuum_stationary_without_drive() {
        let p = ModelParams::new(1.0, 0.3, 1.0, 0.0, 0.0, 10.0).unwrap();
        let traj = dense_evolve(&p, &DriveProfile::off(), cut(5), 0.01, 2.0, 50).unwrap();
        for (_, s) in traj {
            assert_eq!(s, DenseState::vacuum(cut(5)));
        }
    }

    #[test]
    fn single_mode_thermalization() {
        let p = ModelParams::new(1.0, 0.0, 1.0, 0.1, 0.0, 10.0).unwrap();
        let samples = dense_moments(&p, &DriveProfile::off(), cut(14), 0.01, 12.0).unwrap();
        for s in samples.iter().step_by(100) {
            let exact = 0.1 * (1.0 - (-s.t).exp());
            assert_abs_diff_eq!(s.state.na, exact, epsilon = 1e-9);
        }
        let last = dense_evolve(&p, &DriveProfile::off(), cut(14), 0.01, 12.0, 100000).unwrap();
        let rho_a = last.last().unwrap().1.reduced_charger();
        let thermal = thermal_density(0.1 * (1.0 - (-12.0f64).exp()), 14);
        assert!((rho_a - thermal).camax() < 1e-8);
    }

    #[test]
    fn invariants_preserved_under_drive() {
        let p = ModelParams::new(1.0, 0.4, 0.7, 0.15, 0.5, 10.0).unwrap();
        let traj = dense_evolve(&p, &DriveProfile::cd_sin_sq(0.3, 0.3), cut(12), 0.01, 6.0, 100).unwrap();
        for (_, s) in &traj {
            assert!((s.trace() - 1.0).norm() < 1e-8);
            assert!(s.hermiticity_error() < 1e-10);
            assert!(s.min_eigenvalue() > -1e-8);
        }
    }

    #[test]
    fn leak_is_reported() {
        let p = ModelParams::new(1.0, 0.2, 0.1, 0.0, 0.0, 10.0).unwrap();
        let err = dense_moments(&p, &DriveProfile::constant(2.0), cut(5), 0.01, 5.0).unwrap_err();
        assert!(matches!(err, Error::TruncationLeak { mode: 'A', .. }), "{err:?}");
    }

    #[test]
    fn passive_energy_of_simple_states() {
        let coh = coherent_density(C64::new(0.8, 0.0), 25);
        assert!(passive_energy(&coh, 1.0).abs() < 1e-10);
        let th = thermal_density(0.4, 40);
        assert_abs_diff_eq!(passive_energy(&th, 1.0), mode_energy(&th, 1.0), epsilon = 1e-10);
    }
}
