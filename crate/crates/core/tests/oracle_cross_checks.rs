//! Moment engine against the truncated Fock-space propagation.

use qbattery_core::dynamics::integrate;
use qbattery_core::energetics::ergotropy_b;
use qbattery_core::model::{DriveProfile, ModelParams};
use qbattery_core::oracle::{dense_evolve, extract_moments, mode_energy, passive_energy, Cutoffs};

fn mixed_run() -> (ModelParams, DriveProfile) {
    // Thermal bath and counterdiabatic drive with the coupling switched off
    // half way, so the battery freezes in a displaced mixed state.
    let params = ModelParams::new(1.0, 0.3, 1.0, 0.2, 0.0, 6.0).unwrap().with_kappa(0.7);
    (params, DriveProfile::cd_sin_sq(0.25, 0.2))
}

#[test]
fn moments_match_dense_evolution_across_switch_off() {
    let (params, profile) = mixed_run();
    let traj = integrate(&params, &profile, 0.01, 10.0).unwrap();
    let dense = dense_evolve(&params, &profile, Cutoffs::uniform(14).unwrap(), 0.01, 10.0, 50).unwrap();
    for (t, rho) in &dense {
        let sample = traj.samples.iter().find(|s| s.t == *t).unwrap();
        let d = extract_moments(rho).max_abs_diff(&sample.state);
        assert!(d < 1e-6, "t = {t}: deviation {d:e}");
        assert!((rho.trace().re - 1.0).abs() < 1e-8);
    }
    let frozen: Vec<_> = traj.samples.iter().filter(|s| s.t >= params.tau).collect();
    assert!(frozen.iter().all(|s| s.state.nb == frozen[0].state.nb));
}

#[test]
fn gaussian_passive_energy_matches_spectral_passive_state() {
    let (params, profile) = mixed_run();
    let traj = integrate(&params, &profile, 0.01, 6.0).unwrap();
    let dense = dense_evolve(&params, &profile, Cutoffs::uniform(14).unwrap(), 0.01, 6.0, 100).unwrap();
    let mut checked = 0;
    for (t, rho) in &dense {
        let sample = traj.samples.iter().find(|s| s.t == *t).unwrap();
        let report = ergotropy_b(&sample.state, params.omega0).unwrap();
        let rho_b = rho.reduced_battery();
        let spectral = passive_energy(&rho_b, params.omega0);
        assert!((spectral - report.passive_b).abs() < 1e-6, "t = {t}: {spectral} vs {}", report.passive_b);
        assert!((mode_energy(&rho_b, params.omega0) - report.e_b).abs() < 1e-6);
        checked += 1;
    }
    assert!(checked >= 6);
    // Mixed and displaced at the end, so both parts are non-trivial.
    let last = ergotropy_b(traj.final_state(), params.omega0).unwrap();
    assert!(last.passive_b > 1e-3 && last.ergotropy_b > 1e-2, "{last:?}");
}

#[test]
fn zero_temperature_drive_keeps_battery_pure() {
    let params = ModelParams::new(1.0, 0.2, 1.0, 0.0, 0.0, 20.0).unwrap();
    let profile = DriveProfile::cd_sin_sq(0.5, 0.05);
    let dense = dense_evolve(&params, &profile, Cutoffs::uniform(14).unwrap(), 0.01, 20.0, 400).unwrap();
    for (t, rho) in &dense {
        let rho_b = rho.reduced_battery();
        let purity = (&rho_b * &rho_b).trace().re;
        assert!((purity - 1.0).abs() < 1e-6, "t = {t}: purity {purity}");
        assert!(passive_energy(&rho_b, 1.0).abs() < 1e-6);
    }
}
