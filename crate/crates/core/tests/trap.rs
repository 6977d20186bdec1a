use batrap_core::constants::{isotope, COULOMB_CONSTANT, ELEMENTARY_CHARGE};
use batrap_core::trap::{
    calibrate_geometry, chain_equilibrium, implied_axial_frequency, secular_frequencies, TrapConfig, TrapError,
};
use proptest::prelude::*;

fn mass() -> f64 {
    isotope(138).unwrap().atomic_mass
}

fn calibrated() -> TrapConfig {
    calibrate_geometry(&TrapConfig::reference(), 626e3, 272e3).unwrap()
}

/// Largest net force in units of mω²ℓ, recomputed from SI positions.
fn residual(z: &[f64], nu: f64, l: f64) -> f64 {
    let k = mass() * (2.0 * std::f64::consts::PI * nu).powi(2);
    z.iter()
        .enumerate()
        .map(|(i, &zi)| {
            let coulomb: f64 = z
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &zj)| {
                    let d = zi - zj;
                    COULOMB_CONSTANT * ELEMENTARY_CHARGE * ELEMENTARY_CHARGE * d.signum() / (d * d)
                })
                .sum();
            ((coulomb - k * zi) / (k * l)).abs()
        })
        .fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn chain_is_antisymmetric_and_balanced(n in 1usize..=60, nu in 20e3..2e6f64) {
        let s = chain_equilibrium(n, nu, mass(), ELEMENTARY_CHARGE).unwrap();
        for i in 0..n {
            prop_assert_eq!(s.positions[i], -s.positions[n - 1 - i]);
        }
        prop_assert!(s.positions.windows(2).all(|w| w[1] > w[0]));
        prop_assert!(s.max_force < 1e-12);
        prop_assert!(residual(&s.positions, nu, s.length_scale) < 1e-10);
    }

    #[test]
    fn chain_compresses_as_omega_to_minus_two_thirds(n in 2usize..=40, nu in 20e3..1e6f64, k in 1.1..10.0f64) {
        let a = chain_equilibrium(n, nu, mass(), ELEMENTARY_CHARGE).unwrap();
        let b = chain_equilibrium(n, k * nu, mass(), ELEMENTARY_CHARGE).unwrap();
        let expected = k.powf(-2.0 / 3.0);
        for (x, y) in a.positions.iter().zip(&b.positions) {
            if *x != 0.0 {
                prop_assert!((y / x / expected - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn radial_frequency_is_linear_in_rf_voltage(v in 5.0..150.0f64, k in 0.2..3.0f64) {
        let base = TrapConfig { endcap_voltage: 0.0, rf_voltage_rms: v, ..calibrated() };
        let scaled = TrapConfig { rf_voltage_rms: k * v, ..base };
        if let (Ok(a), Ok(b)) = (secular_frequencies(&base), secular_frequencies(&scaled)) {
            prop_assert!((b.radial / a.radial / k - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn axial_frequency_is_root_of_endcap_voltage(u in 0.5..50.0f64, k in 0.1..4.0f64) {
        let base = TrapConfig { endcap_voltage: u, ..calibrated() };
        let scaled = TrapConfig { endcap_voltage: k * u, ..base };
        if let (Ok(a), Ok(b)) = (secular_frequencies(&base), secular_frequencies(&scaled)) {
            prop_assert!((b.axial / a.axial / k.sqrt() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn mass_scaling(k in 0.7..1.5f64) {
        let base = TrapConfig { endcap_voltage: 0.0, ..calibrated() };
        let heavy = TrapConfig { ion_mass: k * base.ion_mass, ..base };
        let a = secular_frequencies(&base).unwrap();
        let b = secular_frequencies(&heavy).unwrap();
        prop_assert!((b.radial * k / a.radial - 1.0).abs() < 1e-9);
        let with_endcaps = calibrated();
        let heavy = TrapConfig { ion_mass: k * with_endcaps.ion_mass, ..with_endcaps };
        let a = secular_frequencies(&with_endcaps).unwrap();
        let b = secular_frequencies(&heavy).unwrap();
        prop_assert!((b.axial * k.sqrt() / a.axial - 1.0).abs() < 1e-9);
    }
}

#[test]
fn central_spacing_shrinks_with_ion_number() {
    let spacings: Vec<f64> = (2..=60)
        .map(|n| chain_equilibrium(n, 272e3, mass(), ELEMENTARY_CHARGE).unwrap().central_spacing())
        .collect();
    assert!(spacings.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn implied_frequency_reproduces_spacing() {
    let nu = implied_axial_frequency(30, 12e-6, mass(), ELEMENTARY_CHARGE).unwrap();
    let s = chain_equilibrium(30, nu, mass(), ELEMENTARY_CHARGE).unwrap();
    assert!((s.central_spacing() / 12e-6 - 1.0).abs() < 1e-10);
    assert!((nu - 20.46e3).abs() < 0.1e3, "{nu}");
}

#[test]
fn calibrated_trap_reproduces_targets() {
    let f = secular_frequencies(&calibrated()).unwrap();
    assert!((f.radial - 626e3).abs() < 1e-6);
    assert!((f.axial - 272e3).abs() < 1e-6);
    assert!(f.mathieu_q < 0.908);
}

#[test]
fn overdriven_trap_is_rejected() {
    let cfg = TrapConfig {
        rf_voltage_rms: 2000.0,
        ..calibrated()
    };
    assert!(matches!(secular_frequencies(&cfg), Err(TrapError::Unstable { .. })));
}
