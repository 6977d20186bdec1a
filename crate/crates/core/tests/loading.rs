use std::sync::OnceLock;

use batrap_core::beam::{BeamConfig, Divergence};
use batrap_core::constants::{isotope, registry, TransitionData};
use batrap_core::excitation::{ExcitationConfig, PiStepConfig};
use batrap_core::fitting::{fit, DataSeries, FitOptions, Gaussian};
use batrap_core::loading::{
    simulate_counts, simulate_trials, CalibrationAnchor, LoadingScenario, TransverseProfile, TrialEngine,
};
use batrap_core::rng::SeedKey;
use proptest::prelude::*;
use rand_distr::{Distribution, StandardNormal};

fn natural(masses: &[u32], power: f64) -> LoadingScenario {
    let beam = BeamConfig::new(573.15, Divergence::Gaussian { fwhm: 0.3 }, isotope(138).unwrap().atomic_mass).unwrap();
    let exc = ExcitationConfig::new(power, 100e-6, TransitionData::intercombination_791()).unwrap();
    let profile =
        TransverseProfile::sample(&beam, exc.transition.wavelength, 200_000, 1e6, &SeedKey::derive(1, "beam-profile"))
            .unwrap();
    let isotopes = registry().into_iter().filter(|i| masses.contains(&i.mass_number)).collect();
    let mut s = LoadingScenario::new(beam, exc, PiStepConfig::default(), isotopes, profile).unwrap();
    s.calibrate(&CalibrationAnchor::default()).unwrap();
    s
}

fn shared() -> &'static LoadingScenario {
    static S: OnceLock<LoadingScenario> = OnceLock::new();
    S.get_or_init(|| natural(&[134, 135, 136, 137, 138], 100e-6))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn rate_never_below_background(d in -3e9..3e9f64, mass in 134u32..=138) {
        let s = shared();
        prop_assert!(s.analytic_rate(d, mass).unwrap() >= s.background_rate);
    }

    #[test]
    fn shifting_line_and_laser_together_is_invariant(d in -400e6..400e6f64, shift in -2e9..2e9f64) {
        let s = shared();
        let iso = isotope(136).unwrap();
        let moved = batrap_core::constants::IsotopeRecord { shift_791: iso.shift_791 + shift, ..iso.clone() };
        let a = s.rate_for(&iso, d).unwrap();
        let b = s.rate_for(&moved, d + shift).unwrap();
        prop_assert!((a - b).abs() <= 1e-6 * a, "{} vs {}", a, b);
    }

    #[test]
    fn rate_grows_with_power(p1 in 1e-6..5e-3f64, p2 in 1e-6..5e-3f64, d in -150e6..150e6f64) {
        let s = shared();
        let (lo, hi) = if p1 < p2 { (p1, p2) } else { (p2, p1) };
        let a = s.with_power(lo).analytic_rate(d, 138).unwrap();
        let b = s.with_power(hi).analytic_rate(d, 138).unwrap();
        prop_assert!(a <= b, "{} > {}", a, b);
    }

    #[test]
    fn peak_sits_on_isotope_line(mass in prop::sample::select(vec![134u32, 136, 138]), phase in 0.0..5e6f64) {
        let s = shared();
        let center = isotope(mass).unwrap().shift_791;
        let step = 5e6;
        let grid: Vec<f64> = (-40..=40).map(|i| center + phase + i as f64 * step).collect();
        let rates: Vec<f64> = grid.iter().map(|&d| s.analytic_rate(d, mass).unwrap()).collect();
        let imax = (0..rates.len()).max_by(|&a, &b| rates[a].total_cmp(&rates[b])).unwrap();
        prop_assert!((grid[imax] - center).abs() <= step, "peak at {}", grid[imax]);
    }
}

#[test]
fn calibration_hits_anchor() {
    let s = natural(&[138], 0.75e-3);
    assert!((s.analytic_rate(0.0, 138).unwrap() - 2.0).abs() < 1e-9);
}

#[test]
fn noisy_spectrum_fit_recovers_line() {
    let s = shared();
    let grid: Vec<f64> = (-60..=60).map(|i| i as f64 * 5e6).collect();
    let clean: Vec<f64> = grid.iter().map(|&d| s.analytic_rate(d, 138).unwrap()).collect();
    let peak = clean.iter().cloned().fold(0.0, f64::max);
    let mut rng = SeedKey::derive(2, "noise").stream(0);
    let noisy: Vec<f64> = clean
        .iter()
        .map(|&y| {
            let z: f64 = StandardNormal.sample(&mut rng);
            y + 0.05 * peak * z
        })
        .collect();
    let data = DataSeries::unweighted(grid, noisy).unwrap();
    let r = fit(&Gaussian, &data, &[peak, 0.0, 100e6, 0.0], &FitOptions::default()).unwrap();
    assert!(r.converged);
    assert!(r.value("center").unwrap().abs() < 5e6);
    let fwhm = r.value("fwhm").unwrap();
    assert!((80e6..130e6).contains(&fwhm), "{fwhm}");
    assert!(r.error("center").unwrap() < 5e6);
}

#[test]
fn poisson_counts_have_poisson_variance() {
    let counts = simulate_counts(&SeedKey::derive(3, "trials"), 3.0, 2.0, 20_000).unwrap();
    let n = counts.len() as f64;
    let mean = counts.iter().map(|&c| c as f64).sum::<f64>() / n;
    let var = counts.iter().map(|&c| (c as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0);
    assert!((mean - 6.0).abs() < 0.06, "{mean}");
    assert!((var / mean - 1.0).abs() < 0.05, "{var} / {mean}");
}

#[test]
fn atom_by_atom_converges_to_analytic_rate() {
    let s = natural(&[138], 0.75e-3);
    let expected = s.analytic_rate(0.0, 138).unwrap();
    let key = SeedKey::derive(4, "trials");
    let mut errors = Vec::new();
    for trials in [25, 400] {
        let est = simulate_trials(&key, &s, 138, 5.0, trials, TrialEngine::AtomByAtom).unwrap();
        assert!(
            (est.rate - expected).abs() < 4.0 * est.uncertainty + 0.03 * expected,
            "{trials} trials: {} ± {} vs {expected}",
            est.rate,
            est.uncertainty
        );
        errors.push(est.uncertainty);
    }
    assert!(errors[1] < errors[0] / 3.0);
}

#[test]
fn same_seed_same_trials() {
    let s = natural(&[138], 0.75e-3);
    let key = SeedKey::derive(5, "trials");
    for engine in [TrialEngine::Poisson, TrialEngine::AtomByAtom] {
        let a = simulate_trials(&key, &s, 138, 5.0, 10, engine).unwrap();
        let b = simulate_trials(&key, &s, 138, 5.0, 10, engine).unwrap();
        assert_eq!(a, b);
    }
}
