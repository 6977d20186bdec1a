//! Counting statistics of repeated loading trials.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{IntensityAveraging, LoadingError, LoadingScenario};
use crate::beam::{doppler_shift, sample_atom};
use crate::excitation::excited_fraction;
use crate::rng::{SeedKey, SimRng};

/// Aggregate of all trials: rate = N/T, uncertainty = √N/T.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateEstimate {
    pub total_ions: u64,
    pub total_time: f64,
    pub rate: f64,
    pub uncertainty: f64,
}

impl RateEstimate {
    pub fn from_counts(total_ions: u64, total_time: f64) -> Self {
        let n = total_ions as f64;
        Self {
            total_ions,
            total_time,
            rate: n / total_time,
            uncertainty: n.sqrt() / total_time,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialEngine {
    /// Ion count per trial drawn directly from Poisson(R·T).
    #[default]
    Poisson,
    /// Individual atoms crossing the 791 nm beam at each UV pulse.
    AtomByAtom,
}

/// Radius of the sampling disk in units of the 791 nm waist.
const DISK_RADIUS: f64 = 4.0;

fn poisson<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).map(|d| d.sample(rng) as u64).unwrap_or(0)
}

/// Ion counts of `n_trials` trials of length `duration` at a fixed rate.
/// Trial i draws from stream i of `key`.
pub fn simulate_counts(key: &SeedKey, rate: f64, duration: f64, n_trials: usize) -> Result<Vec<u64>, LoadingError> {
    check(duration, n_trials)?;
    if !(rate >= 0.0 && rate.is_finite()) {
        return Err(LoadingError::Rate(rate));
    }
    Ok((0..n_trials)
        .into_par_iter()
        .map(|i| poisson(&mut key.stream(i as u64), rate * duration))
        .collect())
}

fn check(duration: f64, n_trials: usize) -> Result<(), LoadingError> {
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(LoadingError::Duration(duration));
    }
    if n_trials == 0 {
        return Err(LoadingError::NoTrials);
    }
    Ok(())
}

/// Runs `n_trials` loading trials for one isotope at the scenario's
/// detuning and power, and aggregates the counts.
pub fn simulate_trials(
    key: &SeedKey,
    scenario: &LoadingScenario,
    mass_number: u32,
    duration: f64,
    n_trials: usize,
    engine: TrialEngine,
) -> Result<RateEstimate, LoadingError> {
    check(duration, n_trials)?;
    let counts = match engine {
        TrialEngine::Poisson => {
            let rate = scenario.analytic_rate(scenario.excitation.detuning, mass_number)?;
            simulate_counts(key, rate, duration, n_trials)?
        }
        TrialEngine::AtomByAtom => {
            let iso = scenario.selected(mass_number)?;
            let atoms = AtomSampler::new(scenario, iso);
            (0..n_trials)
                .into_par_iter()
                .map(|i| atoms.trial(&mut key.stream(i as u64), duration))
                .collect()
        }
    };
    let total: u64 = counts.iter().sum();
    Ok(RateEstimate::from_counts(total, duration * n_trials as f64))
}

struct AtomSampler<'a> {
    scenario: &'a LoadingScenario,
    beam: crate::beam::BeamConfig,
    components: Vec<(f64, f64)>,
    atoms_per_pulse: f64,
    ionized_fraction: f64,
    peak_saturation: f64,
}

impl<'a> AtomSampler<'a> {
    fn new(scenario: &'a LoadingScenario, iso: &crate::constants::IsotopeRecord) -> Self {
        let rep_rate = scenario.pi_step.pulse.rep_rate;
        // A uniform disk of radius 4w has 32 times the effective area πw²/2
        // used to normalize the beam-averaged response.
        let area_factor = match scenario.intensity_averaging {
            IntensityAveraging::GaussianBeam => 2.0 * DISK_RADIUS * DISK_RADIUS,
            IntensityAveraging::Peak => 1.0,
        };
        Self {
            scenario,
            beam: scenario.beam.with_mass(iso.atomic_mass),
            components: scenario.components(iso),
            atoms_per_pulse: scenario.calibration_constant * iso.abundance * area_factor / rep_rate,
            ionized_fraction: scenario.pi_step.ionized_fraction(),
            peak_saturation: scenario.excitation.saturation(),
        }
    }

    fn trial(&self, rng: &mut SimRng, duration: f64) -> u64 {
        let sc = self.scenario;
        let transition = &sc.excitation.transition;
        let probe = sc.beam.probe_direction();
        let pulses = (duration * sc.pi_step.pulse.rep_rate).round() as u64;
        let mut ions = poisson(rng, sc.background_rate * duration);
        for _ in 0..pulses {
            let n = poisson(rng, self.atoms_per_pulse);
            for _ in 0..n {
                let (v, dir) = sample_atom(rng, &self.beam);
                let f = doppler_shift(v, &dir, &probe, transition.wavelength);
                let mut u: f64 = rng.random();
                let mut offset = self.components[self.components.len() - 1].0;
                for &(o, w) in &self.components {
                    if u < w {
                        offset = o;
                        break;
                    }
                    u -= w;
                }
                let s = match sc.intensity_averaging {
                    IntensityAveraging::GaussianBeam => {
                        let r2 = DISK_RADIUS * DISK_RADIUS * rng.random::<f64>();
                        self.peak_saturation * (-2.0 * r2).exp()
                    }
                    IntensityAveraging::Peak => self.peak_saturation,
                };
                let rho = excited_fraction(sc.excitation.detuning - offset - f, s, transition);
                if rng.random::<f64>() < rho * self.ionized_fraction {
                    ions += 1;
                }
            }
        }
        ions
    }
}
