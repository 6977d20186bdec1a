//! Loading rate of a photoionization-loaded trap versus detuning, power and
//! isotope, with Poisson counting statistics and the non-PI sources.
//!
//! The analytic rate for an isotope is
//!
//! R(δ) = R_bg + C·u·A·Σ_k w_k ∫ G(f)·ρ(δ − Δ_k − f, s) df
//!
//! with G the transverse Doppler-shift density of the beam, Δ_k and w_k the
//! line offsets and weights, A the abundance, u the UV ionized fraction and
//! C the calibration constant.

mod profile;
mod sources;
mod trials;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::beam::{BeamConfig, BeamError};
use crate::constants::{isotope, ConstantsError, IsotopeRecord};
use crate::excitation::{
    beam_averaged_excitation, excited_fraction, peak_intensity, ExcitationConfig, ExcitationError, PiStepConfig,
};
use crate::fitting::{fit, DataSeries, FitError, FitOptions, PowerLaw, SqrtSaturation};
use crate::quadrature::{integrate, Options, QuadratureError};

pub use profile::{TransverseProfile, SMOOTHING_RADIUS};
pub use sources::{efficiency_comparison, table_one, Efficiency, SourceRate, SourceTable};
pub use trials::{simulate_counts, simulate_trials, RateEstimate, TrialEngine};

/// N₂-laser-alone loading rate (ions/s).
pub const DEFAULT_BACKGROUND_RATE: f64 = 0.005;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LoadingError {
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Beam(#[from] BeamError),
    #[error(transparent)]
    Excitation(#[from] ExcitationError),
    #[error(transparent)]
    Constants(#[from] ConstantsError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error("calibration constant must be non-negative and finite, got {0}")]
    Calibration(f64),
    #[error("background rate must be non-negative and finite, got {0} ions/s")]
    Background(f64),
    #[error("calibration anchor {anchor} ions/s is below the background rate {background} ions/s")]
    AnchorBelowBackground { anchor: f64, background: f64 },
    #[error("model output at the calibration anchor is zero")]
    NoSignalAtAnchor,
    #[error("isotope {0}Ba is not part of the scenario")]
    IsotopeNotSelected(u32),
    #[error("detuning grid needs at least 3 points, got {0}")]
    GridTooShort(usize),
    #[error("detuning grid must be sorted ascending")]
    GridNotSorted,
    #[error("laser power must be positive, got {0} W")]
    Power(f64),
    #[error("trial duration must be positive, got {0} s")]
    Duration(f64),
    #[error("at least one trial is required")]
    NoTrials,
    #[error("rate must be non-negative and finite, got {0} ions/s")]
    Rate(f64),
    #[error("{0} rate is zero; ratio undefined")]
    ZeroDenominator(&'static str),
}

/// How the 791 nm response is evaluated across the laser's transverse
/// intensity profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntensityAveraging {
    /// Average over the Gaussian beam I₀·exp(−2r²/w²), normalized to πw²/2.
    #[default]
    GaussianBeam,
    /// Every atom sees the peak intensity P/(πw²).
    Peak,
}

/// Relative strengths of the hyperfine components of odd isotopes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HyperfineWeighting {
    /// (2F+1)/Σ(2F'+1)
    #[default]
    Statistical,
    Equal,
}

/// Operating point at which the calibration constant is fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationAnchor {
    /// Total loading rate including background (ions/s).
    pub rate: f64,
    pub power: f64,
    pub detuning: f64,
    pub mass_number: u32,
}

impl Default for CalibrationAnchor {
    fn default() -> Self {
        Self {
            rate: 2.0,
            power: 0.75e-3,
            detuning: 0.0,
            mass_number: 138,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadingScenario {
    pub beam: BeamConfig,
    pub excitation: ExcitationConfig,
    pub pi_step: PiStepConfig,
    pub isotopes: Vec<IsotopeRecord>,
    /// Ions/s per unit of dimensionless model output.
    pub calibration_constant: f64,
    pub background_rate: f64,
    pub hyperfine_weighting: HyperfineWeighting,
    pub intensity_averaging: IntensityAveraging,
    /// Doppler-shift density for atoms of `beam.species_mass`.
    pub profile: TransverseProfile,
    pub quadrature: Options,
}

/// One isotope's rates on a detuning grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trace {
    pub mass_number: u32,
    pub rates: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    pub detunings: Vec<f64>,
    pub traces: Vec<Trace>,
    /// Sum over isotopes with the background counted once.
    pub total: Vec<f64>,
}

impl Spectrum {
    pub fn trace(&self, mass_number: u32) -> Option<&Trace> {
        self.traces.iter().find(|t| t.mass_number == mass_number)
    }
}

impl LoadingScenario {
    /// Scenario with unit calibration, the default background and default
    /// weighting/averaging choices.
    pub fn new(
        beam: BeamConfig,
        excitation: ExcitationConfig,
        pi_step: PiStepConfig,
        isotopes: Vec<IsotopeRecord>,
        profile: TransverseProfile,
    ) -> Result<Self, LoadingError> {
        let scenario = Self {
            beam,
            excitation,
            pi_step,
            isotopes,
            calibration_constant: 1.0,
            background_rate: DEFAULT_BACKGROUND_RATE,
            hyperfine_weighting: HyperfineWeighting::default(),
            intensity_averaging: IntensityAveraging::default(),
            profile,
            quadrature: Options::default(),
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<(), LoadingError> {
        self.beam.validate()?;
        self.excitation.validate()?;
        for iso in &self.isotopes {
            iso.validate()?;
        }
        if !(self.calibration_constant >= 0.0 && self.calibration_constant.is_finite()) {
            return Err(LoadingError::Calibration(self.calibration_constant));
        }
        if !(self.background_rate >= 0.0 && self.background_rate.is_finite()) {
            return Err(LoadingError::Background(self.background_rate));
        }
        Ok(())
    }

    pub fn with_power(&self, power: f64) -> Self {
        let mut s = self.clone();
        s.excitation = s.excitation.with_power(power);
        s
    }

    pub fn selected(&self, mass_number: u32) -> Result<&IsotopeRecord, LoadingError> {
        self.isotopes
            .iter()
            .find(|i| i.mass_number == mass_number)
            .ok_or(LoadingError::IsotopeNotSelected(mass_number))
    }

    /// Line offsets (Hz) and relative weights of an isotope.
    pub fn components(&self, iso: &IsotopeRecord) -> Vec<(f64, f64)> {
        if iso.hyperfine_components.is_empty() {
            return vec![(iso.shift_791, 1.0)];
        }
        let weights: Vec<f64> = match self.hyperfine_weighting {
            HyperfineWeighting::Statistical => iso.hyperfine_components.iter().map(|c| c.degeneracy()).collect(),
            HyperfineWeighting::Equal => vec![1.0; iso.hyperfine_components.len()],
        };
        let total: f64 = weights.iter().sum();
        iso.hyperfine_components
            .iter()
            .zip(weights)
            .map(|(c, w)| (c.offset, w / total))
            .collect()
    }

    /// Doppler-shift density for an isotope: shifts scale as 1/√m.
    pub fn isotope_profile(&self, iso: &IsotopeRecord) -> TransverseProfile {
        self.profile.scaled((self.beam.species_mass / iso.atomic_mass).sqrt())
    }

    /// FWHM of the Doppler-shift density for an isotope (Hz).
    pub fn doppler_width(&self, iso: &IsotopeRecord) -> f64 {
        self.isotope_profile(iso).fwhm()
    }

    /// Response of a single atom at effective detuning `delta` (Hz).
    pub fn line_response(&self, delta: f64) -> f64 {
        let s = self.excitation.saturation();
        let t = &self.excitation.transition;
        match self.intensity_averaging {
            IntensityAveraging::GaussianBeam => beam_averaged_excitation(delta, s, t),
            IntensityAveraging::Peak => excited_fraction(delta, s, t),
        }
    }

    /// Dimensionless model output u·A·Σ_k w_k ∫ G(f)·ρ(δ − Δ_k − f) df.
    pub fn model_output(&self, iso: &IsotopeRecord, laser_detuning: f64) -> Result<f64, LoadingError> {
        if iso.abundance == 0.0 || self.excitation.power == 0.0 {
            return Ok(0.0);
        }
        let g = self.isotope_profile(iso);
        let knots = g.knots();
        let (lo, hi) = (g.start, g.end());
        let mut sum = 0.0;
        for (offset, weight) in self.components(iso) {
            let x = laser_detuning - offset;
            let mut breaks = knots.clone();
            if x > lo && x < hi {
                let at = breaks.partition_point(|&k| k < x);
                if breaks[at] != x {
                    breaks.insert(at, x);
                }
            }
            let integral = integrate(|f| g.eval(f) * self.line_response(x - f), &breaks, self.quadrature)?;
            sum += weight * integral;
        }
        Ok(self.pi_step.ionized_fraction() * iso.abundance * sum)
    }

    pub fn rate_for(&self, iso: &IsotopeRecord, laser_detuning: f64) -> Result<f64, LoadingError> {
        Ok(self.background_rate + self.calibration_constant * self.model_output(iso, laser_detuning)?)
    }

    /// Loading rate (ions/s) of a selected isotope.
    pub fn analytic_rate(&self, laser_detuning: f64, mass_number: u32) -> Result<f64, LoadingError> {
        self.rate_for(self.selected(mass_number)?, laser_detuning)
    }

    /// Sets the calibration constant so that the natural-abundance isotope of
    /// the anchor loads at `anchor.rate` (background included).
    pub fn calibrate(&mut self, anchor: &CalibrationAnchor) -> Result<(), LoadingError> {
        if anchor.rate < self.background_rate {
            return Err(LoadingError::AnchorBelowBackground {
                anchor: anchor.rate,
                background: self.background_rate,
            });
        }
        if !(anchor.power > 0.0) {
            return Err(LoadingError::Power(anchor.power));
        }
        let iso = isotope(anchor.mass_number)?;
        let output = self.with_power(anchor.power).model_output(&iso, anchor.detuning)?;
        if !(output > 0.0) {
            return Err(LoadingError::NoSignalAtAnchor);
        }
        self.calibration_constant = (anchor.rate - self.background_rate) / output;
        Ok(())
    }

    pub fn spectrum(&self, detunings: &[f64]) -> Result<Spectrum, LoadingError> {
        if detunings.len() < 3 {
            return Err(LoadingError::GridTooShort(detunings.len()));
        }
        if detunings.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(LoadingError::GridNotSorted);
        }
        let traces = self
            .isotopes
            .iter()
            .map(|iso| {
                let rates = detunings
                    .par_iter()
                    .map(|&d| self.rate_for(iso, d))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Trace {
                    mass_number: iso.mass_number,
                    rates,
                })
            })
            .collect::<Result<Vec<_>, LoadingError>>()?;
        let duplicated = self.background_rate * (traces.len() as f64 - 1.0).max(0.0);
        let total = (0..detunings.len())
            .map(|i| traces.iter().map(|t| t.rates[i]).sum::<f64>() - duplicated)
            .collect();
        Ok(Spectrum {
            detunings: detunings.to_vec(),
            traces,
            total,
        })
    }

    /// Rate at the isotope's principal line for each laser power.
    pub fn rate_vs_power(&self, powers: &[f64], mass_number: u32) -> Result<Vec<(f64, f64)>, LoadingError> {
        if let Some(&p) = powers.iter().find(|&&p| !(p > 0.0 && p.is_finite())) {
            return Err(LoadingError::Power(p));
        }
        let iso = self.selected(mass_number)?;
        let line = iso.principal_line();
        powers
            .par_iter()
            .map(|&p| Ok((p, self.with_power(p).rate_for(iso, line)?)))
            .collect()
    }
}

/// Power at which the power-broadened width Γ√(1+s) reaches `doppler_fwhm`.
pub fn saturation_power(doppler_fwhm: f64, excitation: &ExcitationConfig) -> f64 {
    let ratio = doppler_fwhm / excitation.transition.linewidth_gamma;
    let s = (ratio * ratio - 1.0).max(0.0);
    let per_watt = peak_intensity(&excitation.with_power(1.0));
    s * excitation.transition.saturation_intensity / per_watt
}

/// Power-law and saturation analysis of a power scan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SaturationEstimate {
    /// Doppler FWHM of the isotope (Hz).
    pub doppler_fwhm: f64,
    pub p_sat: f64,
    /// Rate at p_sat from r_sat·√(P/p_sat) fitted with p_sat held fixed.
    pub r_sat: f64,
    pub r_sat_error: f64,
    /// Exponent b of a·P^b.
    pub exponent: f64,
    pub exponent_error: f64,
    pub prefactor: f64,
}

pub fn saturation_estimate(
    scenario: &LoadingScenario,
    mass_number: u32,
    powers: &[f64],
) -> Result<SaturationEstimate, LoadingError> {
    let iso = scenario.selected(mass_number)?;
    let doppler_fwhm = scenario.doppler_width(iso);
    let p_sat = saturation_power(doppler_fwhm, &scenario.excitation);
    let scan = scenario.rate_vs_power(powers, mass_number)?;
    let (x, y): (Vec<f64>, Vec<f64>) = scan.into_iter().unzip();
    let data = DataSeries::unweighted(x.clone(), y.clone())?;

    let (lx, ly) = (x[0].ln(), y[0].ln());
    let (hx, hy) = (x[x.len() - 1].ln(), y[y.len() - 1].ln());
    let b0 = if hx > lx { (hy - ly) / (hx - lx) } else { 0.5 };
    let a0 = (ly - b0 * lx).exp();
    let law = fit(&PowerLaw, &data, &[a0, b0], &FitOptions::default())?;

    let r0 = y[y.len() - 1] * (p_sat / x[x.len() - 1]).sqrt();
    let opts = FitOptions::default().with_fixed(vec![false, true]);
    let sat = fit(&SqrtSaturation, &data, &[r0, p_sat], &opts)?;

    Ok(SaturationEstimate {
        doppler_fwhm,
        p_sat,
        r_sat: sat.value("r_sat").unwrap_or(f64::NAN),
        r_sat_error: sat.error("r_sat").unwrap_or(f64::NAN),
        exponent: law.value("b").unwrap_or(f64::NAN),
        exponent_error: law.error("b").unwrap_or(f64::NAN),
        prefactor: law.value("a").unwrap_or(f64::NAN),
    })
}
