//! Two-level steady-state response of the 791 nm intercombination line and
//! the per-pulse ionization probability of the UV step.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constants::{photon_energy, IonizationStep, TransitionData};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExcitationError {
    #[error("laser power must be non-negative, got {0} W")]
    Power(f64),
    #[error("beam waist must be positive, got {0} m")]
    Waist(f64),
    #[error("ionization cross-section must be positive, got {0} m²")]
    CrossSection(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExcitationConfig {
    /// Laser power (W).
    pub power: f64,
    /// Beam waist (m).
    pub waist: f64,
    /// Laser frequency minus the ¹³⁸Ba line frequency (Hz).
    pub detuning: f64,
    pub transition: TransitionData,
}

impl ExcitationConfig {
    pub fn new(power: f64, waist: f64, transition: TransitionData) -> Result<Self, ExcitationError> {
        let cfg = Self {
            power,
            waist,
            detuning: 0.0,
            transition,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ExcitationError> {
        if !(self.power >= 0.0 && self.power.is_finite()) {
            return Err(ExcitationError::Power(self.power));
        }
        if !(self.waist > 0.0 && self.waist.is_finite()) {
            return Err(ExcitationError::Waist(self.waist));
        }
        Ok(())
    }

    pub fn with_power(mut self, power: f64) -> Self {
        self.power = power;
        self
    }

    pub fn saturation(&self) -> f64 {
        saturation_parameter(peak_intensity(self), &self.transition)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PiStepConfig {
    /// Photoionization cross-section from ³P₁ (m²).
    pub ionization_cross_section: f64,
    pub pulse: IonizationStep,
}

impl PiStepConfig {
    /// 2 × 10⁻¹⁷ cm².
    pub const DEFAULT_CROSS_SECTION: f64 = 2e-21;

    pub fn new(ionization_cross_section: f64, pulse: IonizationStep) -> Result<Self, ExcitationError> {
        if !(ionization_cross_section > 0.0 && ionization_cross_section.is_finite()) {
            return Err(ExcitationError::CrossSection(ionization_cross_section));
        }
        Ok(Self {
            ionization_cross_section,
            pulse,
        })
    }

    /// Fraction of excited atoms ionized by one pulse, 1 − exp(−σΦ).
    pub fn ionized_fraction(&self) -> f64 {
        -(-self.ionization_cross_section * photon_fluence(&self.pulse)).exp_m1()
    }
}

impl Default for PiStepConfig {
    fn default() -> Self {
        Self {
            ionization_cross_section: Self::DEFAULT_CROSS_SECTION,
            pulse: IonizationStep::nitrogen_laser(),
        }
    }
}

/// Peak intensity P/(πw²) (W/m²).
pub fn peak_intensity(cfg: &ExcitationConfig) -> f64 {
    cfg.power / (PI * cfg.waist * cfg.waist)
}

pub fn saturation_parameter(intensity: f64, transition: &TransitionData) -> f64 {
    intensity / transition.saturation_intensity
}

/// Rabi rate Ω/2π = (Γ/2π)·√(I/I_sat) (Hz).
pub fn rabi_rate(intensity: f64, transition: &TransitionData) -> f64 {
    transition.linewidth_gamma * saturation_parameter(intensity, transition).sqrt()
}

/// Power-broadened FWHM Γ√(1+s) of the steady-state line (Hz).
pub fn power_broadened_fwhm(saturation: f64, transition: &TransitionData) -> f64 {
    transition.linewidth_gamma * (1.0 + saturation).sqrt()
}

/// Steady-state excited population ρ_ee = (s/2)/(1 + s + (2δ/Γ)²).
/// `detuning` and Γ/2π are both in Hz, so 2δ/Γ is unit-free.
pub fn excited_fraction(detuning: f64, saturation: f64, transition: &TransitionData) -> f64 {
    let y = 2.0 * detuning / transition.linewidth_gamma;
    0.5 * saturation / (1.0 + saturation + y * y)
}

/// ρ_ee averaged over the transverse profile I(r) = I₀·exp(−2r²/w²) of a
/// Gaussian beam, normalized to the area πw²/2:
/// ½·ln(1 + s₀/(1 + (2δ/Γ)²)). Reduces to `excited_fraction` for s₀ ≪ 1.
pub fn beam_averaged_excitation(detuning: f64, peak_saturation: f64, transition: &TransitionData) -> f64 {
    let y = 2.0 * detuning / transition.linewidth_gamma;
    0.5 * (peak_saturation / (1.0 + y * y)).ln_1p()
}

/// Peak photon fluence of one pulse, E/(πw²·hν) (photons/m²).
pub fn photon_fluence(pulse: &IonizationStep) -> f64 {
    pulse.pulse_energy / (PI * pulse.waist * pulse.waist * photon_energy(pulse.wavelength))
}

/// Probability that an atom with excited population `rho_ee` is ionized by
/// one UV pulse: ρ_ee·(1 − exp(−σΦ)).
pub fn pi_probability_per_pulse(rho_ee: f64, cfg: &PiStepConfig) -> f64 {
    rho_ee * cfg.ionized_fraction()
}
