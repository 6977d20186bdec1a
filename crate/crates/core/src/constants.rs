//! Physical constants, barium isotope data and the transition parameters of
//! the two-step photoionization scheme.
//!
//! Fundamental constants are CODATA 2018 (exact SI values where defined).
//! Isotopic masses are AME2020 atomic masses; abundances are the IUPAC
//! representative isotopic composition. The trace isotopes ¹³⁰Ba and ¹³²Ba
//! are omitted.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Planck constant (J·s)
pub const PLANCK: f64 = 6.626_070_15e-34;

/// Speed of light in vacuum (m/s)
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Boltzmann constant (J/K)
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Elementary charge (C)
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;

/// Atomic mass unit (kg)
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;

/// Coulomb constant 1/(4πε₀) (N·m²/C²)
pub const COULOMB_CONSTANT: f64 = 8.987_551_792_3e9;

/// Offset between the Celsius and Kelvin scales (K)
pub const ZERO_CELSIUS: f64 = 273.15;

/// Photon energy at a vacuum wavelength (J).
pub fn photon_energy(wavelength: f64) -> f64 {
    PLANCK * SPEED_OF_LIGHT / wavelength
}

/// One hyperfine component of the ¹S₀ → ³P₁ line of an odd isotope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperfineComponent {
    /// Twice the total angular momentum F of the excited level (1, 3 or 5).
    pub two_f: u8,
    /// Line offset relative to the ¹³⁸Ba line (Hz).
    pub offset: f64,
}

impl HyperfineComponent {
    /// Statistical weight 2F + 1.
    pub fn degeneracy(&self) -> f64 {
        f64::from(self.two_f) + 1.0
    }

    pub fn label(&self) -> String {
        format!("F={}/2", self.two_f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsotopeRecord {
    pub mass_number: u32,
    /// Atomic mass (kg).
    pub atomic_mass: f64,
    /// Natural abundance, fraction in [0, 1].
    pub abundance: f64,
    /// Isotope shift of the 791 nm line relative to ¹³⁸Ba (Hz). For odd
    /// isotopes this is the centroid-free reference and the resolved
    /// components live in `hyperfine_components`.
    pub shift_791: f64,
    /// Resolved hyperfine components; empty for even isotopes.
    pub hyperfine_components: Vec<HyperfineComponent>,
}

impl IsotopeRecord {
    pub fn is_odd(&self) -> bool {
        self.mass_number % 2 == 1
    }

    /// Line positions (Hz, relative to ¹³⁸Ba) of every resolved component.
    /// Even isotopes have a single line at `shift_791`.
    pub fn line_offsets(&self) -> Vec<f64> {
        if self.hyperfine_components.is_empty() {
            vec![self.shift_791]
        } else {
            self.hyperfine_components.iter().map(|c| c.offset).collect()
        }
    }

    /// The strongest (F = 5/2) component for odd isotopes, or the single
    /// line for even isotopes.
    pub fn principal_line(&self) -> f64 {
        self.hyperfine_components
            .iter()
            .max_by_key(|c| c.two_f)
            .map_or(self.shift_791, |c| c.offset)
    }

    pub fn with_abundance(mut self, abundance: f64) -> Self {
        self.abundance = abundance;
        self
    }

    pub fn validate(&self) -> Result<(), ConstantsError> {
        if !(0.0..=1.0).contains(&self.abundance) {
            return Err(ConstantsError::Abundance {
                mass_number: self.mass_number,
                abundance: self.abundance,
            });
        }
        let expected = if self.is_odd() { 3 } else { 0 };
        if self.hyperfine_components.len() != expected {
            return Err(ConstantsError::HyperfineCount {
                mass_number: self.mass_number,
                found: self.hyperfine_components.len(),
                expected,
            });
        }
        if self.mass_number == 138 && self.shift_791 != 0.0 {
            return Err(ConstantsError::ReferenceShift(self.shift_791));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionData {
    /// Vacuum wavelength (m).
    pub wavelength: f64,
    /// Natural linewidth Γ/2π (Hz).
    pub linewidth_gamma: f64,
    /// Saturation intensity (W/m²).
    pub saturation_intensity: f64,
}

impl TransitionData {
    pub fn new(
        wavelength: f64,
        linewidth_gamma: f64,
        saturation_intensity: f64,
    ) -> Result<Self, ConstantsError> {
        for (name, value) in [
            ("wavelength", wavelength),
            ("linewidth_gamma", linewidth_gamma),
            ("saturation_intensity", saturation_intensity),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(ConstantsError::NonPositive { field: name, value });
            }
        }
        Ok(Self {
            wavelength,
            linewidth_gamma,
            saturation_intensity,
        })
    }

    /// The 6s² ¹S₀ → 6s6p ³P₁ intercombination line: Γ/2π = 50 kHz,
    /// I_sat = 0.014 mW/cm².
    pub fn intercombination_791() -> Self {
        Self {
            wavelength: 791.35e-9,
            linewidth_gamma: 50e3,
            saturation_intensity: 0.014e-3 / 1e-4,
        }
    }
}

/// The UV pulse that takes ³P₁ atoms to the continuum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IonizationStep {
    /// Energy per pulse (J).
    pub pulse_energy: f64,
    /// Pulse duration (s).
    pub pulse_width: f64,
    /// Repetition rate (Hz).
    pub rep_rate: f64,
    /// Beam waist at the trap (m).
    pub waist: f64,
    /// Wavelength (m).
    pub wavelength: f64,
    /// Longest wavelength that still ionizes from ³P₁ (m).
    pub threshold_wavelength: f64,
}

impl IonizationStep {
    pub fn new(
        pulse_energy: f64,
        pulse_width: f64,
        rep_rate: f64,
        waist: f64,
        wavelength: f64,
        threshold_wavelength: f64,
    ) -> Result<Self, ConstantsError> {
        for (name, value) in [
            ("pulse_energy", pulse_energy),
            ("pulse_width", pulse_width),
            ("rep_rate", rep_rate),
            ("waist", waist),
            ("wavelength", wavelength),
            ("threshold_wavelength", threshold_wavelength),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(ConstantsError::NonPositive { field: name, value });
            }
        }
        if wavelength > threshold_wavelength {
            return Err(ConstantsError::BelowThreshold {
                wavelength,
                threshold_wavelength,
            });
        }
        Ok(Self {
            pulse_energy,
            pulse_width,
            rep_rate,
            waist,
            wavelength,
            threshold_wavelength,
        })
    }

    /// Nitrogen laser: 170 µJ, 3.5 ns, 20 Hz, 900 µm waist at 337.1 nm.
    pub fn nitrogen_laser() -> Self {
        Self {
            pulse_energy: 170e-6,
            pulse_width: 3.5e-9,
            rep_rate: 20.0,
            waist: 900e-6,
            wavelength: 337.1e-9,
            threshold_wavelength: 340.1e-9,
        }
    }
}

/// Photoelectron energy above the ionization limit, hc/λ − hc/λ_threshold (J).
pub fn excess_ionization_energy(step: &IonizationStep) -> f64 {
    photon_energy(step.wavelength) - photon_energy(step.threshold_wavelength)
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConstantsError {
    #[error("{field} must be positive and finite, got {value}")]
    NonPositive { field: &'static str, value: f64 },
    #[error("wavelength {wavelength} m is above the ionization threshold {threshold_wavelength} m")]
    BelowThreshold {
        wavelength: f64,
        threshold_wavelength: f64,
    },
    #[error("abundance of {mass_number}Ba out of range: {abundance}")]
    Abundance { mass_number: u32, abundance: f64 },
    #[error("{mass_number}Ba has {found} hyperfine components, expected {expected}")]
    HyperfineCount {
        mass_number: u32,
        found: usize,
        expected: usize,
    },
    #[error("138Ba is the frequency reference; its shift must be 0, got {0}")]
    ReferenceShift(f64),
    #[error("no isotope with mass number {0} in the registry")]
    UnknownIsotope(u32),
}

const MHZ: f64 = 1e6;
const GHZ: f64 = 1e9;

fn odd_components(f52: f64, f32: f64, f12: f64) -> Vec<HyperfineComponent> {
    vec![
        HyperfineComponent {
            two_f: 5,
            offset: f52,
        },
        HyperfineComponent {
            two_f: 3,
            offset: f32,
        },
        HyperfineComponent {
            two_f: 1,
            offset: f12,
        },
    ]
}

/// Stable barium isotopes with abundance above 1%, ordered by mass number.
///
/// Even-isotope shifts of the 791 nm line are 122, 109 and 0 MHz for
/// ¹³⁴Ba, ¹³⁶Ba and ¹³⁸Ba. The odd isotopes carry their resolved F = 5/2,
/// 3/2 and 1/2 components; the two F = 5/2 lines are 140 MHz apart, with
/// ¹³⁷Ba on the high-frequency side.
pub fn registry() -> Vec<IsotopeRecord> {
    vec![
        IsotopeRecord {
            mass_number: 134,
            atomic_mass: 133.904_508_2 * ATOMIC_MASS_UNIT,
            abundance: 0.024_17,
            shift_791: 122.0 * MHZ,
            hyperfine_components: Vec::new(),
        },
        IsotopeRecord {
            mass_number: 135,
            atomic_mass: 134.905_688_4 * ATOMIC_MASS_UNIT,
            abundance: 0.065_92,
            shift_791: 0.0,
            hyperfine_components: odd_components(1.730 * GHZ, -0.760 * GHZ, -2.620 * GHZ),
        },
        IsotopeRecord {
            mass_number: 136,
            atomic_mass: 135.904_575_7 * ATOMIC_MASS_UNIT,
            abundance: 0.078_54,
            shift_791: 109.0 * MHZ,
            hyperfine_components: Vec::new(),
        },
        IsotopeRecord {
            mass_number: 137,
            atomic_mass: 136.905_827_1 * ATOMIC_MASS_UNIT,
            abundance: 0.112_32,
            shift_791: 0.0,
            hyperfine_components: odd_components(1.870 * GHZ, -0.840 * GHZ, -2.780 * GHZ),
        },
        IsotopeRecord {
            mass_number: 138,
            atomic_mass: 137.905_247_2 * ATOMIC_MASS_UNIT,
            abundance: 0.716_98,
            shift_791: 0.0,
            hyperfine_components: Vec::new(),
        },
    ]
}

pub fn isotope(mass_number: u32) -> Result<IsotopeRecord, ConstantsError> {
    registry()
        .into_iter()
        .find(|r| r.mass_number == mass_number)
        .ok_or(ConstantsError::UnknownIsotope(mass_number))
}

/// Ba⁺ cooling and repump wavelengths (m); kept for reference only.
pub mod ion_lines {
    pub const COOLING_S12_P12: f64 = 493.4e-9;
    pub const REPUMP_D32_P12: f64 = 649.7e-9;
}

#[cfg(test)]
mod tests {
    use super::*;

    const EV: f64 = ELEMENTARY_CHARGE;

    #[test]
    fn registry_invariants() {
        let reg = registry();
        assert_eq!(
            reg.iter().map(|r| r.mass_number).collect::<Vec<_>>(),
            vec![134, 135, 136, 137, 138]
        );
        let total: f64 = reg.iter().map(|r| r.abundance).sum();
        assert!(total <= 1.0);
        for r in &reg {
            r.validate().unwrap();
        }
        assert_eq!(isotope(138).unwrap().shift_791, 0.0);
    }

    #[test]
    fn registry_is_pure() {
        assert_eq!(registry(), registry());
    }

    #[test]
    fn even_isotope_shifts() {
        assert_eq!(isotope(134).unwrap().shift_791, 122e6);
        assert_eq!(isotope(136).unwrap().shift_791, 109e6);
    }

    #[test]
    fn odd_isotope_components() {
        let b135 = isotope(135).unwrap();
        let b137 = isotope(137).unwrap();
        let split = b137.principal_line() - b135.principal_line();
        assert!((split - 140e6).abs() < 1.0);
        for r in [&b135, &b137] {
            for c in &r.hyperfine_components {
                let nominal = match c.two_f {
                    5 => 1.8e9,
                    3 => -0.8e9,
                    1 => -2.7e9,
                    _ => unreachable!(),
                };
                assert!((c.offset - nominal).abs() < 0.1e9, "{} {}", r.mass_number, c.label());
            }
        }
    }

    #[test]
    fn abundance_ratios() {
        let a = |m| isotope(m).unwrap().abundance;
        // 2% : 8% : 72%
        assert!((a(134) * 100.0 - 2.0).abs() < 0.5);
        assert!((a(136) * 100.0 - 8.0).abs() < 0.5);
        assert!((a(138) * 100.0 - 72.0).abs() < 0.5);
        assert!((a(137) / a(135) - 1.7).abs() < 0.02);
    }

    #[test]
    fn excess_energy_nitrogen_laser() {
        let e = excess_ionization_energy(&IonizationStep::nitrogen_laser()) / EV;
        // nominally 30 meV; hc/λ arithmetic gives 32.4 meV
        assert!((e - 0.030).abs() / 0.030 < 0.10, "{e}");
        assert!((e - 0.032_44).abs() < 1e-4, "{e}");
    }

    #[test]
    fn excess_energy_at_threshold_is_zero() {
        let mut step = IonizationStep::nitrogen_laser();
        step.wavelength = step.threshold_wavelength;
        assert_eq!(excess_ionization_energy(&step), 0.0);
    }

    #[test]
    fn excess_energy_300nm() {
        let mut step = IonizationStep::nitrogen_laser();
        step.wavelength = 300e-9;
        // hc = 1239.841984 eV·nm: 1239.841984/300 − 1239.841984/340.1
        let expected = 1_239.841_984 / 300.0 - 1_239.841_984 / 340.1;
        let e = excess_ionization_energy(&step) / EV;
        assert!((e - expected).abs() < 1e-8, "{e} vs {expected}");
        assert!((e - 0.487).abs() < 0.01);
    }

    #[test]
    fn ionization_step_rejects_long_wavelength() {
        let err = IonizationStep::new(170e-6, 3.5e-9, 20.0, 900e-6, 345e-9, 340.1e-9).unwrap_err();
        assert!(matches!(err, ConstantsError::BelowThreshold { .. }));
    }

    #[test]
    fn transition_rejects_non_positive() {
        assert!(TransitionData::new(791e-9, 0.0, 0.14).is_err());
        assert!(TransitionData::new(791e-9, 50e3, 0.14).is_ok());
    }

    #[test]
    fn validate_catches_bad_records() {
        let mut r = isotope(136).unwrap();
        r.hyperfine_components = odd_components(1.0, 2.0, 3.0);
        assert!(matches!(r.validate(), Err(ConstantsError::HyperfineCount { .. })));
        let r = isotope(138).unwrap().with_abundance(1.5);
        assert!(matches!(r.validate(), Err(ConstantsError::Abundance { .. })));
    }
}
