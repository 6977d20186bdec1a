//! Scenario files: TOML with unit-suffixed keys, converted to SI on load.

use std::collections::{BTreeMap, HashSet};
use std::f64::consts::PI;
use std::fmt;

use batrap_core::beam::{BeamConfig, Divergence};
use batrap_core::constants::{isotope, IonizationStep, IsotopeRecord, TransitionData, ELEMENTARY_CHARGE, ZERO_CELSIUS};
use batrap_core::excitation::{ExcitationConfig, PiStepConfig};
use batrap_core::loading::{CalibrationAnchor, HyperfineWeighting, IntensityAveraging, TrialEngine};
use batrap_core::trap::{TrapConfig, MAX_IONS};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const DEFAULT_CONFIG: &str = include_str!("../config/default.toml");

/// Smallest Monte Carlo size accepted for `run.samples`.
pub const MIN_SAMPLES: usize = batrap_core::beam::MIN_SAMPLES;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DivergenceProfile {
    Gaussian,
    Cone,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamSection {
    pub temperature_c: f64,
    pub divergence_profile: DivergenceProfile,
    pub divergence_rad: f64,
    pub probe_angle_deg: f64,
    pub flux_scale: f64,
    pub species_mass_number: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaserSection {
    pub power_mw: f64,
    pub waist_um: f64,
    pub detuning_mhz: f64,
    pub wavelength_nm: f64,
    pub linewidth_khz: f64,
    pub saturation_intensity_mw_per_cm2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UvSection {
    pub pulse_energy_uj: f64,
    pub pulse_width_ns: f64,
    pub rep_rate_hz: f64,
    pub waist_um: f64,
    pub wavelength_nm: f64,
    pub threshold_wavelength_nm: f64,
    pub cross_section_cm2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrapSection {
    pub rod_radius_mm: f64,
    pub rod_square_side_mm: f64,
    pub rf_frequency_mhz: f64,
    pub rf_voltage_rms_v: f64,
    pub endcap_voltage_v: f64,
    pub endcap_separation_mm: f64,
    pub kappa_radial: f64,
    pub kappa_axial: f64,
    pub ion_mass_number: u32,
    pub ion_charge_e: u32,
    pub target_radial_khz: f64,
    pub target_axial_khz: f64,
    pub chain_ions: usize,
    pub chain_central_spacing_um: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadingSection {
    pub isotopes: Vec<u32>,
    pub background_rate_per_s: f64,
    pub calibration_rate_per_s: f64,
    pub calibration_power_mw: f64,
    pub calibration_mass_number: u32,
    pub hyperfine_weighting: HyperfineWeighting,
    pub intensity_averaging: IntensityAveraging,
    pub profile_bin_mhz: f64,
    pub trial_duration_s: f64,
    pub trials: usize,
    pub trial_engine: TrialEngine,
    /// Mass number → abundance.
    #[serde(default)]
    pub abundance_override: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub seed: u64,
    pub samples: usize,
    pub even_power_mw: f64,
    /// [start, stop, step]
    pub even_scan_mhz: [f64; 3],
    pub odd_power_mw: f64,
    pub odd_scan_mhz: [f64; 3],
    pub power_scan_mw: [f64; 3],
    pub fm_width_mhz: f64,
    pub fm_scan_mhz: [f64; 3],
    pub fm_isotopes: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub beam: BeamSection,
    pub laser_791: LaserSection,
    pub uv_pulse: UvSection,
    pub trap: TrapSection,
    pub loading: LoadingSection,
    pub run: RunSection,
}

/// A parsed key with its SI value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub unit: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub key: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.key, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub entries: Vec<Entry>,
    pub violations: Vec<Violation>,
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            if e.unit.is_empty() {
                writeln!(f, "{} = {}", e.key, e.value)?;
            } else {
                writeln!(f, "{} = {} {}", e.key, e.value, e.unit)?;
            }
        }
        writeln!(f, "{} violation(s)", self.violations.len())?;
        for v in &self.violations {
            writeln!(f, "violation: {v}")?;
        }
        Ok(())
    }
}

/// Evenly spaced grid `start, start + step, …` up to `stop` (inclusive
/// within half a step), scaled by `unit`.
pub fn grid(spec: [f64; 3], unit: f64) -> Vec<f64> {
    let [start, stop, step] = spec;
    let n = ((stop - start) / step + 0.5).floor() as usize + 1;
    (0..n).map(|i| (start + i as f64 * step) * unit).collect()
}

struct Checker {
    entries: Vec<Entry>,
    violations: Vec<Violation>,
}

impl Checker {
    fn num(&mut self, key: &str, value: f64, unit: &'static str, ok: bool, rule: &str) -> f64 {
        self.entries.push(Entry {
            key: key.to_string(),
            value: format!("{value:e}"),
            unit,
        });
        if !ok || !value.is_finite() {
            self.flag(key, format!("{rule} (got {value:e} {unit})"));
        }
        value
    }

    fn text(&mut self, key: &str, value: String) {
        self.entries.push(Entry {
            key: key.to_string(),
            value,
            unit: "",
        });
    }

    fn flag(&mut self, key: &str, message: String) {
        self.violations.push(Violation {
            key: key.to_string(),
            message,
        });
    }

    fn mass_number(&mut self, key: &str, n: u32) -> Option<IsotopeRecord> {
        self.text(key, n.to_string());
        match isotope(n) {
            Ok(iso) => Some(iso),
            Err(_) => {
                self.flag(key, format!("no registry isotope with mass number {n}"));
                None
            }
        }
    }

    fn scan(&mut self, key: &str, spec: [f64; 3], unit_scale: f64, unit: &'static str) {
        let [start, stop, step] = spec.map(|v| v * unit_scale);
        self.text(key, format!("[{start:e}, {stop:e}, {step:e}] {unit}"));
        if !(spec.iter().all(|v| v.is_finite()) && step > 0.0 && stop > start) {
            self.flag(key, "needs start < stop and step > 0".to_string());
        } else if grid(spec, 1.0).len() < 3 {
            self.flag(key, "grid needs at least 3 points".to_string());
        }
    }
}

/// Everything a scenario run needs, in SI units.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub beam: BeamConfig,
    pub excitation: ExcitationConfig,
    pub pi_step: PiStepConfig,
    pub trap: TrapConfig,
    pub target_radial: f64,
    pub target_axial: f64,
    pub chain_ions: usize,
    pub chain_spacing: f64,
    pub isotopes: Vec<IsotopeRecord>,
    pub background_rate: f64,
    pub anchor: CalibrationAnchor,
    pub hyperfine_weighting: HyperfineWeighting,
    pub intensity_averaging: IntensityAveraging,
    pub profile_bin: f64,
    pub trial_duration: f64,
    pub trials: usize,
    pub trial_engine: TrialEngine,
    pub seed: u64,
    pub samples: usize,
    pub even_power: f64,
    pub even_scan: Vec<f64>,
    pub odd_power: f64,
    pub odd_scan: Vec<f64>,
    pub power_scan: Vec<f64>,
    pub fm_width: f64,
    pub fm_scan: Vec<f64>,
    pub fm_isotopes: Vec<IsotopeRecord>,
}

const MHZ: f64 = 1e6;

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn default_file() -> Self {
        Self::parse(DEFAULT_CONFIG).expect("shipped default config parses")
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&canonical).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn report(&self) -> Report {
        let mut c = Checker {
            entries: Vec::new(),
            violations: Vec::new(),
        };
        self.check(&mut c);
        Report {
            entries: c.entries,
            violations: c.violations,
        }
    }

    fn check(&self, c: &mut Checker) -> Option<Resolved> {
        let b = &self.beam;
        let temperature = b.temperature_c + ZERO_CELSIUS;
        c.num("beam.temperature", temperature, "K", temperature > 0.0, "must be above absolute zero");
        c.text("beam.divergence_profile", format!("{:?}", b.divergence_profile).to_lowercase());
        let div = c.num(
            "beam.divergence",
            b.divergence_rad,
            "rad",
            b.divergence_rad >= 0.0 && b.divergence_rad < PI / 2.0,
            "must lie in [0, π/2)",
        );
        let probe = c.num("beam.probe_angle", b.probe_angle_deg.to_radians(), "rad", true, "must be finite");
        let flux = c.num("beam.flux_scale", b.flux_scale, "", b.flux_scale > 0.0, "must be positive");
        let species = c.mass_number("beam.species_mass_number", b.species_mass_number);

        let l = &self.laser_791;
        let power = c.num("laser_791.power", l.power_mw / 1e3, "W", l.power_mw >= 0.0, "must be non-negative");
        let waist = c.num("laser_791.waist", l.waist_um / 1e6, "m", l.waist_um > 0.0, "must be positive");
        let detuning = c.num("laser_791.detuning", l.detuning_mhz * MHZ, "Hz", true, "must be finite");
        let wavelength = c.num("laser_791.wavelength", l.wavelength_nm / 1e9, "m", l.wavelength_nm > 0.0, "must be positive");
        let gamma = c.num("laser_791.linewidth", l.linewidth_khz * 1e3, "Hz", l.linewidth_khz > 0.0, "must be positive");
        // 1 mW/cm² = 10 W/m²
        let isat = c.num(
            "laser_791.saturation_intensity",
            l.saturation_intensity_mw_per_cm2 * 10.0,
            "W/m^2",
            l.saturation_intensity_mw_per_cm2 > 0.0,
            "must be positive",
        );

        let u = &self.uv_pulse;
        let energy = c.num("uv_pulse.pulse_energy", u.pulse_energy_uj / 1e6, "J", u.pulse_energy_uj > 0.0, "must be positive");
        let width = c.num("uv_pulse.pulse_width", u.pulse_width_ns / 1e9, "s", u.pulse_width_ns > 0.0, "must be positive");
        let rep = c.num("uv_pulse.rep_rate", u.rep_rate_hz, "Hz", u.rep_rate_hz > 0.0, "must be positive");
        let uv_waist = c.num("uv_pulse.waist", u.waist_um / 1e6, "m", u.waist_um > 0.0, "must be positive");
        let uv_threshold = c.num(
            "uv_pulse.threshold_wavelength",
            u.threshold_wavelength_nm / 1e9,
            "m",
            u.threshold_wavelength_nm > 0.0,
            "must be positive",
        );
        let uv_wavelength = c.num(
            "uv_pulse.wavelength",
            u.wavelength_nm / 1e9,
            "m",
            u.wavelength_nm > 0.0 && u.wavelength_nm <= u.threshold_wavelength_nm,
            "must be positive and no longer than the ionization threshold wavelength",
        );
        let sigma = c.num("uv_pulse.cross_section", u.cross_section_cm2 / 1e4, "m^2", u.cross_section_cm2 > 0.0, "must be positive");

        let t = &self.trap;
        let rod = c.num("trap.rod_radius", t.rod_radius_mm / 1e3, "m", t.rod_radius_mm > 0.0, "must be positive");
        let side = c.num("trap.rod_square_side", t.rod_square_side_mm / 1e3, "m", t.rod_square_side_mm > 0.0, "must be positive");
        if side * std::f64::consts::SQRT_2 / 2.0 - rod <= 0.0 {
            c.flag("trap.rod_radius", "rods reach the trap axis (r0 ≤ 0)".to_string());
        }
        let rf = c.num("trap.rf_frequency", t.rf_frequency_mhz * MHZ, "Hz", t.rf_frequency_mhz > 0.0, "must be positive");
        let v_rf = c.num("trap.rf_voltage_rms", t.rf_voltage_rms_v, "V", t.rf_voltage_rms_v >= 0.0, "must be non-negative");
        let u_end = c.num("trap.endcap_voltage", t.endcap_voltage_v, "V", t.endcap_voltage_v >= 0.0, "must be non-negative");
        let sep = c.num(
            "trap.endcap_separation",
            t.endcap_separation_mm / 1e3,
            "m",
            t.endcap_separation_mm > 0.0,
            "must be positive",
        );
        let kr = c.num("trap.kappa_radial", t.kappa_radial, "", t.kappa_radial > 0.0, "must be positive");
        let ka = c.num("trap.kappa_axial", t.kappa_axial, "", t.kappa_axial > 0.0, "must be positive");
        let ion = c.mass_number("trap.ion_mass_number", t.ion_mass_number);
        let charge = c.num(
            "trap.ion_charge",
            t.ion_charge_e as f64 * ELEMENTARY_CHARGE,
            "C",
            t.ion_charge_e >= 1,
            "must be at least one elementary charge",
        );
        let target_r = c.num("trap.target_radial", t.target_radial_khz * 1e3, "Hz", t.target_radial_khz > 0.0, "must be positive");
        let target_a = c.num("trap.target_axial", t.target_axial_khz * 1e3, "Hz", t.target_axial_khz > 0.0, "must be positive");
        c.text("trap.chain_ions", t.chain_ions.to_string());
        if !(2..=MAX_IONS).contains(&t.chain_ions) {
            c.flag("trap.chain_ions", format!("must be between 2 and {MAX_IONS}"));
        }
        let spacing = c.num(
            "trap.chain_central_spacing",
            t.chain_central_spacing_um / 1e6,
            "m",
            t.chain_central_spacing_um > 0.0,
            "must be positive",
        );

        let ld = &self.loading;
        let mut overrides = BTreeMap::new();
        for (k, &v) in &ld.abundance_override {
            let key = format!("loading.abundance_override.{k}");
            c.num(&key, v, "", (0.0..=1.0).contains(&v), "must lie in [0, 1]");
            match k.parse::<u32>().ok().filter(|n| isotope(*n).is_ok()) {
                Some(n) => {
                    overrides.insert(n, v);
                }
                None => c.flag(&key, format!("no registry isotope with mass number {k}")),
            }
        }
        c.text(
            "loading.isotopes",
            format!("{:?}", ld.isotopes),
        );
        let mut isotopes = Vec::new();
        let mut seen = HashSet::new();
        for &n in &ld.isotopes {
            if !seen.insert(n) {
                c.flag("loading.isotopes", format!("{n} listed twice"));
            }
            match isotope(n) {
                Ok(iso) => {
                    let a = overrides.get(&n).copied().unwrap_or(iso.abundance);
                    isotopes.push(iso.with_abundance(a));
                }
                Err(_) => c.flag("loading.isotopes", format!("no registry isotope with mass number {n}")),
            }
        }
        if ld.isotopes.is_empty() {
            c.flag("loading.isotopes", "at least one isotope is required".to_string());
        }
        let bg = c.num(
            "loading.background_rate",
            ld.background_rate_per_s,
            "1/s",
            ld.background_rate_per_s >= 0.0,
            "must be non-negative",
        );
        let cal_rate = c.num(
            "loading.calibration_rate",
            ld.calibration_rate_per_s,
            "1/s",
            ld.calibration_rate_per_s >= ld.background_rate_per_s,
            "must not be below the background rate",
        );
        let cal_power = c.num(
            "loading.calibration_power",
            ld.calibration_power_mw / 1e3,
            "W",
            ld.calibration_power_mw > 0.0,
            "must be positive",
        );
        let cal_iso = c.mass_number("loading.calibration_mass_number", ld.calibration_mass_number);
        c.text("loading.hyperfine_weighting", format!("{:?}", ld.hyperfine_weighting));
        c.text("loading.intensity_averaging", format!("{:?}", ld.intensity_averaging));
        let bin = c.num("loading.profile_bin", ld.profile_bin_mhz * MHZ, "Hz", ld.profile_bin_mhz > 0.0, "must be positive");
        let duration = c.num("loading.trial_duration", ld.trial_duration_s, "s", ld.trial_duration_s > 0.0, "must be positive");
        c.text("loading.trials", ld.trials.to_string());
        if ld.trials == 0 {
            c.flag("loading.trials", "at least one trial is required".to_string());
        }
        c.text("loading.trial_engine", format!("{:?}", ld.trial_engine));

        let r = &self.run;
        c.text("run.seed", r.seed.to_string());
        c.text("run.samples", r.samples.to_string());
        if r.samples < MIN_SAMPLES {
            c.flag("run.samples", format!("must be at least {MIN_SAMPLES}"));
        }
        let even_power = c.num("run.even_power", r.even_power_mw / 1e3, "W", r.even_power_mw > 0.0, "must be positive");
        c.scan("run.even_scan", r.even_scan_mhz, MHZ, "Hz");
        let odd_power = c.num("run.odd_power", r.odd_power_mw / 1e3, "W", r.odd_power_mw > 0.0, "must be positive");
        c.scan("run.odd_scan", r.odd_scan_mhz, MHZ, "Hz");
        c.scan("run.power_scan", r.power_scan_mw, 1e-3, "W");
        if r.power_scan_mw[0] <= 0.0 {
            c.flag("run.power_scan", "powers must be positive".to_string());
        }
        let fm_width = c.num("run.fm_width", r.fm_width_mhz * MHZ, "Hz", r.fm_width_mhz > 0.0, "must be positive");
        c.scan("run.fm_scan", r.fm_scan_mhz, MHZ, "Hz");
        c.text("run.fm_isotopes", format!("{:?}", r.fm_isotopes));
        let mut fm_isotopes = Vec::new();
        for &n in &r.fm_isotopes {
            match isotope(n) {
                Ok(iso) => fm_isotopes.push(iso),
                Err(_) => c.flag("run.fm_isotopes", format!("no registry isotope with mass number {n}")),
            }
        }

        if !c.violations.is_empty() {
            return None;
        }
        let (species, ion, cal_iso) = (species?, ion?, cal_iso?);
        let divergence = match b.divergence_profile {
            DivergenceProfile::Gaussian => Divergence::Gaussian { fwhm: div },
            DivergenceProfile::Cone => Divergence::Cone { half_angle: div },
        };
        let beam = BeamConfig {
            oven_temperature: temperature,
            divergence,
            species_mass: species.atomic_mass,
            flux_scale: flux,
            probe_angle: probe,
        };
        let transition = TransitionData {
            wavelength,
            linewidth_gamma: gamma,
            saturation_intensity: isat,
        };
        let excitation = ExcitationConfig {
            power,
            waist,
            detuning,
            transition,
        };
        let pulse = IonizationStep {
            pulse_energy: energy,
            pulse_width: width,
            rep_rate: rep,
            waist: uv_waist,
            wavelength: uv_wavelength,
            threshold_wavelength: uv_threshold,
        };
        let trap = TrapConfig {
            rod_radius: rod,
            rod_square_side: side,
            rf_frequency: rf,
            rf_voltage_rms: v_rf,
            endcap_voltage: u_end,
            endcap_separation: sep,
            kappa_radial: kr,
            kappa_axial: ka,
            ion_mass: ion.atomic_mass,
            ion_charge: charge,
        };
        Some(Resolved {
            beam,
            excitation,
            pi_step: PiStepConfig {
                ionization_cross_section: sigma,
                pulse,
            },
            trap,
            target_radial: target_r,
            target_axial: target_a,
            chain_ions: t.chain_ions,
            chain_spacing: spacing,
            isotopes,
            background_rate: bg,
            anchor: CalibrationAnchor {
                rate: cal_rate,
                power: cal_power,
                detuning: cal_iso.principal_line(),
                mass_number: cal_iso.mass_number,
            },
            hyperfine_weighting: ld.hyperfine_weighting,
            intensity_averaging: ld.intensity_averaging,
            profile_bin: bin,
            trial_duration: duration,
            trials: ld.trials,
            trial_engine: ld.trial_engine,
            seed: r.seed,
            samples: r.samples,
            even_power,
            even_scan: grid(r.even_scan_mhz, MHZ),
            odd_power,
            odd_scan: grid(r.odd_scan_mhz, MHZ),
            power_scan: grid(r.power_scan_mw, 1e-3),
            fm_width,
            fm_scan: grid(r.fm_scan_mhz, MHZ),
            fm_isotopes,
        })
    }

    /// Converts to SI, failing on the first invariant violation.
    pub fn resolve(&self) -> Result<Resolved, CliError> {
        let mut c = Checker {
            entries: Vec::new(),
            violations: Vec::new(),
        };
        match self.check(&mut c) {
            Some(r) => Ok(r),
            None => {
                let v = &c.violations[0];
                Err(CliError::Config(format!("invalid value for {v}")))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_clean() {
        let cfg = ScenarioFile::default_file();
        let report = cfg.report();
        assert!(report.violations.is_empty(), "{:?}", report.violations);
        let r = cfg.resolve().unwrap();
        assert_eq!(r.excitation.waist, 1e-4);
        assert_eq!(r.even_scan.len(), 121);
        assert_eq!(r.power_scan.len(), 20);
    }

    #[test]
    fn grid_is_inclusive() {
        assert_eq!(grid([0.0, 1.0, 0.5], 1.0), vec![0.0, 0.5, 1.0]);
        assert_eq!(grid([0.05, 1.0, 0.05], 1.0).len(), 20);
    }

    #[test]
    fn unknown_key_is_rejected() {
        let text = DEFAULT_CONFIG.replace("flux_scale = 1.0", "flux_scale = 1.0\ncolour = 3");
        let err = ScenarioFile::parse(&text).unwrap_err().to_string();
        assert!(err.contains("colour"), "{err}");
        assert!(err.contains("line"), "{err}");
    }

    #[test]
    fn digest_ignores_formatting() {
        let a = ScenarioFile::parse(DEFAULT_CONFIG).unwrap();
        let b = ScenarioFile::parse(&DEFAULT_CONFIG.replace("# Operating", "\n\n# The operating")).unwrap();
        assert_eq!(a.digest(), b.digest());
        assert_eq!(a.digest().len(), 64);
    }
}
