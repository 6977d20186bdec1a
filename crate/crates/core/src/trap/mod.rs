//! Linear Paul trap: Mathieu parameters, secular frequencies and the
//! equilibrium of a linear ion chain.

mod chain;

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constants::{isotope, ELEMENTARY_CHARGE};

pub use chain::{chain_equilibrium, implied_axial_frequency, length_scale, ChainSolution, MAX_IONS};

/// Edge of the lowest stability region on the q axis (a = 0).
pub const Q_LIMIT: f64 = 0.908;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrapError {
    #[error("{0} must be positive and finite, got {1}")]
    NonPositive(&'static str, f64),
    #[error("{0} must be non-negative and finite, got {1}")]
    Negative(&'static str, f64),
    #[error("rods overlap the trap axis: effective radius {0} m")]
    Geometry(f64),
    #[error("(a, q) = ({a}, {q}) is outside stability region")]
    Unstable { a: f64, q: f64 },
    #[error("no stable geometry reproduces the targets (required q = {q})")]
    NoStableSolution { q: f64 },
    #[error("cannot calibrate {0} with zero drive voltage")]
    ZeroDrive(&'static str),
    #[error("ion count must be between 1 and {max}, got {n}")]
    IonCount { n: usize, max: usize },
    #[error("chain solver did not converge after {iterations} iterations (max force {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrapConfig {
    pub rod_radius: f64,
    /// Side of the square on whose corners the rod centres sit (m).
    pub rod_square_side: f64,
    pub rf_frequency: f64,
    pub rf_voltage_rms: f64,
    pub endcap_voltage: f64,
    pub endcap_separation: f64,
    pub kappa_radial: f64,
    pub kappa_axial: f64,
    pub ion_mass: f64,
    pub ion_charge: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SecularFrequencies {
    pub radial: f64,
    pub axial: f64,
    pub mathieu_q: f64,
    pub mathieu_a: f64,
}

impl TrapConfig {
    /// 0.8 mm rods on a 1.85 mm square, 6.6 MHz at 50 V rms, 7 V endcaps
    /// 1 cm apart, uncalibrated (κ = 1), singly charged ¹³⁸Ba.
    pub fn reference() -> Self {
        Self {
            rod_radius: 0.4e-3,
            rod_square_side: 1.85e-3,
            rf_frequency: 6.6e6,
            rf_voltage_rms: 50.0,
            endcap_voltage: 7.0,
            endcap_separation: 10e-3,
            kappa_radial: 1.0,
            kappa_axial: 1.0,
            ion_mass: isotope(138).map(|i| i.atomic_mass).unwrap_or(f64::NAN),
            ion_charge: ELEMENTARY_CHARGE,
        }
    }

    pub fn validate(&self) -> Result<(), TrapError> {
        for (name, v) in [
            ("trap.rod_radius", self.rod_radius),
            ("trap.rod_square_side", self.rod_square_side),
            ("trap.rf_frequency", self.rf_frequency),
            ("trap.endcap_separation", self.endcap_separation),
            ("trap.kappa_radial", self.kappa_radial),
            ("trap.kappa_axial", self.kappa_axial),
            ("trap.ion_mass", self.ion_mass),
            ("trap.ion_charge", self.ion_charge),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(TrapError::NonPositive(name, v));
            }
        }
        for (name, v) in [
            ("trap.rf_voltage_rms", self.rf_voltage_rms),
            ("trap.endcap_voltage", self.endcap_voltage),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(TrapError::Negative(name, v));
            }
        }
        let r0 = self.effective_radius();
        if !(r0 > 0.0) {
            return Err(TrapError::Geometry(r0));
        }
        Ok(())
    }

    /// Distance from the axis to the nearest rod surface (m).
    pub fn effective_radius(&self) -> f64 {
        self.rod_square_side * SQRT_2 / 2.0 - self.rod_radius
    }

    fn omega_rf(&self) -> f64 {
        2.0 * PI * self.rf_frequency
    }

    /// ω_z² of the endcap potential (rad²/s²).
    fn axial_omega_squared(&self) -> f64 {
        let z0 = self.endcap_separation / 2.0;
        2.0 * self.kappa_axial * self.ion_charge * self.endcap_voltage / (self.ion_mass * z0 * z0)
    }
}

/// (a, q) of the radial equation of motion.
pub fn mathieu_parameters(cfg: &TrapConfig) -> Result<(f64, f64), TrapError> {
    cfg.validate()?;
    let omega = cfg.omega_rf();
    let r0 = cfg.effective_radius();
    let v_amp = SQRT_2 * cfg.rf_voltage_rms;
    let q = 2.0 * cfg.kappa_radial * cfg.ion_charge * v_amp / (cfg.ion_mass * omega * omega * r0 * r0);
    // the endcap field defocuses radially with half its axial strength
    let a = -2.0 * cfg.axial_omega_squared() / (omega * omega);
    Ok((a, q))
}

/// Whether x'' + (a − 2q·cos 2τ)x = 0 has bounded solutions, from the trace
/// of the one-period monodromy matrix.
pub fn mathieu_stable(a: f64, q: f64) -> bool {
    const STEPS: usize = 4000;
    let h = PI / STEPS as f64;
    let rhs = |t: f64, x: f64, v: f64| (v, -(a - 2.0 * q * (2.0 * t).cos()) * x);
    let propagate = |mut x: f64, mut v: f64| {
        for i in 0..STEPS {
            let t = i as f64 * h;
            let (k1x, k1v) = rhs(t, x, v);
            let (k2x, k2v) = rhs(t + h / 2.0, x + h / 2.0 * k1x, v + h / 2.0 * k1v);
            let (k3x, k3v) = rhs(t + h / 2.0, x + h / 2.0 * k2x, v + h / 2.0 * k2v);
            let (k4x, k4v) = rhs(t + h, x + h * k3x, v + h * k3v);
            x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
            v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        }
        (x, v)
    };
    let (x1, _) = propagate(1.0, 0.0);
    let (_, v2) = propagate(0.0, 1.0);
    (x1 + v2).abs() < 2.0
}

fn check_stable(a: f64, q: f64) -> Result<(), TrapError> {
    if q.abs() >= Q_LIMIT || q * q / 2.0 + a <= 0.0 || !mathieu_stable(a, q) {
        return Err(TrapError::Unstable { a, q });
    }
    Ok(())
}

/// Pseudopotential secular frequencies (Hz).
pub fn secular_frequencies(cfg: &TrapConfig) -> Result<SecularFrequencies, TrapError> {
    let (a, q) = mathieu_parameters(cfg)?;
    let axial = cfg.axial_omega_squared().sqrt() / (2.0 * PI);
    check_stable(a, q)?;
    let radial = cfg.rf_frequency * 0.5 * (q * q / 2.0 + a).sqrt();
    Ok(SecularFrequencies {
        radial,
        axial,
        mathieu_q: q,
        mathieu_a: a,
    })
}

/// Adjusts κ_radial and κ_axial so that the secular frequencies equal the
/// targets.
pub fn calibrate_geometry(cfg: &TrapConfig, target_radial: f64, target_axial: f64) -> Result<TrapConfig, TrapError> {
    cfg.validate()?;
    for (name, v) in [("target radial frequency", target_radial), ("target axial frequency", target_axial)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(TrapError::NonPositive(name, v));
        }
    }
    if cfg.endcap_voltage == 0.0 {
        return Err(TrapError::ZeroDrive("kappa_axial"));
    }
    if cfg.rf_voltage_rms == 0.0 {
        return Err(TrapError::ZeroDrive("kappa_radial"));
    }
    let mut out = *cfg;
    let axial_now = cfg.axial_omega_squared().sqrt() / (2.0 * PI);
    let ratio = target_axial / axial_now;
    if ratio != 1.0 {
        out.kappa_axial = cfg.kappa_axial * ratio * ratio;
    }
    let (a, q_now) = mathieu_parameters(&out)?;
    let beta = 2.0 * target_radial / cfg.rf_frequency;
    let q2 = 2.0 * (beta * beta - a);
    if !(q2 > 0.0) {
        return Err(TrapError::NoStableSolution { q: f64::NAN });
    }
    let q = q2.sqrt();
    if check_stable(a, q).is_err() {
        return Err(TrapError::NoStableSolution { q });
    }
    if q != q_now {
        out.kappa_radial = cfg.kappa_radial * q / q_now;
    }
    Ok(out)
}
