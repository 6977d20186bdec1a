//! Constant-rate loading sources and their relative efficiencies.

use serde::{Deserialize, Serialize};

use super::LoadingError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceRate {
    /// ions/s
    pub rate: f64,
    pub uncertainty: f64,
}

impl SourceRate {
    pub const fn new(rate: f64, uncertainty: f64) -> Self {
        Self { rate, uncertainty }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceTable {
    pub nitrogen_only: SourceRate,
    pub electron_beam: SourceRate,
    pub uv_lamp: SourceRate,
    pub photoionization: SourceRate,
    /// 791 nm power of the photoionization entry (W).
    pub pi_power: f64,
}

impl SourceTable {
    pub fn validate(&self) -> Result<(), LoadingError> {
        for s in [self.nitrogen_only, self.electron_beam, self.uv_lamp, self.photoionization] {
            if !(s.rate >= 0.0 && s.rate.is_finite()) {
                return Err(LoadingError::Rate(s.rate));
            }
        }
        Ok(())
    }
}

/// Measured rates: N₂ alone, electron beam, UV lamp, and photoionization of
/// ¹³⁸Ba at 0.75 mW.
pub fn table_one() -> SourceTable {
    SourceTable {
        nitrogen_only: SourceRate::new(0.005, 0.003),
        electron_beam: SourceRate::new(0.014, 0.006),
        uv_lamp: SourceRate::new(2.4, 0.3),
        photoionization: SourceRate::new(2.0, 0.1),
        pi_power: 0.75e-3,
    }
}

/// Efficiencies relative to electron-beam loading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Efficiency {
    pub electron_beam: f64,
    pub uv_lamp: f64,
    /// Photoionization per unit abundance of the loaded isotope.
    pub photoionization: f64,
}

/// (1, lamp/e-beam, PI/(e-beam·R)) for an isotope of abundance R.
pub fn efficiency_comparison(table: &SourceTable, abundance: f64) -> Result<Efficiency, LoadingError> {
    table.validate()?;
    let eb = table.electron_beam.rate;
    if eb == 0.0 {
        return Err(LoadingError::ZeroDenominator("electron-beam"));
    }
    if !(abundance > 0.0) {
        return Err(LoadingError::ZeroDenominator("abundance-scaled electron-beam"));
    }
    Ok(Efficiency {
        electron_beam: 1.0,
        uv_lamp: table.uv_lamp.rate / eb,
        photoionization: table.photoionization.rate / (eb * abundance),
    })
}
