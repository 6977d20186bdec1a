//! Transverse Doppler-shift density G(f) seen by the 791 nm probe.

use serde::{Deserialize, Serialize};

use crate::beam::{sample_doppler_shifts, BeamConfig, BeamError, Histogram, MIN_SAMPLES};
use crate::rng::SeedKey;

/// Moving-average radius applied to the Monte Carlo histogram (bins).
pub const SMOOTHING_RADIUS: usize = 2;

/// Piecewise-linear probability density on uniform knots `start + i·step`,
/// zero at both ends and normalized to unit area.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransverseProfile {
    pub start: f64,
    pub step: f64,
    pub values: Vec<f64>,
}

impl TransverseProfile {
    /// Density of Doppler shifts (Hz) sampled from the beam. For a probe
    /// perpendicular to the beam axis the histogram is folded about zero,
    /// which removes the sampling asymmetry of an exactly symmetric law.
    pub fn sample(
        beam: &BeamConfig,
        wavelength: f64,
        n_samples: usize,
        bin_width: f64,
        key: &SeedKey,
    ) -> Result<Self, BeamError> {
        if n_samples < MIN_SAMPLES {
            return Err(BeamError::TooFewSamples(n_samples));
        }
        beam.validate()?;
        let shifts = sample_doppler_shifts(beam, wavelength, n_samples, key);
        Ok(Self::from_samples(&shifts, bin_width, beam.probe_is_perpendicular()))
    }

    pub fn from_samples(samples: &[f64], bin_width: f64, fold: bool) -> Self {
        let mut hist = Histogram::symmetric(samples, bin_width);
        if fold {
            let n = hist.counts.len();
            for i in 0..n / 2 {
                let mean = 0.5 * (hist.counts[i] + hist.counts[n - 1 - i]);
                hist.counts[i] = mean;
                hist.counts[n - 1 - i] = mean;
            }
        }
        let hist = hist.smoothed(SMOOTHING_RADIUS);
        let mut values = Vec::with_capacity(hist.counts.len() + 2);
        values.push(0.0);
        values.extend_from_slice(&hist.counts);
        values.push(0.0);
        let mut profile = Self {
            start: hist.center(0) - bin_width,
            step: bin_width,
            values,
        };
        let area = profile.area();
        if area > 0.0 {
            profile.values.iter_mut().for_each(|v| *v /= area);
        }
        profile
    }

    /// Dirac-like profile for a Doppler-free beam: a unit-area triangle of
    /// half-width `step` centred on zero.
    pub fn narrow(step: f64) -> Self {
        Self {
            start: -step,
            step,
            values: vec![0.0, 1.0 / step, 0.0],
        }
    }

    pub fn end(&self) -> f64 {
        self.knot(self.values.len() - 1)
    }

    pub fn knot(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step
    }

    pub fn area(&self) -> f64 {
        // trapezoid rule is exact for a piecewise-linear function
        self.values.iter().sum::<f64>() * self.step
    }

    pub fn eval(&self, f: f64) -> f64 {
        let t = (f - self.start) / self.step;
        if !(t >= 0.0) {
            return 0.0;
        }
        let i = t.floor() as usize;
        if i + 1 >= self.values.len() {
            return 0.0;
        }
        let frac = t - i as f64;
        self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
    }

    /// The density of k·X when this is the density of X: G(f/k)/k.
    pub fn scaled(&self, k: f64) -> Self {
        Self {
            start: self.start * k,
            step: self.step * k,
            values: self.values.iter().map(|v| v / k).collect(),
        }
    }

    /// Knot positions, used as quadrature breakpoints.
    pub fn knots(&self) -> Vec<f64> {
        (0..self.values.len()).map(|i| self.knot(i)).collect()
    }

    /// Full width at half maximum with linear interpolation.
    pub fn fwhm(&self) -> f64 {
        Histogram {
            start: self.start - 0.5 * self.step,
            bin_width: self.step,
            counts: self.values.clone(),
        }
        .fwhm()
    }
}
