//! Effusive atomic beam from the oven: flux-weighted speeds, angular
//! divergence and the Doppler shifts seen by a probe laser.

use std::f64::consts::PI;

use nalgebra::Vector3;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constants::BOLTZMANN;
use crate::rng::{SeedKey, CHUNK};

/// FWHM = 2√(2 ln 2)·σ
pub const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949;

/// Minimum Monte Carlo size for a width estimate.
pub const MIN_SAMPLES: usize = 1_000;

/// Histogram bin width used for width estimates (Hz).
pub const DEFAULT_BIN_WIDTH: f64 = 1e6;

/// Angular spread of atom directions about the beam axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case")]
pub enum Divergence {
    /// Isotropic Gaussian in the two transverse angles; `fwhm` is the full
    /// width at half maximum of either angle (rad).
    Gaussian { fwhm: f64 },
    /// Directions uniform in solid angle inside a cone (rad).
    Cone { half_angle: f64 },
}

impl Divergence {
    pub fn angle(&self) -> f64 {
        match *self {
            Divergence::Gaussian { fwhm } => fwhm,
            Divergence::Cone { half_angle } => half_angle,
        }
    }

    pub fn with_angle(self, angle: f64) -> Self {
        match self {
            Divergence::Gaussian { .. } => Divergence::Gaussian { fwhm: angle },
            Divergence::Cone { .. } => Divergence::Cone { half_angle: angle },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamConfig {
    /// Oven temperature (K).
    pub oven_temperature: f64,
    pub divergence: Divergence,
    /// Mass of the species the beam is sampled for (kg).
    pub species_mass: f64,
    /// Relative flux normalization (atoms/s); absorbed into loading calibration.
    pub flux_scale: f64,
    /// Angle between the probe laser and the beam axis (rad).
    pub probe_angle: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BeamError {
    #[error("oven temperature must be positive, got {0} K")]
    Temperature(f64),
    #[error("divergence angle must lie in (0, π/2), got {0} rad")]
    Divergence(f64),
    #[error("species mass must be positive, got {0} kg")]
    Mass(f64),
    #[error("at least {MIN_SAMPLES} samples are needed for a width estimate, got {0}")]
    TooFewSamples(usize),
}

impl BeamConfig {
    pub fn new(
        oven_temperature: f64,
        divergence: Divergence,
        species_mass: f64,
    ) -> Result<Self, BeamError> {
        let cfg = Self {
            oven_temperature,
            divergence,
            species_mass,
            flux_scale: 1.0,
            probe_angle: PI / 2.0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), BeamError> {
        if !(self.oven_temperature > 0.0 && self.oven_temperature.is_finite()) {
            return Err(BeamError::Temperature(self.oven_temperature));
        }
        let angle = self.divergence.angle();
        if !(0.0..PI / 2.0).contains(&angle) {
            return Err(BeamError::Divergence(angle));
        }
        if !(self.species_mass > 0.0) {
            return Err(BeamError::Mass(self.species_mass));
        }
        Ok(())
    }

    pub fn with_mass(mut self, mass: f64) -> Self {
        self.species_mass = mass;
        self
    }

    fn thermal_speed_squared(&self) -> f64 {
        BOLTZMANN * self.oven_temperature / self.species_mass
    }

    /// Unit vector of the probe laser, in the x–z plane with the beam along z.
    pub fn probe_direction(&self) -> Vector3<f64> {
        Vector3::new(self.probe_angle.sin(), 0.0, self.probe_angle.cos())
    }

    pub fn probe_is_perpendicular(&self) -> bool {
        (self.probe_angle - PI / 2.0).abs() < 1e-12
    }
}

/// Mode of the flux-weighted speed distribution v³·exp(−mv²/2kT): √(3kT/m).
pub fn most_probable_speed(cfg: &BeamConfig) -> f64 {
    (3.0 * cfg.thermal_speed_squared()).sqrt()
}

/// Draws one atom: speed from the flux-weighted distribution and a direction
/// from the divergence profile, with the beam axis along +z.
pub fn sample_atom<R: Rng + ?Sized>(rng: &mut R, cfg: &BeamConfig) -> (f64, Vector3<f64>) {
    // mv²/2kT follows Gamma(2, 1) under the v³ weighting
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = 1.0 - rng.random::<f64>();
    let reduced = -(u1 * u2).ln();
    let speed = (2.0 * cfg.thermal_speed_squared() * reduced).sqrt();
    (speed, sample_direction(rng, &cfg.divergence))
}

fn sample_direction<R: Rng + ?Sized>(rng: &mut R, divergence: &Divergence) -> Vector3<f64> {
    match *divergence {
        Divergence::Cone { half_angle } => {
            let cos_max = half_angle.cos();
            let cos_t = 1.0 - rng.random::<f64>() * (1.0 - cos_max);
            let sin_t = (1.0 - cos_t * cos_t).max(0.0).sqrt();
            let phi = 2.0 * PI * rng.random::<f64>();
            Vector3::new(sin_t * phi.cos(), sin_t * phi.sin(), cos_t)
        }
        Divergence::Gaussian { fwhm } => {
            let sigma = fwhm / FWHM_PER_SIGMA;
            loop {
                let tx: f64 = rng.sample::<f64, _>(StandardNormal) * sigma;
                let ty: f64 = rng.sample::<f64, _>(StandardNormal) * sigma;
                let theta = tx.hypot(ty);
                if theta >= PI / 2.0 {
                    continue;
                }
                if theta == 0.0 {
                    return Vector3::z();
                }
                let s = theta.sin() / theta;
                return Vector3::new(tx * s, ty * s, theta.cos());
            }
        }
    }
}

/// Doppler shift (Hz) of an atom moving with `speed` along `direction`, for
/// a probe of `wavelength` travelling along `probe`.
pub fn doppler_shift(speed: f64, direction: &Vector3<f64>, probe: &Vector3<f64>, wavelength: f64) -> f64 {
    speed * direction.dot(probe) / wavelength
}

/// Doppler shifts of `n_samples` atoms. The work is split into fixed-size
/// chunks, each drawn from its own stream of `key`, so the output is
/// identical for any thread count.
pub fn sample_doppler_shifts(cfg: &BeamConfig, wavelength: f64, n_samples: usize, key: &SeedKey) -> Vec<f64> {
    let probe = cfg.probe_direction();
    let n_chunks = n_samples.div_ceil(CHUNK);
    let chunks: Vec<Vec<f64>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = key.stream(c as u64);
            let len = CHUNK.min(n_samples - c * CHUNK);
            (0..len)
                .map(|_| {
                    let (v, d) = sample_atom(&mut rng, cfg);
                    doppler_shift(v, &d, &probe, wavelength)
                })
                .collect()
        })
        .collect();
    chunks.concat()
}

/// Histogram with uniform bins.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub start: f64,
    pub bin_width: f64,
    pub counts: Vec<f64>,
}

impl Histogram {
    /// Bins spanning `[-half_span, half_span)` with `half_span` a whole
    /// number of bins; symmetric placement keeps zero on a bin edge.
    pub fn symmetric(samples: &[f64], bin_width: f64) -> Self {
        let max_abs = samples.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
        let half_bins = ((max_abs / bin_width).floor() as usize) + 1;
        let start = -(half_bins as f64) * bin_width;
        let mut counts = vec![0.0; 2 * half_bins];
        for &x in samples {
            let idx = ((x - start) / bin_width).floor() as isize;
            let idx = idx.clamp(0, counts.len() as isize - 1) as usize;
            counts[idx] += 1.0;
        }
        Self {
            start,
            bin_width,
            counts,
        }
    }

    pub fn center(&self, i: usize) -> f64 {
        self.start + (i as f64 + 0.5) * self.bin_width
    }

    /// Moving average over `2·radius + 1` bins.
    pub fn smoothed(&self, radius: usize) -> Self {
        let n = self.counts.len();
        let counts = (0..n)
            .map(|i| {
                let lo = i.saturating_sub(radius);
                let hi = (i + radius).min(n - 1);
                self.counts[lo..=hi].iter().sum::<f64>() / (2 * radius + 1) as f64
            })
            .collect();
        Self {
            counts,
            ..self.clone()
        }
    }

    /// Full width at half maximum with linear interpolation between bin
    /// centres on either side of the peak.
    pub fn fwhm(&self) -> f64 {
        let (peak_idx, &peak) = self
            .counts
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty histogram");
        let half = 0.5 * peak;
        let mut lo = peak_idx;
        while lo > 0 && self.counts[lo] > half {
            lo -= 1;
        }
        let mut hi = peak_idx;
        while hi + 1 < self.counts.len() && self.counts[hi] > half {
            hi += 1;
        }
        let cross = |inside: usize, outside: usize| {
            let (yi, yo) = (self.counts[inside], self.counts[outside]);
            let (xi, xo) = (self.center(inside), self.center(outside));
            if yi == yo {
                xo
            } else {
                xi + (half - yi) / (yo - yi) * (xo - xi)
            }
        };
        let left = if lo == peak_idx { self.center(lo) } else { cross(lo + 1, lo) };
        let right = if hi == peak_idx { self.center(hi) } else { cross(hi - 1, hi) };
        right - left
    }
}

/// Monte Carlo FWHM (Hz) of the Doppler-shift distribution seen by the probe.
///
/// Samples are histogrammed in 1 MHz bins, smoothed over 5 bins and the
/// half-maximum crossings are interpolated linearly. A distribution
/// narrower than one bin reports its full sample range.
pub fn doppler_fwhm(cfg: &BeamConfig, wavelength: f64, n_samples: usize, key: &SeedKey) -> Result<f64, BeamError> {
    if n_samples < MIN_SAMPLES {
        return Err(BeamError::TooFewSamples(n_samples));
    }
    cfg.validate()?;
    let shifts = sample_doppler_shifts(cfg, wavelength, n_samples, key);
    let (min, max) = shifts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    if max - min < DEFAULT_BIN_WIDTH {
        return Ok(max - min);
    }
    Ok(Histogram::symmetric(&shifts, DEFAULT_BIN_WIDTH).smoothed(2).fwhm())
}
