//! Synthetic FM saturation-spectroscopy signals built from the isotope
//! registry, and location of their zero crossings.

use serde::Serialize;

use super::models::{FmDispersive, Model};
use crate::constants::IsotopeRecord;

/// Lorentzian FWHM used for synthetic FM features (Hz).
pub const DEFAULT_WIDTH: f64 = 20e6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FmLine {
    pub mass_number: u32,
    /// "F=5/2" etc. for odd isotopes, empty for even ones.
    pub component: String,
    /// Offset from the ¹³⁸Ba line (Hz).
    pub center: f64,
    pub amplitude: f64,
}

/// One dispersive feature per line of each isotope. Amplitudes scale with
/// abundance times the (2F+1)/Σ(2F'+1) component weight, and with `width`
/// so that the extremum height does not depend on the chosen width.
pub fn line_table(isotopes: &[IsotopeRecord], width: f64) -> Vec<FmLine> {
    let mut lines = Vec::new();
    for iso in isotopes {
        if iso.hyperfine_components.is_empty() {
            lines.push(FmLine {
                mass_number: iso.mass_number,
                component: String::new(),
                center: iso.shift_791,
                amplitude: iso.abundance * width,
            });
            continue;
        }
        let total: f64 = iso.hyperfine_components.iter().map(|c| c.degeneracy()).sum();
        for c in &iso.hyperfine_components {
            lines.push(FmLine {
                mass_number: iso.mass_number,
                component: c.label(),
                center: c.offset,
                amplitude: iso.abundance * c.degeneracy() / total * width,
            });
        }
    }
    lines.sort_by(|a, b| a.center.total_cmp(&b.center));
    lines
}

pub fn model_for(lines: &[FmLine], width: f64) -> (FmDispersive, Vec<f64>) {
    let pairs: Vec<(f64, f64)> = lines.iter().map(|l| (l.center, l.amplitude)).collect();
    (FmDispersive::new(lines.len()), FmDispersive::params_from_lines(&pairs, width))
}

pub fn signal(lines: &[FmLine], width: f64, detunings: &[f64]) -> Vec<f64> {
    let (model, params) = model_for(lines, width);
    detunings.iter().map(|&x| model.value(x, &params)).collect()
}

/// Points in `[lo, hi]` where `f` crosses zero from positive to negative.
/// The interval is scanned in steps of `step` and each bracket is refined by
/// bisection to below 1 Hz.
pub fn falling_zero_crossings<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).ceil().max(1.0) as usize;
    let mut out = Vec::new();
    let mut x0 = lo;
    let mut y0 = f(x0);
    for i in 1..=n {
        let x1 = (lo + i as f64 * step).min(hi);
        let y1 = f(x1);
        if y0 > 0.0 && y1 <= 0.0 {
            let (mut a, mut b) = (x0, x1);
            while b - a > 1.0 {
                let m = 0.5 * (a + b);
                if f(m) > 0.0 {
                    a = m;
                } else {
                    b = m;
                }
            }
            out.push(0.5 * (a + b));
        }
        x0 = x1;
        y0 = y1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::registry;

    #[test]
    fn crossings_sit_on_line_centres() {
        let isotopes: Vec<_> = registry().into_iter().filter(|i| i.mass_number != 134).collect();
        let lines = line_table(&isotopes, DEFAULT_WIDTH);
        assert_eq!(lines.len(), 8);
        let (model, params) = model_for(&lines, DEFAULT_WIDTH);
        let zeros = falling_zero_crossings(|x| model.value(x, &params), -3.2e9, 2.2e9, 1e6);
        assert_eq!(zeros.len(), lines.len());
        for (z, l) in zeros.iter().zip(&lines) {
            assert!((z - l.center).abs() < 0.5e6, "{z} vs {}", l.center);
        }
    }

    #[test]
    fn single_line_crossing_is_exact() {
        let lines = [FmLine {
            mass_number: 138,
            component: String::new(),
            center: 3.3e6,
            amplitude: 1.0,
        }];
        let zeros = falling_zero_crossings(|x| signal(&lines, 20e6, &[x])[0], -50e6, 50e6, 0.7e6);
        assert_eq!(zeros.len(), 1);
        assert!((zeros[0] - 3.3e6).abs() <= 1.0);
    }
}
