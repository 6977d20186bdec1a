//! Line-shape and scaling models with analytic Jacobians.

use std::f64::consts::LN_2;

/// A model y = f(x; θ) with an analytic gradient in θ.
pub trait Model: Sync {
    fn parameter_names(&self) -> Vec<String>;

    fn value(&self, x: f64, params: &[f64]) -> f64;

    /// Writes ∂f/∂θ_j into `grad` (length = number of parameters).
    fn gradient(&self, x: f64, params: &[f64], grad: &mut [f64]);

    fn n_params(&self) -> usize {
        self.parameter_names().len()
    }

    /// Permutation applied to fitted parameters before reporting, for models
    /// with label symmetry. `order[i]` is the source index of output slot i.
    fn canonical_order(&self, params: &[f64]) -> Vec<usize> {
        (0..params.len()).collect()
    }
}

const FOUR_LN2: f64 = 4.0 * LN_2;

fn gaussian_shape(x: f64, center: f64, fwhm: f64) -> f64 {
    let u = (x - center) / fwhm;
    (-FOUR_LN2 * u * u).exp()
}

/// offset + amplitude·exp(−4 ln2·(x − center)²/fwhm²).
/// Parameters: `[amplitude, center, fwhm, offset]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Gaussian;

impl Model for Gaussian {
    fn parameter_names(&self) -> Vec<String> {
        ["amplitude", "center", "fwhm", "offset"].map(String::from).to_vec()
    }

    fn value(&self, x: f64, p: &[f64]) -> f64 {
        p[3] + p[0] * gaussian_shape(x, p[1], p[2])
    }

    fn gradient(&self, x: f64, p: &[f64], grad: &mut [f64]) {
        let (a, c, w) = (p[0], p[1], p[2]);
        let g = gaussian_shape(x, c, w);
        let d = x - c;
        grad[0] = g;
        grad[1] = a * g * 2.0 * FOUR_LN2 * d / (w * w);
        grad[2] = a * g * 2.0 * FOUR_LN2 * d * d / (w * w * w);
        grad[3] = 1.0;
    }
}

/// Two Gaussians with a shared width plus an offset.
/// Parameters: `[a1, c1, a2, c2, fwhm, offset]`; reported with c1 ≤ c2.
#[derive(Debug, Clone, Copy, Default)]
pub struct TwoGaussian;

impl Model for TwoGaussian {
    fn parameter_names(&self) -> Vec<String> {
        ["a1", "c1", "a2", "c2", "fwhm", "offset"].map(String::from).to_vec()
    }

    fn value(&self, x: f64, p: &[f64]) -> f64 {
        p[5] + p[0] * gaussian_shape(x, p[1], p[4]) + p[2] * gaussian_shape(x, p[3], p[4])
    }

    fn gradient(&self, x: f64, p: &[f64], grad: &mut [f64]) {
        let w = p[4];
        let mut dw = 0.0;
        for k in 0..2 {
            let (a, c) = (p[2 * k], p[2 * k + 1]);
            let g = gaussian_shape(x, c, w);
            let d = x - c;
            grad[2 * k] = g;
            grad[2 * k + 1] = a * g * 2.0 * FOUR_LN2 * d / (w * w);
            dw += a * g * 2.0 * FOUR_LN2 * d * d / (w * w * w);
        }
        grad[4] = dw;
        grad[5] = 1.0;
    }

    fn canonical_order(&self, p: &[f64]) -> Vec<usize> {
        if p[1] > p[3] {
            vec![2, 3, 0, 1, 4, 5]
        } else {
            (0..6).collect()
        }
    }
}

/// r_sat·min(√(P/p_sat), 1). Parameters: `[r_sat, p_sat]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct SqrtSaturation;

impl Model for SqrtSaturation {
    fn parameter_names(&self) -> Vec<String> {
        ["r_sat", "p_sat"].map(String::from).to_vec()
    }

    fn value(&self, power: f64, p: &[f64]) -> f64 {
        p[0] * (power / p[1]).sqrt().min(1.0)
    }

    fn gradient(&self, power: f64, p: &[f64], grad: &mut [f64]) {
        let (r, ps) = (p[0], p[1]);
        if power < ps {
            let root = (power / ps).sqrt();
            grad[0] = root;
            grad[1] = -0.5 * r * root / ps;
        } else {
            grad[0] = 1.0;
            grad[1] = 0.0;
        }
    }
}

/// a·x^b. Parameters: `[a, b]`; x > 0.
#[derive(Debug, Clone, Copy, Default)]
pub struct PowerLaw;

impl Model for PowerLaw {
    fn parameter_names(&self) -> Vec<String> {
        ["a", "b"].map(String::from).to_vec()
    }

    fn value(&self, x: f64, p: &[f64]) -> f64 {
        p[0] * x.powf(p[1])
    }

    fn gradient(&self, x: f64, p: &[f64], grad: &mut [f64]) {
        let xb = x.powf(p[1]);
        grad[0] = xb;
        grad[1] = p[0] * xb * x.ln();
    }
}

/// y = slope·x.
#[derive(Debug, Clone, Copy, Default)]
pub struct Proportional;

impl Model for Proportional {
    fn parameter_names(&self) -> Vec<String> {
        vec!["slope".to_string()]
    }

    fn value(&self, x: f64, p: &[f64]) -> f64 {
        p[0] * x
    }

    fn gradient(&self, x: f64, _p: &[f64], grad: &mut [f64]) {
        grad[0] = x;
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Constant;

impl Model for Constant {
    fn parameter_names(&self) -> Vec<String> {
        vec!["value".to_string()]
    }

    fn value(&self, _x: f64, p: &[f64]) -> f64 {
        p[0]
    }

    fn gradient(&self, _x: f64, _p: &[f64], grad: &mut [f64]) {
        grad[0] = 1.0;
    }
}

/// Sum of derivative-of-Lorentzian features, the dispersive error signal of
/// FM saturation spectroscopy:
/// Σ_k a_k · d/dx [1/(1 + (2(x − c_k)/w)²)].
/// Parameters: `[c_1, a_1, …, c_n, a_n, width]`, width being the FWHM of
/// the underlying Lorentzian.
#[derive(Debug, Clone, Copy)]
pub struct FmDispersive {
    pub n_lines: usize,
}

impl FmDispersive {
    pub fn new(n_lines: usize) -> Self {
        Self { n_lines }
    }

    /// d/dx of the unit-height Lorentzian of FWHM `width`, at offset `u`.
    pub fn lorentzian_derivative(u: f64, width: f64) -> f64 {
        let w2 = width * width;
        let t = 1.0 + 4.0 * u * u / w2;
        -8.0 * u / (w2 * t * t)
    }

    pub fn params_from_lines(lines: &[(f64, f64)], width: f64) -> Vec<f64> {
        let mut p: Vec<f64> = lines.iter().flat_map(|&(c, a)| [c, a]).collect();
        p.push(width);
        p
    }
}

impl Model for FmDispersive {
    fn parameter_names(&self) -> Vec<String> {
        let mut names: Vec<String> = (1..=self.n_lines)
            .flat_map(|k| [format!("c{k}"), format!("a{k}")])
            .collect();
        names.push("width".to_string());
        names
    }

    fn value(&self, x: f64, p: &[f64]) -> f64 {
        let w = p[2 * self.n_lines];
        (0..self.n_lines)
            .map(|k| p[2 * k + 1] * Self::lorentzian_derivative(x - p[2 * k], w))
            .sum()
    }

    fn gradient(&self, x: f64, p: &[f64], grad: &mut [f64]) {
        let w = p[2 * self.n_lines];
        let w2 = w * w;
        let mut dw = 0.0;
        for k in 0..self.n_lines {
            let (c, a) = (p[2 * k], p[2 * k + 1]);
            let u = x - c;
            let t = 1.0 + 4.0 * u * u / w2;
            let t2 = t * t;
            grad[2 * k] = a * (8.0 / (w2 * t2) - 128.0 * u * u / (w2 * w2 * t2 * t));
            grad[2 * k + 1] = -8.0 * u / (w2 * t2);
            dw += 16.0 * a * u / (w2 * w * t2) - 128.0 * a * u * u * u / (w2 * w2 * w * t2 * t);
        }
        grad[2 * self.n_lines] = dw;
    }
}

/// Largest relative deviation between the analytic Jacobian and central
/// finite differences with step h = 10⁻⁶·max(|θ_j|, 1). Each parameter's
/// deviation is measured against the largest analytic entry in its column.
pub fn jacobian_check<M: Model + ?Sized>(model: &M, params: &[f64], xs: &[f64]) -> f64 {
    let n_p = params.len();
    let mut analytic = vec![vec![0.0; n_p]; xs.len()];
    for (row, &x) in analytic.iter_mut().zip(xs) {
        model.gradient(x, params, row);
    }
    let mut worst = 0.0f64;
    let mut shifted = params.to_vec();
    for j in 0..n_p {
        let h = 1e-6 * params[j].abs().max(1.0);
        let plus = params[j] + h;
        let minus = params[j] - h;
        let span = plus - minus;
        let mut max_dev = 0.0f64;
        let mut scale = 0.0f64;
        for (i, &x) in xs.iter().enumerate() {
            shifted[j] = plus;
            let fp = model.value(x, &shifted);
            shifted[j] = minus;
            let fm = model.value(x, &shifted);
            shifted[j] = params[j];
            let fd = (fp - fm) / span;
            max_dev = max_dev.max((fd - analytic[i][j]).abs());
            scale = scale.max(analytic[i][j].abs());
        }
        if max_dev > 0.0 {
            worst = worst.max(if scale > 0.0 { max_dev / scale } else { f64::INFINITY });
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_special_points() {
        let p = [3.0, 10.0, 4.0, 0.5];
        assert!((Gaussian.value(10.0, &p) - 3.5).abs() < 1e-15);
        assert!((Gaussian.value(12.0, &p) - 2.0).abs() < 1e-14);
        assert!((Gaussian.value(8.0, &p) - 2.0).abs() < 1e-14);
        let flat = [0.0, 10.0, 4.0, 0.5];
        for x in [-100.0, 0.0, 10.0, 1e3] {
            assert_eq!(Gaussian.value(x, &flat), 0.5);
        }
    }

    #[test]
    fn two_gaussian_reduces_to_one() {
        let p2 = [3.0, 10.0, 0.0, 50.0, 4.0, 0.5];
        let p1 = [3.0, 10.0, 4.0, 0.5];
        for x in [-3.0, 8.0, 10.0, 11.7, 60.0] {
            assert_eq!(TwoGaussian.value(x, &p2), Gaussian.value(x, &p1));
        }
        assert_eq!(TwoGaussian.canonical_order(&[1.0, 5.0, 2.0, 3.0, 1.0, 0.0]), vec![2, 3, 0, 1, 4, 5]);
    }

    #[test]
    fn sqrt_saturation_points() {
        let p = [9.9, 17e-3];
        assert!((SqrtSaturation.value(17e-3, &p) - 9.9).abs() < 1e-14);
        assert!((SqrtSaturation.value(17e-3 / 4.0, &p) - 4.95).abs() < 1e-14);
        assert_eq!(SqrtSaturation.value(1.0, &p), 9.9);
    }

    #[test]
    fn fm_single_line_shape() {
        let m = FmDispersive::new(1);
        let (c, w) = (3e6, 2e7);
        let p = [c, 1.0, w];
        assert_eq!(m.value(c, &p), 0.0);
        assert!(m.value(c - 1e6, &p) > 0.0 && m.value(c + 1e6, &p) < 0.0);
        // extrema at ±w/(2√3)
        let xe = w / (2.0 * 3f64.sqrt());
        let f = |x: f64| m.value(x, &p);
        for sign in [-1.0, 1.0] {
            let x0 = c + sign * xe;
            let h = 1e-3 * w;
            assert!(f(x0).abs() > f(x0 + h).abs() && f(x0).abs() > f(x0 - h).abs());
        }
    }

    #[test]
    fn fm_superposition() {
        let two = FmDispersive::new(2);
        let one = FmDispersive::new(1);
        let p = [0.0, 1.0, 1e9, 0.5, 2e7];
        for x in [-5e7, 0.0, 3e8, 1e9 + 1e6] {
            let sum = one.value(x, &[0.0, 1.0, 2e7]) + one.value(x, &[1e9, 0.5, 2e7]);
            assert!((two.value(x, &p) - sum).abs() <= 1e-12 * sum.abs().max(1e-20));
        }
    }

    #[test]
    fn jacobians_match_finite_differences() {
        let xs: Vec<f64> = (0..81).map(|i| -200e6 + 5e6 * i as f64).collect();
        assert!(jacobian_check(&Gaussian, &[2.0, 12e6, 100e6, 0.05], &xs) < 1e-5);
        assert!(jacobian_check(&TwoGaussian, &[1.0, -70e6, 1.7, 70e6, 110e6, 0.01], &xs) < 1e-5);
        // in MHz: the fixed 1e-6 step is below rounding noise for a centre of 0 Hz
        let xs_mhz: Vec<f64> = xs.iter().map(|x| x * 1e-6).collect();
        assert!(jacobian_check(&FmDispersive::new(2), &[0.0, 20.0, 110.0, 5.0, 20.0], &xs_mhz) < 1e-5);
        let ps: Vec<f64> = (1..=20).map(|i| 0.05e-3 * i as f64).collect();
        assert!(jacobian_check(&SqrtSaturation, &[9.9, 17e-3], &ps) < 1e-5);
        assert!(jacobian_check(&PowerLaw, &[2.3, 0.47], &ps) < 1e-5);
        assert_eq!(jacobian_check(&Constant, &[3.7], &xs), 0.0);
        assert_eq!(jacobian_check(&Constant, &[1.0], &xs), 0.0);
    }
}
