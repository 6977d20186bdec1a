//! Equilibrium of N ions in a harmonic axial well.
//!
//! In units of ℓ = (k_e q²/(mω²))^{1/3} the energy is
//! E(u) = Σ u_i²/2 + Σ_{i<j} 1/|u_i − u_j|, convex on the ordered domain
//! u_1 < … < u_N, and is minimized by Newton's method.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::TrapError;
use crate::constants::COULOMB_CONSTANT;

pub const MAX_IONS: usize = 100;
const MAX_ITERATIONS: usize = 10_000;
/// Force tolerance in units of the harmonic force scale mω²ℓ.
const FORCE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainSolution {
    /// Axial positions (m), ascending, centroid at zero.
    pub positions: Vec<f64>,
    pub axial_frequency: f64,
    pub n_ions: usize,
    /// ℓ (m).
    pub length_scale: f64,
    /// Largest residual force in units of mω²ℓ.
    pub max_force: f64,
    pub iterations: usize,
}

impl ChainSolution {
    /// Spacing of the two ions nearest the centre (m); zero for one ion.
    pub fn central_spacing(&self) -> f64 {
        let n = self.n_ions;
        if n < 2 {
            return 0.0;
        }
        let i = n / 2;
        self.positions[i] - self.positions[i - 1]
    }

    pub fn spacings(&self) -> Vec<f64> {
        self.positions.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

/// ℓ = (k_e q²/(m ω²))^{1/3} with ω = 2π·`axial_frequency` (m).
pub fn length_scale(axial_frequency: f64, mass: f64, charge: f64) -> f64 {
    let omega = 2.0 * PI * axial_frequency;
    (COULOMB_CONSTANT * charge * charge / (mass * omega * omega)).cbrt()
}

fn gradient(u: &[f64]) -> DVector<f64> {
    let n = u.len();
    DVector::from_fn(n, |i, _| {
        let mut g = u[i];
        for (j, &uj) in u.iter().enumerate() {
            if j != i {
                let d = u[i] - uj;
                g -= d.signum() / (d * d);
            }
        }
        g
    })
}

fn energy(u: &[f64]) -> f64 {
    let mut e = 0.0;
    for i in 0..u.len() {
        e += 0.5 * u[i] * u[i];
        for j in i + 1..u.len() {
            e += 1.0 / (u[j] - u[i]).abs();
        }
    }
    e
}

fn hessian(u: &[f64]) -> DMatrix<f64> {
    let n = u.len();
    let mut h = DMatrix::identity(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let c = 2.0 / (u[i] - u[j]).abs().powi(3);
                h[(i, i)] += c;
                h[(i, j)] -= c;
            }
        }
    }
    h
}

fn ordered(u: &[f64]) -> bool {
    u.windows(2).all(|w| w[1] > w[0])
}

/// Dimensionless equilibrium positions, returned with the final residual and
/// iteration count.
fn solve_dimensionless(n: usize) -> Result<(Vec<f64>, f64, usize), TrapError> {
    if n == 0 || n > MAX_IONS {
        return Err(TrapError::IonCount { n, max: MAX_IONS });
    }
    if n == 1 {
        return Ok((vec![0.0], 0.0, 0));
    }
    // uniform spacing over a half-length that grows like (N ln N)^{1/3}
    let half = (0.75 * n as f64 * (n as f64).ln().max(1.0)).cbrt();
    let mut u: Vec<f64> = (0..n)
        .map(|i| -half + 2.0 * half * i as f64 / (n - 1) as f64)
        .collect();
    let mut g = gradient(&u);
    let mut e = energy(&u);
    let mut iterations = 0;
    while g.amax() >= FORCE_TOLERANCE {
        if iterations == MAX_ITERATIONS {
            return Err(TrapError::NotConverged {
                iterations,
                residual: g.amax(),
            });
        }
        iterations += 1;
        let step = hessian(&u)
            .cholesky()
            .map(|c| c.solve(&(-&g)))
            .unwrap_or_else(|| -&g);
        let mut alpha = 1.0;
        loop {
            let trial: Vec<f64> = u.iter().zip(step.iter()).map(|(x, d)| x + alpha * d).collect();
            if ordered(&trial) {
                let tg = gradient(&trial);
                let te = energy(&trial);
                if te < e || tg.norm() < g.norm() {
                    u = trial;
                    g = tg;
                    e = te;
                    break;
                }
            }
            alpha *= 0.5;
            if alpha < 1e-20 {
                return Err(TrapError::NotConverged {
                    iterations,
                    residual: g.amax(),
                });
            }
        }
    }
    // remove rounding asymmetry; the exact solution is odd under reflection
    let sym: Vec<f64> = (0..n).map(|i| 0.5 * (u[i] - u[n - 1 - i])).collect();
    let residual = gradient(&sym).amax().max(g.amax());
    Ok((sym, residual, iterations))
}

/// Equilibrium of `n_ions` ions of `mass` and `charge` in an axial well of
/// frequency `axial_frequency` (Hz).
pub fn chain_equilibrium(n_ions: usize, axial_frequency: f64, mass: f64, charge: f64) -> Result<ChainSolution, TrapError> {
    for (name, v) in [("axial frequency", axial_frequency), ("ion mass", mass), ("ion charge", charge.abs())] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(TrapError::NonPositive(name, v));
        }
    }
    let (u, max_force, iterations) = solve_dimensionless(n_ions)?;
    let l = length_scale(axial_frequency, mass, charge);
    Ok(ChainSolution {
        positions: u.iter().map(|x| x * l).collect(),
        axial_frequency,
        n_ions,
        length_scale: l,
        max_force,
        iterations,
    })
}

/// Axial frequency (Hz) at which the central spacing of an `n_ions` chain
/// equals `spacing` (m).
pub fn implied_axial_frequency(n_ions: usize, spacing: f64, mass: f64, charge: f64) -> Result<f64, TrapError> {
    if n_ions < 2 {
        return Err(TrapError::IonCount { n: n_ions, max: MAX_IONS });
    }
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(TrapError::NonPositive("spacing", spacing));
    }
    let (u, _, _) = solve_dimensionless(n_ions)?;
    let i = n_ions / 2;
    let l = spacing / (u[i] - u[i - 1]);
    let omega = (COULOMB_CONSTANT * charge * charge / (mass * l * l * l)).sqrt();
    Ok(omega / (2.0 * PI))
}
