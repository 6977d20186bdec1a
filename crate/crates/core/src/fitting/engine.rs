//! Levenberg–Marquardt weighted least squares.
//!
//! Minimizes Σ((y_i − f(x_i; θ))/σ_i)² over the free parameters. Steps solve
//! the column-scaled normal equations (JᵀJ + λI)δ = −Jᵀr, so the damping
//! acts like Marquardt's diagonal scaling and parameters of very different
//! magnitude (Hz next to ions/s) stay well conditioned.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;
use thiserror::Error;

use super::models::Model;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("data series lengths differ: x {x}, y {y}, sigma {sigma:?}")]
    LengthMismatch { x: usize, y: usize, sigma: Option<usize> },
    #[error("x values must be strictly increasing (index {0})")]
    NotIncreasing(usize),
    #[error("sigma must be positive and finite (index {0})")]
    BadSigma(usize),
    #[error("need at least {needed} data points for {params} free parameters, got {got}")]
    TooFewPoints { needed: usize, params: usize, got: usize },
    #[error("expected {expected} initial parameters, got {got}")]
    ParameterCount { expected: usize, got: usize },
    #[error("initial parameter {0} is not finite")]
    NonFiniteParameter(String),
    #[error("model is not finite at x = {0}")]
    NonFiniteModel(f64),
    #[error("normal equations are singular (parameter {0} is not constrained by the data)")]
    Singular(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DataSeries {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub sigma: Option<Vec<f64>>,
}

impl DataSeries {
    pub fn new(x: Vec<f64>, y: Vec<f64>, sigma: Option<Vec<f64>>) -> Result<Self, FitError> {
        if x.len() != y.len() || sigma.as_ref().is_some_and(|s| s.len() != x.len()) {
            return Err(FitError::LengthMismatch {
                x: x.len(),
                y: y.len(),
                sigma: sigma.as_ref().map(Vec::len),
            });
        }
        if let Some(i) = x.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(FitError::NotIncreasing(i + 1));
        }
        if let Some(s) = &sigma {
            if let Some(i) = s.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
                return Err(FitError::BadSigma(i));
            }
        }
        Ok(Self { x, y, sigma })
    }

    pub fn unweighted(x: Vec<f64>, y: Vec<f64>) -> Result<Self, FitError> {
        Self::new(x, y, None)
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    fn weight(&self, i: usize) -> f64 {
        self.sigma.as_ref().map_or(1.0, |s| 1.0 / s[i])
    }
}

#[derive(Debug, Clone)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Stop when an accepted step lowers the cost by less than this fraction.
    pub rel_cost_tol: f64,
    /// Stop when ‖Jᵀr‖∞ falls below this fraction of its initial value.
    pub grad_tol: f64,
    pub initial_lambda: f64,
    /// Parameters held at their initial values; empty means all free.
    pub fixed: Vec<bool>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            rel_cost_tol: 1e-10,
            grad_tol: 1e-8,
            initial_lambda: 1e-3,
            fixed: Vec::new(),
        }
    }
}

impl FitOptions {
    pub fn with_fixed(mut self, fixed: Vec<bool>) -> Self {
        self.fixed = fixed;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitParameter {
    pub name: String,
    pub value: f64,
    /// One-sigma error from the covariance diagonal (0 for fixed parameters).
    pub error: f64,
    pub fixed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub parameters: Vec<FitParameter>,
    pub covariance: Vec<Vec<f64>>,
    /// ‖r‖ of the weighted residual vector.
    pub residual_norm: f64,
    pub n_iterations: usize,
    pub converged: bool,
}

impl FitResult {
    pub fn value(&self, name: &str) -> Option<f64> {
        self.parameters.iter().find(|p| p.name == name).map(|p| p.value)
    }

    pub fn error(&self, name: &str) -> Option<f64> {
        self.parameters.iter().find(|p| p.name == name).map(|p| p.error)
    }

    pub fn values(&self) -> Vec<f64> {
        self.parameters.iter().map(|p| p.value).collect()
    }
}

struct Problem<'a, M: Model + ?Sized> {
    model: &'a M,
    data: &'a DataSeries,
    free: Vec<usize>,
    scratch: Vec<f64>,
}

impl<M: Model + ?Sized> Problem<'_, M> {
    fn residuals(&self, theta: &[f64]) -> Result<DVector<f64>, FitError> {
        let mut r = DVector::zeros(self.data.len());
        for i in 0..self.data.len() {
            let x = self.data.x[i];
            let f = self.model.value(x, theta);
            if !f.is_finite() {
                return Err(FitError::NonFiniteModel(x));
            }
            r[i] = (self.data.y[i] - f) * self.data.weight(i);
        }
        Ok(r)
    }

    /// Jacobian of the residuals, free columns only.
    fn jacobian(&mut self, theta: &[f64]) -> DMatrix<f64> {
        let mut j = DMatrix::zeros(self.data.len(), self.free.len());
        for i in 0..self.data.len() {
            self.model.gradient(self.data.x[i], theta, &mut self.scratch);
            let w = self.data.weight(i);
            for (col, &k) in self.free.iter().enumerate() {
                j[(i, col)] = -self.scratch[k] * w;
            }
        }
        j
    }
}

fn column_scales(jtj: &DMatrix<f64>, names: &[String], free: &[usize]) -> Result<DVector<f64>, FitError> {
    let mut d = DVector::zeros(jtj.nrows());
    for i in 0..jtj.nrows() {
        let v = jtj[(i, i)];
        if !(v > 0.0 && v.is_finite()) {
            return Err(FitError::Singular(names[free[i]].clone()));
        }
        d[i] = v.sqrt();
    }
    Ok(d)
}

fn scaled(jtj: &DMatrix<f64>, d: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(jtj.nrows(), jtj.ncols(), |i, k| jtj[(i, k)] / (d[i] * d[k]))
}

/// Fits `model` to `data` starting from `initial`.
pub fn fit<M: Model + ?Sized>(
    model: &M,
    data: &DataSeries,
    initial: &[f64],
    options: &FitOptions,
) -> Result<FitResult, FitError> {
    let names = model.parameter_names();
    if initial.len() != names.len() {
        return Err(FitError::ParameterCount {
            expected: names.len(),
            got: initial.len(),
        });
    }
    if let Some(i) = initial.iter().position(|v| !v.is_finite()) {
        return Err(FitError::NonFiniteParameter(names[i].clone()));
    }
    let free: Vec<usize> = (0..names.len())
        .filter(|&i| !options.fixed.get(i).copied().unwrap_or(false))
        .collect();
    if data.len() < free.len() + 1 {
        return Err(FitError::TooFewPoints {
            needed: free.len() + 1,
            params: free.len(),
            got: data.len(),
        });
    }
    let mut problem = Problem {
        model,
        data,
        free: free.clone(),
        scratch: vec![0.0; names.len()],
    };

    let mut theta = initial.to_vec();
    let mut r = problem.residuals(&theta)?;
    let mut cost = r.norm_squared();
    let mut jac = problem.jacobian(&theta);
    let mut gradient = jac.tr_mul(&r);
    let grad0 = gradient.amax();
    let mut lambda = options.initial_lambda;
    let mut converged = cost == 0.0 || grad0 == 0.0;
    let mut iterations = 0;

    'outer: while !converged && iterations < options.max_iterations {
        iterations += 1;
        let jtj = jac.tr_mul(&jac);
        let d = column_scales(&jtj, &names, &free)?;
        let a = scaled(&jtj, &d);
        let g = gradient.component_div(&d);
        loop {
            let mut damped = a.clone();
            for i in 0..damped.nrows() {
                damped[(i, i)] += lambda;
            }
            let Some(chol) = damped.cholesky() else {
                lambda *= 10.0;
                if lambda > 1e16 {
                    return Err(FitError::Singular(names[free[0]].clone()));
                }
                continue;
            };
            let step = chol.solve(&(-&g)).component_div(&d);
            let mut trial = theta.clone();
            for (col, &k) in free.iter().enumerate() {
                trial[k] += step[col];
            }
            let trial_r = match problem.residuals(&trial) {
                Ok(r) => r,
                Err(_) => {
                    lambda *= 10.0;
                    if lambda > 1e16 {
                        converged = true;
                        break 'outer;
                    }
                    continue;
                }
            };
            let trial_cost = trial_r.norm_squared();
            if trial_cost < cost {
                let decrease = (cost - trial_cost) / cost;
                theta = trial;
                r = trial_r;
                cost = trial_cost;
                jac = problem.jacobian(&theta);
                gradient = jac.tr_mul(&r);
                lambda = (lambda / 10.0).max(1e-15);
                if decrease < options.rel_cost_tol || cost == 0.0 || gradient.amax() <= options.grad_tol * grad0 {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
            if lambda > 1e16 {
                // no step lowers the cost: at a minimum to working precision
                converged = true;
                break 'outer;
            }
        }
    }

    let jtj = jac.tr_mul(&jac);
    let d = column_scales(&jtj, &names, &free)?;
    let a = scaled(&jtj, &d);
    let eig = SymmetricEigen::new(a.clone());
    let max_eig = eig.eigenvalues.max();
    if let Some(i) = eig.eigenvalues.iter().position(|&e| e <= 1e-13 * max_eig) {
        let v = eig.eigenvectors.column(i);
        let k = v.iamax();
        return Err(FitError::Singular(names[free[k]].clone()));
    }
    let inv = a.try_inverse().ok_or_else(|| FitError::Singular(names[free[0]].clone()))?;
    let dof = (data.len() - free.len()) as f64;
    let variance_scale = if data.sigma.is_some() { 1.0 } else { cost / dof };
    let n = names.len();
    let mut cov = vec![vec![0.0; n]; n];
    for (ci, &i) in free.iter().enumerate() {
        for (ck, &k) in free.iter().enumerate() {
            cov[i][k] = inv[(ci, ck)] / (d[ci] * d[ck]) * variance_scale;
        }
    }

    let order = model.canonical_order(&theta);
    let parameters = order
        .iter()
        .enumerate()
        .map(|(slot, &src)| FitParameter {
            name: names[slot].clone(),
            value: theta[src],
            error: cov[src][src].max(0.0).sqrt(),
            fixed: !free.contains(&src),
        })
        .collect();
    let covariance = order
        .iter()
        .map(|&i| order.iter().map(|&k| cov[i][k]).collect())
        .collect();

    Ok(FitResult {
        parameters,
        covariance,
        residual_norm: cost.sqrt(),
        n_iterations: iterations,
        converged,
    })
}
