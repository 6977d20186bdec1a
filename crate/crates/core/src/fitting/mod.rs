//! Weighted nonlinear least squares and the line-shape model library.

mod engine;
pub mod fm;
mod models;

pub use engine::{fit, DataSeries, FitError, FitOptions, FitParameter, FitResult};
pub use models::{
    jacobian_check, Constant, FmDispersive, Gaussian, Model, PowerLaw, Proportional, SqrtSaturation, TwoGaussian,
};
