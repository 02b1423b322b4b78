//! Shared types and numeric kernels for the qbrown workspace.
//!
//! Everything here is a plain value type or a pure function. The physics
//! crates build on these: oscillator parameters, Gaussian moments, quadratic
//! dissipator forms, a fixed-grid RK4 driver, adaptive Gauss-Kronrod
//! quadrature, and a few dense linear-algebra helpers.

pub mod error;
pub mod linalg;
pub mod ode;
pub mod quad;
pub mod types;

pub use error::{Error, Result};
pub use linalg::{expm, hermitian_min_eig, C64};
pub use ode::{rk_integrate, Trajectory};
pub use quad::{adaptive_quad, adaptive_quad_tol, composite_kronrod};
pub use types::{
    ExponentQuadraticForm, GaussianState, GeneratorCoeffs, OscillatorParams, SymplecticMap2,
    TimeGrid,
};

/// `(e^x - 1) / x`, continuous through `x = 0`.
pub fn expm1_ratio(x: f64) -> f64 {
    if x.abs() < 1e-5 {
        1.0 + x / 2.0 + x * x / 6.0 + x * x * x / 24.0
    } else {
        x.exp_m1() / x
    }
}

/// `x / (e^x - 1)`, continuous through `x = 0`.
pub fn inv_expm1_ratio(x: f64) -> f64 {
    1.0 / expm1_ratio(x)
}
