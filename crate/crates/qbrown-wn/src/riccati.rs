//! Reduction of the homogeneous exponent system to a scalar second-order
//! equation with time-dependent friction and frequency.
//!
//! On the null cone `w1 w2 = w3^2`, the substitution `w_{1,h} = y^2`
//! (branch 1) or `w_{2,h} = y^2` (branch 2) linearizes the Riccati equation
//! for the logarithmic derivative.

use qbrown_core::{rk_integrate, Error, GeneratorCoeffs, Result, TimeGrid};

use crate::{homogeneous_matrix, MasterEqCoefficients};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RiccatiBranch {
    /// Reconstructs `w_{1,h}`; needs `b11 != 0`.
    One,
    /// Reconstructs `w_{2,h}`; needs `b22 != 0`.
    Two,
}

impl RiccatiBranch {
    pub fn from_index(i: u8) -> Result<Self> {
        match i {
            1 => Ok(Self::One),
            2 => Ok(Self::Two),
            _ => Err(Error::invalid(format!(
                "riccati branch must be 1 or 2, got {i}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiccatiResult {
    pub times: Vec<f64>,
    /// `w_h` component rebuilt from `y`.
    pub reconstructed: Vec<f64>,
    /// Same component from direct integration of the homogeneous system.
    pub direct: Vec<f64>,
    pub max_rel_err: f64,
}

const SINGULAR_TOL: f64 = 1e-12;

fn derivative<F: Fn(f64) -> f64>(f: F, t: f64) -> f64 {
    // five-point central difference
    let h = 1e-3 * t.abs().max(1.0);
    (f(t - 2.0 * h) - 8.0 * f(t - h) + 8.0 * f(t + h) - f(t + 2.0 * h)) / (12.0 * h)
}

/// Friction and potential of the linear equation `y'' = f y' + g y`.
fn friction_potential(coeffs: &MasterEqCoefficients, branch: RiccatiBranch, t: f64) -> (f64, f64) {
    let c = coeffs.at(t);
    let db12 = derivative(|s| coeffs.at(s).b12, t);
    match branch {
        RiccatiBranch::One => {
            let lf = derivative(|s| coeffs.at(s).b11, t) / c.b11;
            let pot = 2.0 * (2.0 * c.b12 * c.b12 + c.b12 * lf - db12 - 2.0 * c.b11 * c.b22);
            (lf, pot)
        }
        RiccatiBranch::Two => {
            let lf = derivative(|s| coeffs.at(s).b22, t) / c.b22;
            let pot = 2.0 * (2.0 * c.b12 * c.b12 - c.b12 * lf + db12 - 2.0 * c.b11 * c.b22);
            (lf, pot)
        }
    }
}

/// Integrates the branch equation from `grid.t0()` with initial data matched
/// to `wh0 = (w_{1,h}, w_{2,h}, w_{3,h})` there, and compares against direct
/// integration of the homogeneous system.
pub fn riccati_reduce(
    coeffs: &MasterEqCoefficients,
    grid: &TimeGrid,
    branch: RiccatiBranch,
    wh0: [f64; 3],
) -> Result<RiccatiResult> {
    let scale = wh0.iter().map(|x| x * x).sum::<f64>().max(1e-300);
    if (wh0[0] * wh0[1] - wh0[2] * wh0[2]).abs() > 1e-10 * scale {
        return Err(Error::invalid(
            "initial homogeneous data must satisfy w1 w2 = w3^2",
        ));
    }
    let idx = match branch {
        RiccatiBranch::One => 0,
        RiccatiBranch::Two => 1,
    };
    if !(wh0[idx] > 0.0) {
        return Err(Error::invalid(
            "reconstructed component must start positive",
        ));
    }
    for &t in grid.values() {
        let c: GeneratorCoeffs = coeffs.at(t);
        let b = if idx == 0 { c.b11 } else { c.b22 };
        if b.abs() < SINGULAR_TOL {
            return Err(Error::gate(
                "wei_norman",
                "riccati precondition",
                format!(
                    "vanishing {} at t = {t}",
                    if idx == 0 { "b11" } else { "b22" }
                ),
            ));
        }
    }

    let direct = rk_integrate(
        |t, w: &[f64], d: &mut [f64]| {
            let m = homogeneous_matrix(&coeffs.at(t));
            for i in 0..3 {
                d[i] = (0..3).map(|j| m[(i, j)] * w[j]).sum();
            }
        },
        &wh0,
        grid,
        1e-12,
    )?;

    // matched logarithmic derivative: y'/y = (w'/w) / 2
    let m0 = homogeneous_matrix(&coeffs.at(grid.t0()));
    let dw0: f64 = (0..3).map(|j| m0[(idx, j)] * wh0[j]).sum();
    let y0 = [1.0, 0.5 * dw0 / wh0[idx]];
    let ys = rk_integrate(
        |t, y: &[f64], d: &mut [f64]| {
            let (f, g) = friction_potential(coeffs, branch, t);
            d[0] = y[1];
            d[1] = f * y[1] + g * y[0];
        },
        &y0,
        grid,
        1e-12,
    )?;

    let mut reconstructed = Vec::with_capacity(grid.len());
    let mut direct_c = Vec::with_capacity(grid.len());
    let mut worst = 0.0f64;
    for (i, &t) in grid.values().iter().enumerate() {
        let d = direct.states[i][idx];
        let y = ys.states[i][0];
        if !(d > 0.0) || !(y > 0.0) {
            return Err(Error::gate(
                "wei_norman",
                "riccati precondition",
                format!("homogeneous component changes sign near t = {t}"),
            ));
        }
        let r = wh0[idx] * y * y;
        worst = worst.max((r - d).abs() / d.abs());
        reconstructed.push(r);
        direct_c.push(d);
    }
    Ok(RiccatiResult {
        times: grid.values().to_vec(),
        reconstructed,
        direct: direct_c,
        max_rel_err: worst,
    })
}
