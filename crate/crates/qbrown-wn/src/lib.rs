//! Wei-Norman coordinates for the quadratic non-autonomous master equation.
//!
//! The propagator of
//! `d rho/dt = [H, rho]/(i hbar) - k1{q,.,q} - k2{p,.,p} + k3{p,.,q} + k4{q,.,p}`
//! with `H = b11 q^2 + b12 (qp + pq) + b22 p^2` factors into a reversible part
//! and an ordered product of exponentials in `{q,.,q}`, `{p,.,p}`, the
//! symmetric and the antisymmetric mixed brackets. Their scalar coordinates
//! `(w1, w2, w3, w4)` obey a linear ODE driven by the `k`s.

use std::sync::Arc;

use nalgebra::Matrix3;
use num_complex::Complex64;
use qbrown_core::{
    inv_expm1_ratio, rk_integrate, Error, ExponentQuadraticForm, GeneratorCoeffs, Result, TimeGrid,
};

pub mod riccati;

pub use riccati::{riccati_reduce, RiccatiBranch, RiccatiResult};

/// Exponent coordinates of the dissipative factor.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WeiNormanState {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
    pub w4: f64,
}

impl WeiNormanState {
    pub const ZERO: Self = Self {
        w1: 0.0,
        w2: 0.0,
        w3: 0.0,
        w4: 0.0,
    };

    pub fn as_array(&self) -> [f64; 4] {
        [self.w1, self.w2, self.w3, self.w4]
    }

    pub fn from_slice(s: &[f64]) -> Self {
        Self {
            w1: s[0],
            w2: s[1],
            w3: s[2],
            w4: s[3],
        }
    }

    /// `w1 w2 - w3^2`.
    pub fn det(&self) -> f64 {
        self.w1 * self.w2 - self.w3 * self.w3
    }
}

type CoeffFn = dyn Fn(f64) -> GeneratorCoeffs + Send + Sync;

/// Time-dependent coefficients of the master equation.
#[derive(Clone)]
pub struct MasterEqCoefficients {
    pub hbar: f64,
    f: Arc<CoeffFn>,
}

impl std::fmt::Debug for MasterEqCoefficients {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MasterEqCoefficients")
            .field("hbar", &self.hbar)
            .field("at_0", &(self.f)(0.0))
            .finish()
    }
}

impl MasterEqCoefficients {
    pub fn constant(c: GeneratorCoeffs, hbar: f64) -> Self {
        Self {
            hbar,
            f: Arc::new(move |_| c),
        }
    }

    pub fn from_fn<F>(hbar: f64, f: F) -> Self
    where
        F: Fn(f64) -> GeneratorCoeffs + Send + Sync + 'static,
    {
        Self {
            hbar,
            f: Arc::new(f),
        }
    }

    /// Piecewise-cubic interpolation of tabulated coefficients.
    pub fn from_table(hbar: f64, times: Vec<f64>, values: Vec<GeneratorCoeffs>) -> Result<Self> {
        let table = CoeffTable::new(times, values)?;
        Ok(Self {
            hbar,
            f: Arc::new(move |t| table.eval(t)),
        })
    }

    pub fn at(&self, t: f64) -> GeneratorCoeffs {
        (self.f)(t)
    }

    /// Fails on the first non-finite coefficient on the grid.
    pub fn check_finite(&self, grid: &TimeGrid) -> Result<()> {
        for &t in grid.values() {
            if !self.at(t).is_finite() {
                return Err(Error::gate(
                    "wei_norman",
                    "coefficient evaluation",
                    format!("non-finite coefficient at t = {t}"),
                ));
            }
        }
        Ok(())
    }
}

/// Four-point Lagrange interpolation per interval, so the interpolant is a
/// single cubic on each table interval.
struct CoeffTable {
    times: Vec<f64>,
    channels: Vec<[f64; 7]>,
}

impl CoeffTable {
    fn new(times: Vec<f64>, values: Vec<GeneratorCoeffs>) -> Result<Self> {
        if times.len() != values.len() || times.len() < 4 {
            return Err(Error::invalid(
                "coefficient table needs >= 4 aligned samples",
            ));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("coefficient table times must increase"));
        }
        let channels = values
            .iter()
            .map(|c| [c.b11, c.b12, c.b22, c.k1, c.k2, c.k3.re, c.k3.im])
            .collect();
        Ok(Self { times, channels })
    }

    fn eval(&self, t: f64) -> GeneratorCoeffs {
        let n = self.times.len();
        let i = match self.times.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
            Ok(i) => i.min(n - 2),
            Err(0) => 0,
            Err(i) => (i - 1).min(n - 2),
        };
        let start = i.saturating_sub(1).min(n - 4);
        let xs = &self.times[start..start + 4];
        let mut out = [0.0; 7];
        for j in 0..4 {
            let mut l = 1.0;
            for k in 0..4 {
                if k != j {
                    l *= (t - xs[k]) / (xs[j] - xs[k]);
                }
            }
            for c in 0..7 {
                out[c] += l * self.channels[start + j][c];
            }
        }
        GeneratorCoeffs {
            b11: out[0],
            b12: out[1],
            b22: out[2],
            k1: out[3],
            k2: out[4],
            k3: Complex64::new(out[5], out[6]),
        }
    }
}

/// Homogeneous part of the exponent system at one time.
pub fn homogeneous_matrix(c: &GeneratorCoeffs) -> Matrix3<f64> {
    Matrix3::new(
        -4.0 * c.b12,
        0.0,
        -4.0 * c.b11,
        0.0,
        4.0 * c.b12,
        4.0 * c.b22,
        2.0 * c.b22,
        -2.0 * c.b11,
        0.0,
    )
}

/// Right-hand side of the exponent system, `w4` included.
pub fn w_field(c: &GeneratorCoeffs, hbar: f64, w: &[f64], out: &mut [f64]) {
    let m = homogeneous_matrix(c);
    let e = w[3].exp();
    for i in 0..3 {
        out[i] = m[(i, 0)] * w[0] + m[(i, 1)] * w[1] + m[(i, 2)] * w[2];
    }
    out[0] += e * c.k1;
    out[1] += e * c.k2;
    out[2] += e * c.k3.re;
    // 2 hbar i (k3 - k4) = -4 hbar Im k3
    out[3] = -4.0 * hbar * c.k3.im;
}

#[derive(Debug, Clone, PartialEq)]
pub struct WnTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<WeiNormanState>,
}

pub const DEFAULT_RTOL: f64 = 1e-10;

/// Exponent coordinates along the grid, starting from zero.
pub fn integrate_w(coeffs: &MasterEqCoefficients, grid: &TimeGrid) -> Result<WnTrajectory> {
    integrate_w_with(coeffs, grid, DEFAULT_RTOL)
}

pub fn integrate_w_with(
    coeffs: &MasterEqCoefficients,
    grid: &TimeGrid,
    rtol: f64,
) -> Result<WnTrajectory> {
    coeffs.check_finite(grid)?;
    let hbar = coeffs.hbar;
    let tr = rk_integrate(
        |t, y: &[f64], d: &mut [f64]| w_field(&coeffs.at(t), hbar, y, d),
        &[0.0; 4],
        grid,
        rtol,
    )?;
    Ok(WnTrajectory {
        times: tr.times,
        states: tr
            .states
            .iter()
            .map(|s| WeiNormanState::from_slice(s))
            .collect(),
    })
}

fn identity_integrand(c: &GeneratorCoeffs, w: &WeiNormanState) -> f64 {
    w.w4.exp() * (c.k1 * w.w2 + c.k2 * w.w1 - 2.0 * c.k3.re * w.w3)
}

/// Supremum over the grid of the mismatch between `w1 w2 - w3^2` and its
/// integral representation, relative to `max(1, |w1 w2 - w3^2|)`.
///
/// The integral is accumulated with Simpson's rule on each interval, the
/// midpoint state obtained by cubic Hermite interpolation of the trajectory.
pub fn check_determinant_identity(coeffs: &MasterEqCoefficients, traj: &WnTrajectory) -> f64 {
    let hbar = coeffs.hbar;
    let mut integral = 0.0;
    let mut worst = (traj.states[0].det()).abs();
    let mut d0 = [0.0; 4];
    let mut d1 = [0.0; 4];
    for i in 1..traj.times.len() {
        let (ta, tb) = (traj.times[i - 1], traj.times[i]);
        let h = tb - ta;
        let (wa, wb) = (traj.states[i - 1], traj.states[i]);
        let (ca, cb) = (coeffs.at(ta), coeffs.at(tb));
        w_field(&ca, hbar, &wa.as_array(), &mut d0);
        w_field(&cb, hbar, &wb.as_array(), &mut d1);
        let (a, b) = (wa.as_array(), wb.as_array());
        let mut mid = [0.0; 4];
        for k in 0..4 {
            mid[k] = 0.5 * (a[k] + b[k]) + h / 8.0 * (d0[k] - d1[k]);
        }
        let wm = WeiNormanState::from_slice(&mid);
        let cm = coeffs.at(ta + 0.5 * h);
        integral += h / 6.0
            * (identity_integrand(&ca, &wa)
                + 4.0 * identity_integrand(&cm, &wm)
                + identity_integrand(&cb, &wb));
        let lhs = wb.det();
        worst = worst.max((lhs - integral).abs() / lhs.abs().max(1.0));
    }
    worst
}

/// Principal matrix of the homogeneous exponent system from `s` to `t`.
pub fn principal_matrix(coeffs: &MasterEqCoefficients, t: f64, s: f64) -> Result<Matrix3<f64>> {
    if s > t {
        return Err(Error::invalid(format!(
            "principal matrix needs s <= t (s = {s}, t = {t})"
        )));
    }
    if s == t {
        return Ok(Matrix3::identity());
    }
    let grid = TimeGrid::uniform(s, t, 1)?;
    let mut y0 = [0.0; 9];
    for k in 0..3 {
        y0[4 * k] = 1.0;
    }
    let tr = rk_integrate(
        |tt, y: &[f64], d: &mut [f64]| {
            let m = homogeneous_matrix(&coeffs.at(tt));
            let p = Matrix3::from_column_slice(y);
            d.copy_from_slice((m * p).as_slice());
        },
        &y0,
        &grid,
        1e-12,
    )?;
    Ok(Matrix3::from_column_slice(tr.last()))
}

/// `(w1, w2, w3)` from the variation-of-constants integral of the principal
/// matrix, with `w4` integrated separately.
pub fn variation_of_constants(
    coeffs: &MasterEqCoefficients,
    grid: &TimeGrid,
    substeps: usize,
) -> Result<WnTrajectory> {
    let hbar = coeffs.hbar;
    let ts = grid.values();
    // fine uniform sub-grid per interval for Simpson's rule
    let sub = substeps.max(1) * 2;
    let mut fine = Vec::with_capacity((ts.len() - 1) * sub + 1);
    for w in ts.windows(2) {
        for j in 0..sub {
            fine.push(w[0] + (w[1] - w[0]) * j as f64 / sub as f64);
        }
    }
    fine.push(*ts.last().unwrap());
    let fgrid = TimeGrid::from_values(fine.clone())?;
    // Pi(t, 0) and w4 on the fine grid
    let mut y0 = [0.0; 10];
    for k in 0..3 {
        y0[4 * k] = 1.0;
    }
    let tr = rk_integrate(
        |tt, y: &[f64], d: &mut [f64]| {
            let c = coeffs.at(tt);
            let m = homogeneous_matrix(&c);
            let p = Matrix3::from_column_slice(&y[..9]);
            d[..9].copy_from_slice((m * p).as_slice());
            d[9] = -4.0 * hbar * c.k3.im;
        },
        &y0,
        &fgrid,
        1e-12,
    )?;
    let drive = |i: usize| -> nalgebra::Vector3<f64> {
        let c = coeffs.at(fine[i]);
        let e = tr.states[i][9].exp();
        let pinv = Matrix3::from_column_slice(&tr.states[i][..9])
            .try_inverse()
            .unwrap_or_else(Matrix3::zeros);
        pinv * nalgebra::Vector3::new(e * c.k1, e * c.k2, e * c.k3.re)
    };
    let mut acc = nalgebra::Vector3::zeros();
    let mut states = vec![WeiNormanState::ZERO];
    let mut prev = drive(0);
    let mut idx = 0;
    for _ in 1..ts.len() {
        for _ in 0..sub / 2 {
            let h = fine[idx + 2] - fine[idx];
            let mid = drive(idx + 1);
            let end = drive(idx + 2);
            acc += (prev + mid * 4.0 + end) * (h / 6.0);
            prev = end;
            idx += 2;
        }
        let p = Matrix3::from_column_slice(&tr.states[idx][..9]);
        let w = p * acc;
        states.push(WeiNormanState {
            w1: w[0],
            w2: w[1],
            w3: w[2],
            w4: tr.states[idx][9],
        });
    }
    Ok(WnTrajectory {
        times: ts.to_vec(),
        states,
    })
}

/// Merge the ordered exponentials into one quadratic form.
///
/// `a = phi w1`, `b = phi w2`, `c = phi (w3 + i (e^{w4} - 1) / (4 hbar))`
/// with `phi = w4 / (e^{w4} - 1)`.
pub fn combined_exponent(w: &WeiNormanState, hbar: f64) -> ExponentQuadraticForm {
    let phi = inv_expm1_ratio(w.w4);
    // phi (e^{w4} - 1) = w4
    ExponentQuadraticForm {
        a: phi * w.w1,
        b: phi * w.w2,
        c: Complex64::new(phi * w.w3, w.w4 / (4.0 * hbar)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> TimeGrid {
        TimeGrid::uniform(0.0, 2.0, 40).unwrap()
    }

    #[test]
    fn unitary_gives_zero() {
        let c = GeneratorCoeffs {
            b11: 0.7,
            b12: 0.1,
            b22: 0.5,
            ..GeneratorCoeffs::zero()
        };
        let tr = integrate_w(&MasterEqCoefficients::constant(c, 1.0), &grid()).unwrap();
        assert!(tr.states.iter().all(|s| *s == WeiNormanState::ZERO));
    }

    #[test]
    fn decoupled_constant_k1() {
        let c = GeneratorCoeffs {
            k1: 0.3,
            ..GeneratorCoeffs::zero()
        };
        let coeffs = MasterEqCoefficients::constant(c, 1.0);
        let tr = integrate_w(&coeffs, &grid()).unwrap();
        for (t, s) in tr.times.iter().zip(&tr.states) {
            assert!((s.w1 - 0.3 * t).abs() < 1e-13);
            assert_eq!((s.w2, s.w3, s.w4), (0.0, 0.0, 0.0));
        }
        assert_eq!(check_determinant_identity(&coeffs, &tr), 0.0);
    }

    #[test]
    fn combined_exponent_limits() {
        assert_eq!(
            combined_exponent(&WeiNormanState::ZERO, 1.0),
            ExponentQuadraticForm::zero()
        );
        let f = combined_exponent(
            &WeiNormanState {
                w1: 2.0,
                w2: 3.0,
                w3: 1.0,
                w4: 0.0,
            },
            1.0,
        );
        assert_eq!((f.a, f.b, f.c.re, f.c.im), (2.0, 3.0, 1.0, 0.0));
        let ln2 = 2f64.ln();
        let f = combined_exponent(
            &WeiNormanState {
                w1: 1.0,
                w4: ln2,
                ..WeiNormanState::ZERO
            },
            1.0,
        );
        assert!((f.a - ln2).abs() < 1e-15);
        assert!((f.c.im - ln2 / 4.0).abs() < 1e-15);
    }

    #[test]
    fn combined_exponent_continuous_at_zero() {
        for k in 0..=10 {
            let w4 = 10f64.powf(-12.0 + k as f64);
            let w = WeiNormanState {
                w1: 1.3,
                w2: 0.4,
                w3: -0.2,
                w4,
            };
            let phi = w4 / w4.exp_m1();
            let f = combined_exponent(&w, 1.0);
            assert!((f.a - phi * 1.3).abs() < 1e-12);
        }
    }

    #[test]
    fn table_reproduces_cubic() {
        let times: Vec<f64> = (0..12)
            .map(|i| 0.1 * i as f64 * (1.0 + 0.05 * i as f64))
            .collect();
        let vals = times
            .iter()
            .map(|&t| GeneratorCoeffs {
                b11: t * t * t - t,
                ..GeneratorCoeffs::zero()
            })
            .collect();
        let c = MasterEqCoefficients::from_table(1.0, times, vals).unwrap();
        for k in 0..50 {
            let t = 0.03 * k as f64;
            assert!((c.at(t).b11 - (t * t * t - t)).abs() < 1e-12);
        }
    }

    #[test]
    fn principal_matrix_identity_at_equal_times() {
        let c = MasterEqCoefficients::constant(GeneratorCoeffs::zero(), 1.0);
        assert_eq!(principal_matrix(&c, 0.4, 0.4).unwrap(), Matrix3::identity());
        assert!(principal_matrix(&c, 0.3, 0.4).is_err());
    }
}
