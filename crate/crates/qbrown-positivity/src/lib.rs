//! Sufficient conditions for the Gaussian part of the propagator to map
//! allowable states to positive ones.
//!
//! The exponent coordinates are rotated into Minkowski-like variables
//! `u = (hbar/2)(w1/eta + eta w2, w1/eta - eta w2, 2 w3, (e^{w4} - 1)/(2 hbar))`
//! in which the determinant condition reads `u.u >= 0`. Symplectic changes of
//! variables act on `u` as Lorentz transformations, so `u.u`, `u4` and `u.h`
//! are invariant.

use std::io::Write;

use qbrown_core::{rk_integrate, Error, GeneratorCoeffs, Result, SymplecticMap2, TimeGrid};
use qbrown_wn::{MasterEqCoefficients, WeiNormanState, DEFAULT_RTOL};

/// Values with magnitude below this are reported as marginal.
pub const MARGINAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UVector {
    pub u1: f64,
    pub u2: f64,
    pub u3: f64,
    pub u4: f64,
    pub eta: f64,
}

impl UVector {
    fn components(&self) -> [f64; 4] {
        [self.u1, self.u2, self.u3, self.u4]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HVector {
    pub h1: f64,
    pub h2: f64,
    pub h3: f64,
    pub h4: f64,
}

impl HVector {
    /// `h` from the master-equation coefficients. `h4 = i(k3 - k4)/hbar` is real.
    pub fn from_coeffs(c: &GeneratorCoeffs, eta: f64, hbar: f64) -> Self {
        Self {
            h1: (c.k1 / eta + eta * c.k2) / hbar,
            h2: (c.k1 / eta - eta * c.k2) / hbar,
            h3: 2.0 * c.k3.re / hbar,
            h4: -2.0 * c.k3.im / hbar,
        }
    }

    fn components(&self) -> [f64; 4] {
        [self.h1, self.h2, self.h3, self.h4]
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::invalid(format!("eta = {eta} must be positive")));
    }
    Ok(())
}

pub fn w_to_u(w: &WeiNormanState, eta: f64, hbar: f64) -> Result<UVector> {
    check_eta(eta)?;
    let h = 0.5 * hbar;
    Ok(UVector {
        u1: h * (w.w1 / eta + eta * w.w2),
        u2: h * (w.w1 / eta - eta * w.w2),
        u3: hbar * w.w3,
        u4: 0.25 * w.w4.exp_m1(),
        eta,
    })
}

/// `u1^2 - u2^2 - u3^2 - u4^2`.
pub fn minkowski_norm(u: &UVector) -> f64 {
    u.u1 * u.u1 - u.u2 * u.u2 - u.u3 * u.u3 - u.u4 * u.u4
}

/// `u1 h1 - u2 h2 - u3 h3 - u4 h4`.
pub fn minkowski_dot(u: &UVector, h: &HVector) -> f64 {
    let (a, b) = (u.components(), h.components());
    a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3]
}

/// `w1 >= 0`, `w2 >= 0` and `w1 w2 - w3^2 - ((e^{w4} - 1)/(4 hbar))^2 >= 0`,
/// each with a `1e-12` allowance.
pub fn gaussian_positivity_condition(w: &WeiNormanState, hbar: f64) -> bool {
    let tol = 1e-12;
    let d = w.w4.exp_m1() / (4.0 * hbar);
    w.w1 >= -tol && w.w2 >= -tol && w.det() - d * d >= -tol
}

/// `w1 k2 + w2 k1 - w3 (k3 + k4) + (i/4hbar)(e^{w4} - 1)(k4 - k3)`, the
/// pointwise integrand expressed in the original variables.
pub fn pointwise_integrand_w(w: &WeiNormanState, c: &GeneratorCoeffs, hbar: f64) -> f64 {
    w.w1 * c.k2 + w.w2 * c.k1 - 2.0 * w.w3 * c.k3.re + w.w4.exp_m1() * c.k3.im / (2.0 * hbar)
}

#[derive(Debug, Clone, PartialEq)]
pub struct UTrajectory {
    pub times: Vec<f64>,
    pub u: Vec<UVector>,
    pub h: Vec<HVector>,
    pub w4: Vec<f64>,
}

fn u_field(c: &GeneratorCoeffs, eta: f64, hbar: f64, y: &[f64], out: &mut [f64]) {
    let (b11, b12, b22) = (c.b11, c.b12, c.b22);
    let p = -b11 / eta + eta * b22;
    let q = -b11 / eta - eta * b22;
    let e = 0.5 * hbar * y[3].exp();
    out[0] = 2.0 * (-2.0 * b12 * y[1] + p * y[2]) + e * (c.k1 / eta + eta * c.k2);
    out[1] = 2.0 * (-2.0 * b12 * y[0] + q * y[2]) + e * (c.k1 / eta - eta * c.k2);
    out[2] = 2.0 * (p * y[0] - q * y[1]) + e * 2.0 * c.k3.re;
    out[3] = -4.0 * hbar * c.k3.im;
}

/// Integrates `u1, u2, u3` together with `w4`, from zero at the first grid point.
pub fn integrate_u(
    coeffs: &MasterEqCoefficients,
    eta: f64,
    grid: &TimeGrid,
) -> Result<UTrajectory> {
    check_eta(eta)?;
    coeffs.check_finite(grid)?;
    let hbar = coeffs.hbar;
    let tr = rk_integrate(
        |t, y: &[f64], d: &mut [f64]| u_field(&coeffs.at(t), eta, hbar, y, d),
        &[0.0; 4],
        grid,
        DEFAULT_RTOL,
    )?;
    let mut out = UTrajectory {
        times: tr.times.clone(),
        u: Vec::with_capacity(tr.len()),
        h: Vec::with_capacity(tr.len()),
        w4: Vec::with_capacity(tr.len()),
    };
    for (t, s) in tr.times.iter().zip(&tr.states) {
        out.u.push(UVector {
            u1: s[0],
            u2: s[1],
            u3: s[2],
            u4: 0.25 * s[3].exp_m1(),
            eta,
        });
        out.h.push(HVector::from_coeffs(&coeffs.at(*t), eta, hbar));
        out.w4.push(s[3]);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Pass,
    Marginal,
    Fail,
}

impl Verdict {
    pub fn of(value: f64) -> Self {
        if value.abs() < MARGINAL_TOL {
            Verdict::Marginal
        } else if value > 0.0 {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    /// Verdict of a conjunction.
    pub fn and(self, other: Self) -> Self {
        use Verdict::*;
        match (self, other) {
            (Fail, _) | (_, Fail) => Fail,
            (Marginal, _) | (_, Marginal) => Marginal,
            _ => Pass,
        }
    }

    pub fn holds(self) -> bool {
        self != Verdict::Fail
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Marginal => "marginal",
            Verdict::Fail => "fail",
        }
    }
}

/// One row of the sufficient-condition report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckRow {
    pub t: f64,
    pub u: UVector,
    pub norm: f64,
    /// `u.h`
    pub dot: f64,
    /// `int_0^t u.h e^{w4}`
    pub integral: f64,
    /// `u1 >= |u2|`
    pub cone: Verdict,
    /// `u.u >= 0` with the cone condition.
    pub cond_norm: Verdict,
    /// Integrated condition with the cone condition.
    pub cond_integral: Verdict,
    /// Pointwise `u.h >= 0` with the cone condition.
    pub cond_pointwise: Verdict,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub rows: Vec<CheckRow>,
}

impl CheckReport {
    pub fn all_hold(&self) -> bool {
        self.rows
            .iter()
            .all(|r| r.cond_norm.holds() && r.cond_integral.holds() && r.cond_pointwise.holds())
    }

    /// Whether the pointwise condition on `[0, t]` implies the integrated one
    /// at `t`, and the integrated one the norm condition, at every row.
    pub fn implications_hold(&self) -> bool {
        let mut pointwise_so_far = true;
        self.rows.iter().all(|r| {
            pointwise_so_far &= r.cond_pointwise.holds();
            let c_to_b = !pointwise_so_far || r.cond_integral.holds();
            let b_to_a = !r.cond_integral.holds() || r.cond_norm.holds();
            c_to_b && b_to_a
        })
    }
}

/// Evaluates the three sufficient conditions along aligned trajectories.
///
/// The integral uses the trapezoidal rule with weight `exp(2 hbar^2 int h4)`,
/// which equals `e^{w4}`.
pub fn sufficient_checks(
    times: &[f64],
    u: &[UVector],
    h: &[HVector],
    w4: &[f64],
) -> Result<CheckReport> {
    if u.len() != times.len() || h.len() != times.len() || w4.len() != times.len() {
        return Err(Error::invalid("trajectories are not aligned"));
    }
    let mut rows = Vec::with_capacity(times.len());
    let mut integral = 0.0;
    let mut prev: Option<(f64, f64)> = None;
    for i in 0..times.len() {
        let dot = minkowski_dot(&u[i], &h[i]);
        let g = dot * w4[i].exp();
        if let Some((t0, g0)) = prev {
            integral += 0.5 * (times[i] - t0) * (g0 + g);
        }
        prev = Some((times[i], g));
        let norm = minkowski_norm(&u[i]);
        let cone = Verdict::of(u[i].u1 - u[i].u2.abs());
        rows.push(CheckRow {
            t: times[i],
            u: u[i],
            norm,
            dot,
            integral,
            cone,
            cond_norm: cone.and(Verdict::of(norm)),
            cond_integral: cone.and(Verdict::of(integral)),
            cond_pointwise: cone.and(Verdict::of(dot)),
        });
    }
    Ok(CheckReport { rows })
}

impl UTrajectory {
    pub fn checks(&self) -> Result<CheckReport> {
        sufficient_checks(&self.times, &self.u, &self.h, &self.w4)
    }
}

/// Exponent coordinates after conjugating the propagator by the metaplectic
/// operator of `S`; `w4` is unchanged.
pub fn metaplectic_transform_w(w: &WeiNormanState, s: &SymplecticMap2) -> Result<WeiNormanState> {
    if (s.det() - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!(
            "map is not symplectic: det = {}",
            s.det()
        )));
    }
    let (a, b, c, d) = (s.a, s.b, s.c, s.d);
    Ok(WeiNormanState {
        w1: a * a * w.w1 + c * c * w.w2 - 2.0 * a * c * w.w3,
        w2: b * b * w.w1 + d * d * w.w2 - 2.0 * b * d * w.w3,
        w3: -a * b * w.w1 - c * d * w.w2 + (a * d + b * c) * w.w3,
        w4: w.w4,
    })
}

/// CSV with columns `t, u1..u4, norm, cond_gaussian, cond_norm, cond_integral, cond_pointwise`.
pub fn write_report_csv<W: Write>(
    out: &mut W,
    report: &CheckReport,
    w: &[WeiNormanState],
    hbar: f64,
) -> std::io::Result<()> {
    writeln!(
        out,
        "t,u1,u2,u3,u4,norm,cond_gaussian,cond_norm,cond_integral,cond_pointwise"
    )?;
    for (r, w) in report.rows.iter().zip(w) {
        let g = if gaussian_positivity_condition(w, hbar) {
            "pass"
        } else {
            "fail"
        };
        writeln!(
            out,
            "{:e},{:e},{:e},{:e},{:e},{:e},{},{},{},{}",
            r.t,
            r.u.u1,
            r.u.u2,
            r.u.u3,
            r.u.u4,
            r.norm,
            g,
            r.cond_norm.as_str(),
            r.cond_integral.as_str(),
            r.cond_pointwise.as_str()
        )?;
    }
    Ok(())
}
