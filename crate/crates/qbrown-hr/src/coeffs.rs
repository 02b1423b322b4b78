use std::io::Write;

use num_complex::Complex64;
use qbrown_core::{Error, ExponentQuadraticForm, GeneratorCoeffs, Result, TimeGrid};
use qbrown_wn::{MasterEqCoefficients, WeiNormanState};

use crate::{noise_integrals, HrModel};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HrCoefficientsAt {
    pub t: f64,
    pub a: f64,
    pub a_dot: f64,
    pub a_ddot: f64,
    pub a_tdot: f64,
    pub r: f64,
    pub x: f64,
    pub y: f64,
    pub x_dot: f64,
    pub y_dot: f64,
    pub x_ddot: f64,
    pub f_pq: f64,
    pub f_pp: f64,
    pub d_pp: f64,
    pub d_pq: f64,
}

impl HrCoefficientsAt {
    pub fn r_squared(&self) -> f64 {
        self.r * self.r
    }

    /// Coefficients in the slots of the general quadratic master equation.
    pub fn generator(&self, m: f64, hbar: f64) -> GeneratorCoeffs {
        let h2 = hbar * hbar;
        GeneratorCoeffs {
            b11: -0.5 * m * self.f_pq,
            b12: -0.25 * self.f_pp,
            b22: 0.5 / m,
            k1: m * self.d_pp / h2,
            k2: 0.0,
            k3: Complex64::new(self.d_pq, 0.5 * hbar * self.f_pp) / (2.0 * h2),
        }
    }
}

pub fn coefficients_at(model: &HrModel, t: f64) -> Result<HrCoefficientsAt> {
    let a = model.response(t);
    let r2 = a[1] * a[1] - a[0] * a[2];
    if !(r2 > 0.0) {
        return Err(Error::gate(
            "haake_reibold",
            "response determinant",
            format!("R^2 = {r2} <= 0 at t = {t}"),
        ));
    }
    let n = noise_integrals(model, t)?;
    let f_pq = (a[1] * a[3] - a[2] * a[2]) / r2;
    let f_pp = (a[1] * a[2] - a[0] * a[3]) / r2;
    let d_pp = 0.5 * n.y_dot - 0.5 * f_pq * n.x_dot - f_pp * n.y;
    let d_pq = -n.y + 0.5 * n.x_ddot - 0.5 * f_pp * n.x_dot - f_pq * n.x;
    Ok(HrCoefficientsAt {
        t,
        a: a[0],
        a_dot: a[1],
        a_ddot: a[2],
        a_tdot: a[3],
        r: r2.sqrt(),
        x: n.x,
        y: n.y,
        x_dot: n.x_dot,
        y_dot: n.y_dot,
        x_ddot: n.x_ddot,
        f_pq,
        f_pp,
        d_pp,
        d_pq,
    })
}

/// Tabulated coefficients plus the interpolated master-equation coefficients.
#[derive(Debug, Clone)]
pub struct HrTable {
    pub rows: Vec<HrCoefficientsAt>,
    pub master: MasterEqCoefficients,
}

pub fn hr_coeffs(model: &HrModel, grid: &TimeGrid) -> Result<HrTable> {
    let (m, hbar) = (model.params.m, model.params.hbar);
    let rows = grid
        .values()
        .iter()
        .map(|&t| coefficients_at(model, t))
        .collect::<Result<Vec<_>>>()?;
    let master = MasterEqCoefficients::from_table(
        hbar,
        grid.values().to_vec(),
        rows.iter().map(|r| r.generator(m, hbar)).collect(),
    )?;
    Ok(HrTable { rows, master })
}

/// Coefficients evaluated exactly at every requested time. Slow: each call
/// sums the pole expansion.
pub fn exact_master_coefficients(model: &HrModel) -> MasterEqCoefficients {
    let model = *model;
    let (m, hbar) = (model.params.m, model.params.hbar);
    MasterEqCoefficients::from_fn(hbar, move |t| match coefficients_at(&model, t) {
        Ok(c) => c.generator(m, hbar),
        Err(_) => GeneratorCoeffs {
            b11: f64::NAN,
            ..GeneratorCoeffs::zero()
        },
    })
}

/// `(w1, w2, w3) = (m Y, X/m, X'/2) / (2 hbar^2 R^2)`, `w4 = -ln R^2`.
pub fn closed_form_w(row: &HrCoefficientsAt, m: f64, hbar: f64) -> WeiNormanState {
    let r2 = row.r_squared();
    let s = 1.0 / (2.0 * hbar * hbar * r2);
    WeiNormanState {
        w1: s * m * row.y,
        w2: s * row.x / m,
        w3: s * 0.5 * row.x_dot,
        w4: -r2.ln(),
    }
}

/// `-ln(R^2) / (1 - R^2)`, equal to one at `R = 1`.
fn log_ratio(r2: f64) -> f64 {
    let x = 1.0 - r2;
    if x.abs() < 1e-6 {
        1.0 + x / 2.0 + x * x / 3.0
    } else {
        -r2.ln() / x
    }
}

/// Exponent of the propagator after the reversible factors are moved outside.
pub fn interaction_form(row: &HrCoefficientsAt, m: f64, hbar: f64) -> ExponentQuadraticForm {
    let (a, ad, add) = (row.a, row.a_dot, row.a_ddot);
    let (x, y, xd) = (row.x, row.y, row.x_dot);
    let r2 = row.r_squared();
    let pre = log_ratio(r2) / (2.0 * hbar * hbar * r2);
    let re = a * ad * y + ad * add * x - 0.5 * (ad * ad + a * add) * xd;
    ExponentQuadraticForm {
        a: pre * m * (ad * ad * y + add * add * x - ad * add * xd),
        b: pre * (a * a * y + ad * ad * x - a * ad * xd) / m,
        c: Complex64::new(-pre * re, -r2.ln() / (4.0 * hbar)),
    }
}

/// Coefficients in front of `{B,.,B}` and `{B^dagger,.,B^dagger}` in the
/// manifestly positive product form; both are non-positive.
pub fn manifest_factors(row: &HrCoefficientsAt, hbar: f64) -> (f64, f64) {
    let r2 = row.r_squared();
    let root = (row.x * row.y - 0.25 * row.x_dot * row.x_dot)
        .max(0.0)
        .sqrt();
    let l = (1.0 + (root / hbar + 0.5 * (1.0 - r2)) / r2).ln();
    (-0.5 * r2.ln() - 0.5 * l, -0.5 * l)
}

/// CSV with one row per grid time.
pub fn write_table_csv<W: Write>(
    out: &mut W,
    rows: &[HrCoefficientsAt],
    m: f64,
    hbar: f64,
) -> std::io::Result<()> {
    writeln!(
        out,
        "t,A,A_dot,A_ddot,R,X,Y,X_dot,f_pq,f_pp,d_pp,d_pq,w1,w2,w3,w4"
    )?;
    for r in rows {
        let w = closed_form_w(r, m, hbar);
        writeln!(
            out,
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            r.t,
            r.a,
            r.a_dot,
            r.a_ddot,
            r.r,
            r.x,
            r.y,
            r.x_dot,
            r.f_pq,
            r.f_pp,
            r.d_pp,
            r.d_pq,
            w.w1,
            w.w2,
            w.w3,
            w.w4
        )?;
    }
    Ok(())
}
