//! Noise integrals from the pole expansion of the bath correlation function.
//!
//! With `C(tau) = (hbar/2pi) int dw f(w)/w coth(hbar w/2kT) e^{i w tau}`, the
//! integrals are `X = int int A(s) A(s') C(|s - s'|)`, and similarly `Y` with
//! `A'`. Closing the contour gives `C(tau) = sum_poles w_nu e^{-nu |tau|}` over
//! the cutoff pole `nu = alpha` and the Matsubara frequencies
//! `nu_n = 2 pi n kT / hbar`. Every term then integrates in closed form
//! against the exponential sum for `A`.

use num_complex::Complex64;
use qbrown_core::{composite_kronrod, Error, Result};

const TAIL_PANELS: usize = 24;

use crate::HrModel;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseIntegrals {
    pub x: f64,
    pub y: f64,
    pub x_dot: f64,
    pub x_ddot: f64,
    pub y_dot: f64,
}

/// `(e^{z t} - 1) / z`.
fn e1(z: Complex64, t: f64) -> Complex64 {
    let zt = z * t;
    if zt.norm() < 1e-4 {
        t * (1.0 + zt / 2.0 + zt * zt / 6.0 + zt * zt * zt / 24.0)
    } else {
        ((zt).exp() - 1.0) / z
    }
}

/// Per-pole contributions `[X, Y, G_A, G_A']` for unit weight.
fn pole_terms(model: &HrModel, nu: f64, t: f64) -> [f64; 4] {
    let lam = &model.lambdas;
    let c = &model.coeffs;
    let d: [Complex64; 3] = [c[0] * lam[0], c[1] * lam[1], c[2] * lam[2]];
    let decay = (-nu * t).exp();
    // (e^{lambda t} - e^{-nu t}) / (lambda + nu)
    let kernel = |l: Complex64| -> Complex64 {
        let z = l + nu;
        if (z * t).norm() < 1e-4 {
            decay * e1(z, t)
        } else {
            ((l * t).exp() - decay) / z
        }
    };
    let mut out = [0.0; 4];
    // int_0^s h(s') e^{-nu (s - s')} ds' = sum_j h_j e^{-nu s} E(lambda_j + nu, s)
    let mut ga = Complex64::new(0.0, 0.0);
    let mut gd = Complex64::new(0.0, 0.0);
    for j in 0..3 {
        let k = kernel(lam[j]);
        ga += c[j] * k;
        gd += d[j] * k;
    }
    out[2] = ga.re;
    out[3] = gd.re;
    let mut xs = Complex64::new(0.0, 0.0);
    let mut ys = Complex64::new(0.0, 0.0);
    for i in 0..3 {
        for j in 0..3 {
            let den = lam[j] + nu;
            let v = (e1(lam[i] + lam[j], t) - e1(lam[i] - nu, t)) / den;
            xs += c[i] * c[j] * v;
            ys += d[i] * d[j] * v;
        }
    }
    out[0] = 2.0 * xs.re;
    out[1] = 2.0 * ys.re;
    out
}

struct Poles {
    nu1: f64,
    /// weight of the cutoff pole
    w_alpha: f64,
    /// `-2 kappa alpha^2 kT`
    w_scale: f64,
    alpha: f64,
}

impl Poles {
    fn new(model: &HrModel) -> Result<Self> {
        let p = &model.params;
        let nu1 = 2.0 * std::f64::consts::PI * p.kt / p.hbar;
        let n_near = (p.alpha / nu1).round();
        if n_near >= 1.0 && (p.alpha - n_near * nu1).abs() < 1e-9 * p.alpha {
            return Err(Error::invalid(format!(
                "cutoff alpha = {} coincides with Matsubara frequency n = {n_near}",
                p.alpha
            )));
        }
        let x = p.hbar * p.alpha / (2.0 * p.kt);
        Ok(Self {
            nu1,
            w_alpha: 0.5 * p.hbar * p.kappa * p.alpha * p.alpha / x.tan(),
            w_scale: -2.0 * p.kappa * p.alpha * p.alpha * p.kt,
            alpha: p.alpha,
        })
    }

    fn weight(&self, n: f64) -> (f64, f64) {
        let nu = self.nu1 * n;
        (self.w_scale * nu / (self.alpha * self.alpha - nu * nu), nu)
    }
}

/// `X, Y, X', X'', Y'` at `t` for the solved model.
pub fn noise_integrals(model: &HrModel, t: f64) -> Result<NoiseIntegrals> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::invalid(format!(
            "t = {t} must be finite and non-negative"
        )));
    }
    if t == 0.0 {
        return Ok(NoiseIntegrals {
            x: 0.0,
            y: 0.0,
            x_dot: 0.0,
            x_ddot: 0.0,
            y_dot: 0.0,
        });
    }
    let poles = Poles::new(model)?;
    let mut sum = pole_terms(model, poles.alpha, t).map(|v| v * poles.w_alpha);
    let term = |n: f64| -> [f64; 4] {
        let (w, nu) = poles.weight(n);
        pole_terms(model, nu, t).map(|v| v * w)
    };
    // direct sum well past the cutoff pole, then Euler-Maclaurin for the tail
    let m_direct = ((2.0 * poles.alpha / poles.nu1).ceil() as usize + 48).min(100_000);
    for n in 1..=m_direct {
        let v = term(n as f64);
        for k in 0..4 {
            sum[k] += v[k];
        }
    }
    let mf = m_direct as f64;
    let h = 0.25;
    let f0 = term(mf);
    let (fp1, fm1, fp2, fm2) = (
        term(mf + h),
        term(mf - h),
        term(mf + 2.0 * h),
        term(mf - 2.0 * h),
    );
    // x = m / u maps the tail onto (0, 1]; the integrand vanishes smoothly at u = 0
    let tail = composite_kronrod(
        |u: f64| {
            if u <= 0.0 {
                return [0.0; 4];
            }
            term(mf / u).map(|v| v * mf / (u * u))
        },
        0.0,
        1.0,
        TAIL_PANELS,
    );
    for k in 0..4 {
        let d1 = (fp1[k] - fm1[k]) / (2.0 * h);
        let d3 = (fp2[k] - 2.0 * fp1[k] + 2.0 * fm1[k] - fm2[k]) / (2.0 * h * h * h);
        sum[k] += tail[k] - 0.5 * f0[k] - d1 / 12.0 + d3 / 720.0;
    }
    let a = model.response(t);
    let (x, y, g_a, g_ad) = (sum[0], sum[1], sum[2], sum[3]);
    Ok(NoiseIntegrals {
        x,
        y,
        x_dot: 2.0 * a[0] * g_a,
        x_ddot: 2.0 * a[1] * g_a + 2.0 * a[0] * g_ad,
        y_dot: 2.0 * a[1] * g_ad,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{solve_gamma_omega, HrModelParams};

    fn model() -> HrModel {
        solve_gamma_omega(&HrModelParams {
            alpha: 10.0,
            kappa: 0.1,
            omega0: 2.0,
            kt: 5.0,
            m: 1.0,
            hbar: 1.0,
        })
        .unwrap()
    }

    #[test]
    fn zero_at_origin_positive_after() {
        let m = model();
        assert_eq!(noise_integrals(&m, 0.0).unwrap().x, 0.0);
        for i in 1..20 {
            let n = noise_integrals(&m, 0.25 * i as f64).unwrap();
            assert!(n.x > 0.0 && n.y > 0.0);
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let m = model();
        let at = |s| noise_integrals(&m, s).unwrap();
        // Richardson-extrapolated central differences
        let rich = |f: &dyn Fn(&NoiseIntegrals) -> f64, t: f64| {
            let d = |h: f64| (f(&at(t + h)) - f(&at(t - h))) / (2.0 * h);
            (4.0 * d(1e-3) - d(2e-3)) / 3.0
        };
        for t in [0.5, 1.3, 4.0] {
            let c = at(t);
            for (fd, exact) in [
                (rich(&|n| n.x, t), c.x_dot),
                (rich(&|n| n.y, t), c.y_dot),
                (rich(&|n| n.x_dot, t), c.x_ddot),
            ] {
                assert!(
                    (fd - exact).abs() < 1e-8 * exact.abs().max(1.0),
                    "t = {t}: {fd} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn resonant_cutoff_rejected() {
        let mut m = model();
        m.params.alpha = 2.0 * std::f64::consts::PI * m.params.kt;
        assert!(noise_integrals(&m, 1.0).is_err());
    }
}
