//! Exact master equation of an oscillator bilinearly coupled to an Ullersma
//! bath, `f(omega) = (2/pi) kappa alpha^2 omega^2 / (alpha^2 + omega^2)`.
//!
//! The coefficients follow from the response function `A(t)` (a sum of three
//! exponentials) and the noise integrals `X(t)`, `Y(t)`; the propagator has a
//! closed form and a manifestly positive factorization.

use num_complex::Complex64;
use qbrown_core::{Error, Result};

mod bath;
mod coeffs;
mod factor;

pub use bath::{noise_integrals, NoiseIntegrals};
pub use coeffs::{
    closed_form_w, coefficients_at, exact_master_coefficients, hr_coeffs, interaction_form,
    manifest_factors, write_table_csv, HrCoefficientsAt, HrTable,
};
pub use factor::{
    composite_map, m_tilde_map, n_map, positive_factorization, PositiveFactorization,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HrModelParams {
    pub alpha: f64,
    pub kappa: f64,
    pub omega0: f64,
    pub kt: f64,
    pub m: f64,
    pub hbar: f64,
}

impl HrModelParams {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.alpha,
            self.kappa,
            self.omega0,
            self.kt,
            self.m,
            self.hbar,
        ];
        if all.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(Error::invalid(format!(
                "model parameters must be finite and positive: {self:?}"
            )));
        }
        if self.renormalized_omega_sq() < 0.0 {
            return Err(Error::invalid(format!(
                "omega0^2 - alpha kappa = {} < 0: the total Hamiltonian has no minimum",
                self.renormalized_omega_sq()
            )));
        }
        Ok(())
    }

    /// `omega^2 = omega0^2 - alpha kappa`.
    pub fn renormalized_omega_sq(&self) -> f64 {
        self.omega0 * self.omega0 - self.alpha * self.kappa
    }
}

/// Model with the self-consistent damping rate and frequency solved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HrModel {
    pub params: HrModelParams,
    pub gamma: f64,
    pub big_omega: f64,
    /// Renormalized frequency `omega`.
    pub omega: f64,
    /// Exponents of `A(t) = sum_j c_j e^{lambda_j t}`.
    pub lambdas: [Complex64; 3],
    pub coeffs: [Complex64; 3],
}

fn residuals(alpha: f64, kappa: f64, w2: f64, g: f64, o2: f64) -> ([f64; 2], [[f64; 2]; 2]) {
    let d = (alpha - g).powi(2) + o2;
    let h = 0.5 * kappa * alpha * alpha;
    let f1 = g - h / d;
    let f2 = o2 - alpha * w2 / (alpha - 2.0 * g) + g * g;
    let j = [
        [1.0 - h * 2.0 * (alpha - g) / (d * d), h / (d * d)],
        [-2.0 * alpha * w2 / (alpha - 2.0 * g).powi(2) + 2.0 * g, 1.0],
    ];
    ([f1, f2], j)
}

/// Damped Newton on the two defining equations, continued in `kappa` from the
/// decoupled limit.
pub fn solve_gamma_omega(p: &HrModelParams) -> Result<HrModel> {
    p.validate()?;
    let alpha = p.alpha;
    let steps = 32;
    let (mut g, mut o2) = (0.0, p.omega0 * p.omega0);
    for k in 1..=steps {
        let kappa = p.kappa * k as f64 / steps as f64;
        let w2 = p.omega0 * p.omega0 - alpha * kappa;
        let mut converged = false;
        for _ in 0..100 {
            let (f, j) = residuals(alpha, kappa, w2, g, o2);
            let scale = 1.0 + g.abs() + o2.abs();
            if f[0].abs().max(f[1].abs()) < 1e-15 * scale {
                converged = true;
                break;
            }
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            if det == 0.0 || !det.is_finite() {
                break;
            }
            let dg = (f[0] * j[1][1] - f[1] * j[0][1]) / det;
            let do2 = (j[0][0] * f[1] - j[1][0] * f[0]) / det;
            let norm0 = f[0].abs() + f[1].abs();
            let mut lam = 1.0;
            loop {
                let (ng, no2) = (g - lam * dg, o2 - lam * do2);
                let ok = ng < alpha / 2.0 && ng.is_finite() && no2.is_finite();
                if ok {
                    let (nf, _) = residuals(alpha, kappa, w2, ng, no2);
                    if nf[0].abs() + nf[1].abs() < norm0 || lam < 1e-6 {
                        g = ng;
                        o2 = no2;
                        break;
                    }
                }
                lam *= 0.5;
                if lam < 1e-12 {
                    return Err(Error::NonConvergence(
                        "damped Newton line search failed".into(),
                    ));
                }
            }
        }
        if !converged {
            // accept if the residual is at roundoff level
            let (f, _) = residuals(alpha, kappa, w2, g, o2);
            if f[0].abs().max(f[1].abs()) > 1e-12 * (1.0 + g.abs() + o2.abs()) {
                return Err(Error::NonConvergence(format!(
                    "no root on the physical branch at kappa = {kappa}"
                )));
            }
        }
    }
    if !(g > 0.0) || !(o2 > 0.0) {
        return Err(Error::gate(
            "haake_reibold",
            "physical branch",
            format!("root Gamma = {g}, Omega^2 = {o2} is not physical"),
        ));
    }
    if alpha < 3.0 * g {
        return Err(Error::gate(
            "haake_reibold",
            "cutoff bound",
            format!("alpha = {alpha} < 3 Gamma = {}", 3.0 * g),
        ));
    }
    let big_omega = o2.sqrt();
    let den = (alpha - 3.0 * g).powi(2) + o2;
    let kk = ((alpha - 2.0 * g).powi(2) + o2 - g * g) / big_omega;
    let half_k = Complex64::new(0.0, -0.5 * kk);
    let lambdas = [
        Complex64::new(2.0 * g - alpha, 0.0),
        Complex64::new(-g, big_omega),
        Complex64::new(-g, -big_omega),
    ];
    let coeffs = [
        Complex64::new(2.0 * g / den, 0.0),
        (Complex64::new(-g, 0.0) + half_k) / den,
        (Complex64::new(-g, 0.0) - half_k) / den,
    ];
    let model = HrModel {
        params: *p,
        gamma: g,
        big_omega,
        omega: p.renormalized_omega_sq().sqrt(),
        lambdas,
        coeffs,
    };
    let a0 = model.response(0.0);
    let r0 = a0[1] * a0[1] - a0[0] * a0[2];
    if a0[0].abs() > 1e-10 || (r0 - 1.0).abs() > 1e-8 {
        return Err(Error::gate(
            "haake_reibold",
            "response initial data",
            format!("A(0) = {}, R(0)^2 = {r0}", a0[0]),
        ));
    }
    Ok(model)
}

impl HrModel {
    pub fn solve(p: &HrModelParams) -> Result<Self> {
        solve_gamma_omega(p)
    }

    /// `[A, A', A'', A''']` at `t`.
    pub fn response(&self, t: f64) -> [f64; 4] {
        let mut out = [0.0; 4];
        for (c, l) in self.coeffs.iter().zip(&self.lambdas) {
            let mut term = c * (l * t).exp();
            for o in out.iter_mut() {
                *o += term.re;
                term *= l;
            }
        }
        out
    }

    /// `R^2 = A'^2 - A A''`.
    pub fn r_squared(&self, t: f64) -> f64 {
        let a = self.response(t);
        a[1] * a[1] - a[0] * a[2]
    }
}

/// `A` and its first three derivatives on a grid.
pub fn trajectory_a(model: &HrModel, times: &[f64]) -> Vec<[f64; 4]> {
    times.iter().map(|&t| model.response(t)).collect()
}
