//! Closed-form interaction-picture solution of the standard quantum Brownian
//! equation and its exact positivity classification.
//!
//! With `u = Gamma t`, the propagator factors into a damping exponent in a
//! generalized lowering operator `B(t)` followed by a `{p,.,p}` exponent
//! with coefficient `delta(t)`. The sign of
//! `s(u) = sin^2(eta_tilde u) - r^2 sinh^2 u` decides positivity.

use num_complex::Complex64;
use qbrown_core::{Error, ExponentQuadraticForm, GaussianState, OscillatorParams, Result};

pub mod scan;

pub use scan::{criterion_roots, first_marginal_time, long_time_violation_scan, ViolationWitness};

/// Everything the closed form provides at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QbeSolutionAt {
    pub t: f64,
    pub u: f64,
    pub delta: f64,
    pub l1: f64,
    pub l3: f64,
    pub b_q: Complex64,
    pub b_p: Complex64,
    pub s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    /// Two-generator Lindblad exponent exists.
    ExcessFluctuations,
    /// Single damping generator; some initial states evolve to pure states.
    Marginal,
    /// Some initial state is driven to a non-positive operator.
    NonPositive,
}

impl Classification {
    pub fn as_str(&self) -> &'static str {
        match self {
            Classification::ExcessFluctuations => "excess-fluctuations",
            Classification::Marginal => "marginal",
            Classification::NonPositive => "non-positive",
        }
    }
}

pub const MARGINAL_TOL: f64 = 1e-10;

/// `s(u) = sin^2(eta_tilde u) - r^2 sinh^2 u`.
pub fn criterion(params: &OscillatorParams, u: f64) -> Result<f64> {
    params.validate()?;
    if u < 0.0 {
        return Err(Error::invalid(format!("u = {u} must be non-negative")));
    }
    Ok(criterion_raw(params.eta_tilde(), params.r(), u))
}

/// The criterion from bare `(eta_tilde, r)`.
pub fn criterion_raw(eta_tilde: f64, r: f64, u: f64) -> f64 {
    let a = (eta_tilde * u).sin();
    let b = r * u.sinh();
    (a - b) * (a + b)
}

pub fn classify(s: f64) -> Classification {
    if s.abs() < MARGINAL_TOL {
        Classification::Marginal
    } else if s < 0.0 {
        Classification::ExcessFluctuations
    } else {
        Classification::NonPositive
    }
}

pub fn solve_at(params: &OscillatorParams, t: f64) -> Result<QbeSolutionAt> {
    params.validate()?;
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::invalid(format!(
            "t = {t} must be finite and non-negative"
        )));
    }
    let OscillatorParams {
        m,
        omega,
        gamma,
        kt,
        hbar,
        ..
    } = *params;
    let et = params.eta_tilde();
    let r = params.r();
    let u = gamma * t;
    let s = criterion_raw(et, r, u);
    let sin_u = (et * u).sin();
    // 1 - cos(2 et u) = 2 sin^2(et u)
    let one_minus_cos = 2.0 * sin_u * sin_u;
    let bracket = -(-2.0 * u).exp_m1() + one_minus_cos / (et * et) + (2.0 * et * u).sin() / et;
    let growth = (2.0 * u).exp();
    let l1 = m * kt * growth / (2.0 * hbar * hbar) * bracket;
    let l3 = kt * growth / (2.0 * hbar * hbar * gamma * et * et) * one_minus_cos;
    let (b_q, b_p, delta) = if u == 0.0 {
        let bq = (2.0 * m * kt).sqrt() / hbar;
        (
            Complex64::new(bq, 0.0),
            Complex64::new(0.0, 1.0 / (2.0 * hbar * bq)),
            0.0,
        )
    } else {
        let em1 = (2.0 * u).exp_m1();
        // 2 l1 / (e^{2u} - 1)
        let ratio = m * kt * growth * bracket / (hbar * hbar * em1);
        let bq = ratio.sqrt();
        let bp = Complex64::new(2.0 * l3 / em1, 1.0 / (2.0 * hbar)) / bq;
        let pref = kt / (et * hbar * hbar * omega);
        (Complex64::new(bq, 0.0), bp, pref * pref * s / l1)
    };
    Ok(QbeSolutionAt {
        t,
        u,
        delta,
        l1,
        l3,
        b_q,
        b_p,
        s,
    })
}

impl QbeSolutionAt {
    /// The damping exponent `-u {B^dagger,.,B^dagger}` as a quadratic form.
    pub fn damping_form(&self) -> ExponentQuadraticForm {
        ExponentQuadraticForm {
            a: self.u * self.b_q.norm_sqr(),
            b: self.u * self.b_p.norm_sqr(),
            c: -self.u * self.b_q * self.b_p.conj(),
        }
    }

    /// The trailing exponent `delta {p,.,p}` as a quadratic form.
    pub fn delta_form(&self) -> ExponentQuadraticForm {
        ExponentQuadraticForm {
            a: 0.0,
            b: -self.delta,
            c: Complex64::new(0.0, 0.0),
        }
    }

    pub fn commutator_defect(&self, hbar: f64) -> f64 {
        ((self.b_q * self.b_p.conj()).im + 0.5 / hbar).abs()
    }
}

/// Interaction-picture Gaussian state at time `t`.
pub fn propagate_gaussian(
    params: &OscillatorParams,
    t: f64,
    rho0: &GaussianState,
) -> Result<GaussianState> {
    if !rho0.is_allowable(params.hbar) {
        return Err(Error::invalid(format!(
            "initial state violates the uncertainty relation: det = {}",
            rho0.det()
        )));
    }
    let sol = solve_at(params, t)?;
    let g1 = sol.damping_form().map_gaussian(params.hbar, rho0);
    Ok(sol.delta_form().map_gaussian(params.hbar, &g1))
}

/// Eigenstate of `B(t)` with eigenvalue `beta`.
pub fn two_photon_coherent_state(
    sol: &QbeSolutionAt,
    beta: Complex64,
    hbar: f64,
) -> Result<GaussianState> {
    GaussianState::lowering_eigenstate(sol.b_q, sol.b_p, beta, hbar)
}

/// Combined single exponent of the two factors, recovered from the Gaussian
/// moment map it induces.
///
/// The affine map on covariances `sigma -> f sigma + n` determines the form
/// uniquely: `Im c = -ln(f) / (4 hbar)` and the noise term fixes `a`, `b`,
/// `Re c` through the noise kernel.
pub fn combined_form(params: &OscillatorParams, t: f64) -> Result<ExponentQuadraticForm> {
    let h = params.hbar;
    let zero = GaussianState::centered(0.0, 0.0, 0.0);
    let sol = solve_at(params, t)?;
    let n = sol
        .delta_form()
        .map_gaussian(h, &sol.damping_form().map_gaussian(h, &zero));
    let unit = GaussianState::centered(1.0, 0.0, 0.0);
    let f = sol
        .delta_form()
        .map_gaussian(h, &sol.damping_form().map_gaussian(h, &unit))
        .cov_qq
        - n.cov_qq;
    let im_c = -f.ln() / (4.0 * h);
    let probe = ExponentQuadraticForm {
        a: 0.0,
        b: 0.0,
        c: Complex64::new(0.0, im_c),
    };
    let k = probe.noise_kernel(h);
    Ok(ExponentQuadraticForm {
        a: n.cov_pp / k,
        b: n.cov_qq / k,
        c: Complex64::new(n.cov_qp / k, im_c),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> OscillatorParams {
        OscillatorParams::from_eta_r(3.0, 1.5, 0.4).unwrap()
    }

    #[test]
    fn origin_is_identity() {
        let p = params();
        let sol = solve_at(&p, 0.0).unwrap();
        assert_eq!(sol.delta, 0.0);
        assert_eq!(sol.s, 0.0);
        let g = GaussianState {
            mean_q: 0.3,
            mean_p: -0.1,
            cov_qq: 0.8,
            cov_pp: 0.9,
            cov_qp: 0.1,
        };
        let out = propagate_gaussian(&p, 0.0, &g).unwrap();
        assert!((out.cov_qq - g.cov_qq).abs() < 1e-15 && (out.mean_q - g.mean_q).abs() < 1e-15);
    }

    #[test]
    fn lowering_operator_normalized() {
        let p = params();
        for i in 0..50 {
            let sol = solve_at(&p, 0.05 * i as f64).unwrap();
            assert!(sol.commutator_defect(p.hbar) < 1e-10);
            if i > 0 {
                assert!(sol.l1 > 0.0);
                assert_eq!(sol.delta.signum(), sol.s.signum());
            }
        }
    }

    #[test]
    fn infinite_temperature_is_positive() {
        // r = eta_tilde
        for i in 1..200 {
            let u = 0.03 * i as f64;
            assert!(criterion_raw(4.0, 4.0, u) <= 0.0);
        }
    }

    #[test]
    fn zero_r_has_zeros_at_multiples() {
        let et = 2.5;
        for k in 1..5 {
            let u = k as f64 * std::f64::consts::PI / et;
            assert!(criterion_raw(et, 0.0, u).abs() < 1e-28);
        }
        assert_eq!(classify(0.0), Classification::Marginal);
    }

    #[test]
    fn combined_form_inverts_moment_map() {
        let p = params();
        let form = combined_form(&p, 1.3 / p.gamma).unwrap();
        let g = GaussianState::centered(0.7, 1.4, -0.2);
        let direct = propagate_gaussian(&p, 1.3 / p.gamma, &g).unwrap();
        let via = form.map_gaussian(p.hbar, &g);
        assert!((direct.cov_qq - via.cov_qq).abs() < 1e-10);
        assert!((direct.cov_pp - via.cov_pp).abs() < 1e-10);
        assert!((direct.cov_qp - via.cov_qp).abs() < 1e-10);
    }
}
