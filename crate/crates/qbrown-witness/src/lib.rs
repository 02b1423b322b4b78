//! Moment propagation under a single quadratic exponent, and the
//! construction of an allowable initial state that such an exponent drives
//! to a non-positive operator.
//!
//! The form is `exp[-eta{q,.,q} - xi{p,.,p} + zeta{q,.,p} + zeta*{p,.,q}]`.
//! Here `eta` is the `{q,.,q}` coefficient (`eta_form`), not the free scale of
//! the Minkowski variables.

use num_complex::Complex64;
use qbrown_core::{Error, ExponentQuadraticForm, GaussianState, Result};

const MODULE: &str = "witness";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaForm {
    pub eta_form: f64,
    pub xi: f64,
    pub zeta: Complex64,
}

impl LemmaForm {
    pub fn new(eta_form: f64, xi: f64, zeta: Complex64) -> Self {
        Self { eta_form, xi, zeta }
    }

    pub fn as_quadratic(&self) -> ExponentQuadraticForm {
        ExponentQuadraticForm {
            a: self.eta_form,
            b: self.xi,
            c: self.zeta,
        }
    }

    /// `eta, xi >= 0` and `Re^2 zeta <= eta xi`, with relative slack `1e-12`.
    pub fn check_applicable(&self) -> Result<()> {
        let (e, x, r) = (self.eta_form, self.xi, self.zeta.re);
        let slack = 1e-12 * (e * x).abs().max(r * r);
        if !(e >= 0.0) || !(x >= 0.0) || !(r * r <= e * x + slack) {
            return Err(Error::gate(
                MODULE,
                "lemma applicability",
                format!(
                    "need eta, xi >= 0 and Re^2 zeta <= eta xi (eta = {e}, xi = {x}, zeta = {})",
                    self.zeta
                ),
            ));
        }
        Ok(())
    }

    /// `e^{-4 hbar Im zeta}`.
    pub fn contraction(&self, hbar: f64) -> f64 {
        self.as_quadratic().contraction(hbar)
    }

    /// `hbar (1 - e^{-4 hbar Im zeta}) / (2 Im zeta)`, finite as `Im zeta -> 0`.
    pub fn kernel(&self, hbar: f64) -> f64 {
        self.as_quadratic().noise_kernel(hbar)
    }
}

/// Raw moments `(<q^2>, <p^2>, <qp + pq>)` after the form acts on a state
/// with raw moments `sigma`.
pub fn lemma_moments(
    form: &LemmaForm,
    sigma: (f64, f64, f64),
    hbar: f64,
) -> Result<(f64, f64, f64)> {
    form.check_applicable()?;
    Ok(form.as_quadratic().map_second_moments(hbar, sigma))
}

/// `hbar Im zeta + lambda2 Re zeta`.
fn shift(form: &LemmaForm, lambda2: f64, hbar: f64) -> f64 {
    hbar * form.zeta.im + lambda2 * form.zeta.re
}

/// `(hbar Im zeta + lambda2 Re zeta)^2 - eta xi (hbar^2 + lambda2^2)`.
pub fn discriminant_dp(form: &LemmaForm, lambda2: f64, hbar: f64) -> f64 {
    let y = shift(form, lambda2, hbar);
    y * y - form.eta_form * form.xi * (hbar * hbar + lambda2 * lambda2)
}

/// `Im zeta > 0`, `eta > 0` and `0 <= eta xi - Re^2 zeta < Im^2 zeta`.
pub fn check_hypotheses(form: &LemmaForm) -> Result<()> {
    let (e, x, z) = (form.eta_form, form.xi, form.zeta);
    let gap = e * x - z.re * z.re;
    let slack = 1e-12 * (e * x).abs().max(z.re * z.re);
    if !(z.im > 0.0) || !(e > 0.0) || !(x >= 0.0) || !(gap >= -slack) || !(gap < z.im * z.im) {
        return Err(Error::gate(
            MODULE,
            "theorem hypotheses",
            format!(
                "need Im zeta > 0, eta > 0, xi >= 0 and 0 <= eta xi - Re^2 zeta < Im^2 zeta \
                 (eta = {e}, xi = {x}, zeta = {z}, eta xi - Re^2 zeta = {gap})"
            ),
        ));
    }
    Ok(())
}

/// A `lambda2` with `d_p > 0` and `hbar Im zeta + lambda2 Re zeta > 0`.
///
/// For `Re zeta != 0` the shift `y = hbar Im zeta + lambda2 Re zeta` is put
/// at the vertex of the concave quadratic `d_p Re^2 zeta` in `y`, or past
/// `hbar |zeta|^2 / (2 Im zeta)` when the quadratic degenerates to a line.
/// For `Re zeta = 0`, `lambda2 = 0`.
pub fn choose_lambda2(form: &LemmaForm, hbar: f64) -> Result<f64> {
    check_hypotheses(form)?;
    let (e, x, z) = (form.eta_form, form.xi, form.zeta);
    let lambda2 = if z.re == 0.0 {
        0.0
    } else {
        let gap = e * x - z.re * z.re;
        if gap <= 1e-12 * e * x {
            // y = hbar |zeta|^2 / Im zeta, twice the threshold
            hbar * z.re / z.im
        } else {
            // y = eta xi hbar Im zeta / gap
            hbar * z.im * z.re / gap
        }
    };
    let dp = discriminant_dp(form, lambda2, hbar);
    let y = shift(form, lambda2, hbar);
    if !(dp > 0.0) || !(y > 0.0) {
        return Err(Error::gate(
            MODULE,
            "state parameters",
            format!("lambda2 = {lambda2} gives d_p = {dp}, shift = {y}"),
        ));
    }
    Ok(lambda2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WitnessConstruction {
    pub form: LemmaForm,
    pub hbar: f64,
    /// `<q^2>`, `<qp + pq>` and `<p^2>` of the pure initial state.
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub d_p: f64,
    pub s_minus: f64,
    pub s_plus: f64,
    /// Positive quantity under the square root in `lambda`.
    pub w: f64,
    pub lambda: f64,
    pub beta_bar: f64,
    pub i_value: f64,
    /// Discriminant of `I` as a quadratic in `beta`.
    pub beta_discriminant: f64,
}

impl WitnessConstruction {
    /// Centered pure Gaussian with the constructed moments.
    pub fn sigma(&self) -> GaussianState {
        GaussianState::centered(self.lambda1, self.lambda3, 0.5 * self.lambda2)
    }

    pub fn sigma_moments(&self) -> (f64, f64, f64) {
        (self.lambda1, self.lambda3, self.lambda2)
    }

    /// Initial state when a reversible map `x -> S x` precedes the form:
    /// the constructed state pulled back through `S`.
    pub fn sigma_through(&self, s: &qbrown_core::SymplecticMap2) -> GaussianState {
        self.sigma().transform(&s.inverse())
    }
}

/// Coefficients `(P, B, C)` of `I(beta) = P beta^2 + B beta + C` at fixed `lambda`.
pub fn witness_quadratic(
    form: &LemmaForm,
    sigma: (f64, f64, f64),
    lambda: f64,
    hbar: f64,
) -> (f64, f64, f64) {
    let e = form.contraction(hbar);
    let k = form.kernel(hbar);
    let (l1, l3, l2) = sigma;
    let p = e * l3 + k * form.eta_form;
    let b = e * l2 + 2.0 * k * form.zeta.re;
    let c = p * lambda * lambda - lambda * hbar + e * l1 + k * form.xi;
    (p, b, c)
}

/// `Tr [q + (beta + i lambda)p] rho [q + (beta - i lambda)p]` for `rho` the
/// form applied to a state with raw moments `sigma = (<q^2>, <p^2>, <qp+pq>)`.
pub fn witness_value(
    form: &LemmaForm,
    sigma: (f64, f64, f64),
    beta: f64,
    lambda: f64,
    hbar: f64,
) -> Result<f64> {
    let (q2, p2, qp) = lemma_moments(form, sigma, hbar)?;
    Ok(beta * beta * p2 + beta * qp + lambda * lambda * p2 - lambda * hbar + q2)
}

pub fn build_witness(form: &LemmaForm, hbar: f64) -> Result<WitnessConstruction> {
    if !(hbar > 0.0) {
        return Err(Error::invalid(format!("hbar = {hbar} must be positive")));
    }
    let lambda2 = choose_lambda2(form, hbar)?;
    let (eta, xi) = (form.eta_form, form.xi);
    let y = shift(form, lambda2, hbar);
    let d_p = discriminant_dp(form, lambda2, hbar);
    let root = d_p.sqrt();
    let s_minus = (y - root) / (2.0 * eta);
    let s_plus = (y + root) / (2.0 * eta);
    let lambda1 = 0.5 * (s_minus + s_plus);
    let lambda3 = (hbar * hbar + lambda2 * lambda2) / (4.0 * lambda1);

    let below =
        eta * lambda1 * lambda1 - y * lambda1 + 0.25 * xi * (hbar * hbar + lambda2 * lambda2);
    if !(below < 0.0) {
        return Err(Error::gate(
            MODULE,
            "midpoint below zero",
            format!("value {below} at lambda1 = {lambda1}"),
        ));
    }
    let e = form.contraction(hbar);
    let k = form.kernel(hbar);
    // 2 hbar e (1 - e)/Im zeta = 4 e k
    let w = 4.0 * e * k * (y - eta * lambda1 - xi * lambda3);
    if !(w > 0.0) {
        return Err(Error::gate(MODULE, "lambda radicand", format!("w = {w}")));
    }
    let p = e * lambda3 + k * eta;
    let lambda = (hbar + w.sqrt()) / (2.0 * p);
    let residual = p * lambda * lambda - hbar * lambda + (hbar * hbar - w) / (4.0 * p);
    if residual.abs() > 1e-9 * (hbar * lambda).abs().max(1.0) {
        return Err(Error::gate(
            MODULE,
            "lambda root",
            format!("residual {residual:e}"),
        ));
    }
    let sigma = (lambda1, lambda3, lambda2);
    let (qp_, qb, qc) = witness_quadratic(form, sigma, lambda, hbar);
    let beta_discriminant = qb * qb - 4.0 * qp_ * qc;
    if !(beta_discriminant > 0.0) {
        return Err(Error::gate(
            MODULE,
            "beta discriminant",
            format!("discriminant {beta_discriminant} <= 0"),
        ));
    }
    let beta_bar = -qb / (2.0 * qp_);
    let i_value = witness_value(form, sigma, beta_bar, lambda, hbar)?;
    if !(i_value < 0.0) {
        return Err(Error::gate(
            MODULE,
            "negative witness",
            format!("I = {i_value}"),
        ));
    }
    Ok(WitnessConstruction {
        form: *form,
        hbar,
        lambda1,
        lambda2,
        lambda3,
        d_p,
        s_minus,
        s_plus,
        w,
        lambda,
        beta_bar,
        i_value,
        beta_discriminant,
    })
}
