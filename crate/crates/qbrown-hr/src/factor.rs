use num_complex::Complex64;
use qbrown_core::{expm1_ratio, Error, ExponentQuadraticForm, Result, SymplecticMap2};

use crate::HrCoefficientsAt;

/// `-a{q,.,q} - b{p,.,p} + c{q,.,p} + c*{p,.,q} = -k1{B,.,B} - k2{B^dagger,.,B^dagger}`
/// with `B = r q + s p` and `[B, B^dagger] = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositiveFactorization {
    pub k1: f64,
    pub k2: f64,
    pub r: Complex64,
    pub s: Complex64,
    /// Both `k1` and `k2` are non-negative.
    pub two_generator: bool,
}

/// Splits a form into lowering and raising parts, with the free angle
/// `phi + theta` set to zero.
pub fn positive_factorization(
    form: &ExponentQuadraticForm,
    hbar: f64,
) -> Result<PositiveFactorization> {
    let (a, b, c) = (form.a, form.b, form.c);
    let det = a * b - c.re * c.re;
    if !(a >= 0.0) || !(b >= 0.0) || !(det > 0.0) {
        return Err(Error::invalid(format!(
            "factorization needs a, b >= 0 and ab - Re^2 c > 0 (a = {a}, b = {b}, ab - Re^2 c = {det})"
        )));
    }
    let sum = 2.0 * hbar * det.sqrt();
    let diff = 2.0 * hbar * c.im;
    let (k1, k2) = (0.5 * (sum - diff), 0.5 * (sum + diff));
    let rp = (a / sum).sqrt();
    let sp = (b / sum).sqrt();
    let sin = 1.0 / (2.0 * hbar * rp * sp);
    let cos = -c.re / (sum * rp * sp);
    let delta = sin.atan2(cos);
    let (theta, phi) = (-0.5 * delta, 0.5 * delta);
    Ok(PositiveFactorization {
        k1,
        k2,
        r: Complex64::from_polar(rp, theta),
        s: Complex64::from_polar(sp, phi),
        two_generator: k1 >= 0.0 && k2 >= 0.0,
    })
}

impl PositiveFactorization {
    /// The form rebuilt from `k1, k2, r, s`.
    pub fn reconstruct(&self) -> ExponentQuadraticForm {
        let (r, s) = (self.r, self.s);
        ExponentQuadraticForm {
            a: self.k1 * r.norm_sqr() + self.k2 * r.norm_sqr(),
            b: self.k1 * s.norm_sqr() + self.k2 * s.norm_sqr(),
            c: -(self.k1 * r.conj() * s + self.k2 * r * s.conj()),
        }
    }

    /// Coefficients of the four brackets `{q,.,q}, {q,.,p}, {p,.,q}, {p,.,p}`
    /// in `-k1{B,.,B} - k2{B^dagger,.,B^dagger}`.
    pub fn bracket_coefficients(&self) -> [Complex64; 4] {
        let (r, s) = (self.r, self.s);
        let bb = [r.conj() * r, r.conj() * s, s.conj() * r, s.conj() * s];
        let bd = [r * r.conj(), r * s.conj(), s * r.conj(), s * s.conj()];
        [0, 1, 2, 3].map(|i| -(self.k1 * bb[i] + self.k2 * bd[i]))
    }

    /// `[B, B^dagger]` in units where it should equal one.
    pub fn commutator(&self, hbar: f64) -> f64 {
        -2.0 * hbar * (self.r * self.s.conj()).im
    }

    /// Exponent coefficients `(c_B, c_Bdag)` of the separated product
    /// `exp(c_B {B,.,B}) exp(c_Bdag {B^dagger,.,B^dagger})`.
    pub fn separated_exponents(&self) -> (f64, f64) {
        let d = self.k2 - self.k1;
        let l = (1.0 + 2.0 * self.k2 * expm1_ratio(2.0 * d)).ln();
        (d - 0.5 * l, -0.5 * l)
    }
}

/// `(C, D, E, F)` from the half-angle form of the normalization, which stays
/// finite when `X' = 0` and reduces to the identity at `t = 0`.
fn cdef(row: &HrCoefficientsAt, omega: f64, hbar: f64) -> (f64, f64, f64, f64) {
    let x = row.x_dot / hbar;
    let v = row.y / (hbar * omega) - omega * row.x / hbar;
    let psi = x.atan2(v);
    let (s, c) = (0.5 * psi).sin_cos();
    (s, c, c, -s)
}

/// Action of `N` on `(q, p)`.
pub fn n_map(row: &HrCoefficientsAt, m: f64, omega: f64, hbar: f64) -> Result<SymplecticMap2> {
    if !(omega > 0.0) {
        return Err(Error::invalid("the reversible factors need omega > 0"));
    }
    let (c, d, e, f) = cdef(row, omega, hbar);
    SymplecticMap2::new(e, -f / (m * omega), -m * omega * c, d)
}

/// Action of `M-tilde` on `(q, p)`.
pub fn m_tilde_map(
    row: &HrCoefficientsAt,
    m: f64,
    omega: f64,
    hbar: f64,
) -> Result<SymplecticMap2> {
    if !(omega > 0.0) {
        return Err(Error::invalid("the reversible factors need omega > 0"));
    }
    let (c, d, e, f) = cdef(row, omega, hbar);
    let (a, ad, add, r) = (row.a, row.a_dot, row.a_ddot, row.r);
    SymplecticMap2::new(
        (ad * d + add * f / omega) / r,
        (a * d + ad * f / omega) / (m * r),
        m * (omega * ad * c + add * e) / r,
        (omega * a * c + ad * e) / r,
    )
}

/// Combined action, `(1/R) [[A', A/m], [m A'', A']]`.
pub fn composite_map(
    row: &HrCoefficientsAt,
    m: f64,
    omega: f64,
    hbar: f64,
) -> Result<SymplecticMap2> {
    Ok(n_map(row, m, omega, hbar)?.compose(&m_tilde_map(row, m, omega, hbar)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_case() {
        let hbar = 1.0;
        let f = ExponentQuadraticForm {
            a: 0.5,
            b: 0.5,
            c: Complex64::new(0.0, 0.0),
        };
        let pf = positive_factorization(&f, hbar).unwrap();
        assert!((pf.k1 - pf.k2).abs() < 1e-15);
        assert!((pf.k1 - 0.5).abs() < 1e-15);
        assert!((pf.commutator(hbar) - 1.0).abs() < 1e-14);
        let back = pf.reconstruct();
        assert!(
            (back.a - f.a).abs() < 1e-14
                && (back.b - f.b).abs() < 1e-14
                && (back.c - f.c).norm() < 1e-14
        );
    }

    #[test]
    fn negative_k_is_reported() {
        let f = ExponentQuadraticForm {
            a: 1.0,
            b: 1.0,
            c: Complex64::new(0.0, 3.0),
        };
        let pf = positive_factorization(&f, 1.0).unwrap();
        assert!(!pf.two_generator && pf.k1 < 0.0);
    }
}
