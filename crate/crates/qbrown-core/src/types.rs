use num_complex::Complex64;

use crate::error::{Error, Result};

/// Physical constants of the damped oscillator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorParams {
    pub m: f64,
    pub omega: f64,
    pub gamma: f64,
    pub kt: f64,
    pub hbar: f64,
}

impl OscillatorParams {
    pub fn new(m: f64, omega: f64, gamma: f64, kt: f64, hbar: f64) -> Result<Self> {
        let p = Self {
            m,
            omega,
            gamma,
            kt,
            hbar,
        };
        p.validate()?;
        Ok(p)
    }

    /// Parameters with `hbar = m = 1` chosen to hit a given `(eta_tilde, r)`
    /// pair at damping rate `gamma`.
    pub fn from_eta_r(eta_tilde: f64, r: f64, gamma: f64) -> Result<Self> {
        if !(eta_tilde > 0.0) || !(r >= 0.0) || r > eta_tilde {
            return Err(Error::invalid(format!(
                "need eta_tilde > 0 and 0 <= r <= eta_tilde, got ({eta_tilde}, {r})"
            )));
        }
        let omega = gamma * (eta_tilde * eta_tilde + 1.0).sqrt();
        // r = eta_tilde * sqrt(1 - x^2) with x = hbar*omega/(2kT)
        let ratio = r / eta_tilde;
        let x = (1.0 - ratio * ratio).max(0.0).sqrt();
        let kt = if x == 0.0 {
            f64::INFINITY
        } else {
            omega / (2.0 * x)
        };
        Self::new(1.0, omega, gamma, kt, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        let all_pos = [self.m, self.omega, self.gamma, self.kt, self.hbar]
            .iter()
            .all(|v| *v > 0.0 && !v.is_nan());
        if !all_pos || !self.m.is_finite() || !self.omega.is_finite() || !self.hbar.is_finite() {
            return Err(Error::invalid("oscillator constants must be positive"));
        }
        if self.omega <= self.gamma {
            return Err(Error::invalid(format!(
                "omega = {} must exceed gamma = {} (eta_tilde real)",
                self.omega, self.gamma
            )));
        }
        if self.hbar * self.omega > 2.0 * self.kt * (1.0 + 1e-14) {
            return Err(Error::invalid(format!(
                "hbar*omega = {} exceeds 2kT = {} (r real)",
                self.hbar * self.omega,
                2.0 * self.kt
            )));
        }
        Ok(())
    }

    pub fn eta_tilde(&self) -> f64 {
        let x = self.omega / self.gamma;
        (x * x - 1.0).sqrt()
    }

    pub fn r(&self) -> f64 {
        let two_kt = 2.0 * self.kt;
        if two_kt.is_infinite() {
            return self.eta_tilde();
        }
        let x = self.hbar * self.omega / two_kt;
        let one_minus_x = (two_kt - self.hbar * self.omega) / two_kt;
        self.eta_tilde() * (one_minus_x * (1.0 + x)).max(0.0).sqrt()
    }

    /// The generator coefficients of the standard equation.
    pub fn qbe_coeffs(&self) -> GeneratorCoeffs {
        let h = self.hbar;
        GeneratorCoeffs {
            b11: 0.5 * self.m * self.omega * self.omega,
            b12: 0.5 * self.gamma,
            b22: 0.5 / self.m,
            k1: 2.0 * self.gamma * self.m * self.kt / (h * h),
            k2: 0.0,
            k3: Complex64::new(0.0, -self.gamma / (2.0 * h)),
        }
    }
}

/// First moments and symmetrized covariance of `(q, p)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianState {
    pub mean_q: f64,
    pub mean_p: f64,
    pub cov_qq: f64,
    pub cov_pp: f64,
    pub cov_qp: f64,
}

impl GaussianState {
    pub fn centered(cov_qq: f64, cov_pp: f64, cov_qp: f64) -> Self {
        Self {
            mean_q: 0.0,
            mean_p: 0.0,
            cov_qq,
            cov_pp,
            cov_qp,
        }
    }

    /// Ground state of the oscillator with mass `m` and frequency `omega`.
    pub fn vacuum(m: f64, omega: f64, hbar: f64) -> Self {
        Self::centered(hbar / (2.0 * m * omega), hbar * m * omega / 2.0, 0.0)
    }

    pub fn thermal(nbar: f64, m: f64, omega: f64, hbar: f64) -> Self {
        let v = Self::vacuum(m, omega, hbar);
        let f = 2.0 * nbar + 1.0;
        Self::centered(v.cov_qq * f, v.cov_pp * f, 0.0)
    }

    /// Pure state annihilated by `b_q q + b_p p - beta`.
    ///
    /// The operator must satisfy `Im(b_q conj(b_p)) = -1/(2 hbar)`, which is
    /// the unit commutator with its adjoint.
    pub fn lowering_eigenstate(
        b_q: Complex64,
        b_p: Complex64,
        beta: Complex64,
        hbar: f64,
    ) -> Result<Self> {
        let comm = (b_q * b_p.conj()).im;
        if (comm + 0.5 / hbar).abs() > 1e-9 / hbar {
            return Err(Error::invalid(format!(
                "lowering operator not normalized: Im(b_q conj b_p) = {comm}"
            )));
        }
        if b_p.norm() == 0.0 {
            return Err(Error::invalid("b_p = 0 gives a non-normalizable state"));
        }
        let z = Complex64::i() * b_q / (hbar * b_p);
        let cov_qq = 1.0 / (2.0 * z.re);
        let cov_qp = -hbar * z.im / (2.0 * z.re);
        let cov_pp = hbar * hbar * z.norm_sqr() / (2.0 * z.re);
        // b_q x + b_p y = beta with x, y real
        let det = b_q.re * b_p.im - b_p.re * b_q.im;
        let mean_q = (beta.re * b_p.im - b_p.re * beta.im) / det;
        let mean_p = (b_q.re * beta.im - beta.re * b_q.im) / det;
        Ok(Self {
            mean_q,
            mean_p,
            cov_qq,
            cov_pp,
            cov_qp,
        })
    }

    pub fn det(&self) -> f64 {
        self.cov_qq * self.cov_pp - self.cov_qp * self.cov_qp
    }

    /// Uncertainty relation with a small relative slack for rounding.
    pub fn is_allowable(&self, hbar: f64) -> bool {
        self.cov_qq >= 0.0 && self.cov_pp >= 0.0 && self.det() >= 0.25 * hbar * hbar * (1.0 - 1e-10)
    }

    pub fn is_pure(&self, hbar: f64, tol: f64) -> bool {
        (self.det() - 0.25 * hbar * hbar).abs() <= tol
    }

    /// Raw moments `(<q^2>, <p^2>, <qp + pq>)`.
    pub fn second_moments(&self) -> (f64, f64, f64) {
        (
            self.cov_qq + self.mean_q * self.mean_q,
            self.cov_pp + self.mean_p * self.mean_p,
            2.0 * (self.cov_qp + self.mean_q * self.mean_p),
        )
    }

    pub fn from_second_moments(mean_q: f64, mean_p: f64, q2: f64, p2: f64, qp_sym: f64) -> Self {
        Self {
            mean_q,
            mean_p,
            cov_qq: q2 - mean_q * mean_q,
            cov_pp: p2 - mean_p * mean_p,
            cov_qp: 0.5 * qp_sym - mean_q * mean_p,
        }
    }

    /// Congruence by a linear map of phase space, `x -> S x`.
    pub fn transform(&self, s: &SymplecticMap2) -> Self {
        let [a, b, c, d] = [s.a, s.b, s.c, s.d];
        let (qq, pp, qp) = (self.cov_qq, self.cov_pp, self.cov_qp);
        Self {
            mean_q: a * self.mean_q + b * self.mean_p,
            mean_p: c * self.mean_q + d * self.mean_p,
            cov_qq: a * a * qq + 2.0 * a * b * qp + b * b * pp,
            cov_pp: c * c * qq + 2.0 * c * d * qp + d * d * pp,
            cov_qp: a * c * qq + (a * d + b * c) * qp + b * d * pp,
        }
    }

    /// Smallest symplectic eigenvalue.
    pub fn symplectic_eigenvalue(&self) -> f64 {
        self.det().max(0.0).sqrt()
    }
}

/// Generator `-a{q,.,q} - b{p,.,p} + c{q,.,p} + conj(c){p,.,q}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentQuadraticForm {
    pub a: f64,
    pub b: f64,
    pub c: Complex64,
}

impl ExponentQuadraticForm {
    pub fn zero() -> Self {
        Self {
            a: 0.0,
            b: 0.0,
            c: Complex64::new(0.0, 0.0),
        }
    }

    /// Expressible as a sum of Lindblad terms built from linear operators.
    pub fn is_lindblad_representable(&self, tol: f64) -> bool {
        self.a >= -tol && self.b >= -tol && self.a * self.b - self.c.norm_sqr() >= -tol
    }

    /// Contraction factor `exp(-4 hbar Im c)` applied to second moments.
    pub fn contraction(&self, hbar: f64) -> f64 {
        (-4.0 * hbar * self.c.im).exp()
    }

    /// `hbar (1 - exp(-4 hbar Im c)) / (2 Im c)`, with the `Im c -> 0` limit `2 hbar^2`.
    pub fn noise_kernel(&self, hbar: f64) -> f64 {
        let x = -4.0 * hbar * self.c.im;
        // (1 - e^x) / (2 Im c) = 2 hbar (e^x - 1) / x
        2.0 * hbar * hbar * crate::expm1_ratio(x)
    }

    /// Raw second moments `(<q^2>, <p^2>, <qp+pq>)` after applying `exp` of the form.
    pub fn map_second_moments(&self, hbar: f64, m: (f64, f64, f64)) -> (f64, f64, f64) {
        let s = self.contraction(hbar);
        let k = self.noise_kernel(hbar);
        (
            s * m.0 + k * self.b,
            s * m.1 + k * self.a,
            s * m.2 + 2.0 * k * self.c.re,
        )
    }

    /// Gaussian state after applying `exp` of the form; means scale by the
    /// square root of the second-moment contraction.
    pub fn map_gaussian(&self, hbar: f64, g: &GaussianState) -> GaussianState {
        let s = self.contraction(hbar);
        let k = self.noise_kernel(hbar);
        let f = s.sqrt();
        GaussianState {
            mean_q: f * g.mean_q,
            mean_p: f * g.mean_p,
            cov_qq: s * g.cov_qq + k * self.b,
            cov_pp: s * g.cov_pp + k * self.a,
            cov_qp: s * g.cov_qp + k * self.c.re,
        }
    }
}

/// Instantaneous coefficients of the quadratic master equation.
///
/// Hamiltonian `b11 q^2 + b12 (qp + pq) + b22 p^2`; dissipators
/// `-k1{q,.,q} - k2{p,.,p} + k3{p,.,q} + k4{q,.,p}` with `k4 = conj(k3)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorCoeffs {
    pub b11: f64,
    pub b12: f64,
    pub b22: f64,
    pub k1: f64,
    pub k2: f64,
    pub k3: Complex64,
}

impl GeneratorCoeffs {
    pub fn zero() -> Self {
        Self {
            b11: 0.0,
            b12: 0.0,
            b22: 0.0,
            k1: 0.0,
            k2: 0.0,
            k3: Complex64::new(0.0, 0.0),
        }
    }

    pub fn k4(&self) -> Complex64 {
        self.k3.conj()
    }

    pub fn is_finite(&self) -> bool {
        [
            self.b11, self.b12, self.b22, self.k1, self.k2, self.k3.re, self.k3.im,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

/// Linear map `q -> a q + b p`, `p -> c q + d p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymplecticMap2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl SymplecticMap2 {
    pub const IDENTITY: Self = Self {
        a: 1.0,
        b: 0.0,
        c: 0.0,
        d: 1.0,
    };

    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let s = Self { a, b, c, d };
        if (s.det() - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "map is not symplectic: det = {}",
                s.det()
            )));
        }
        Ok(s)
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn compose(&self, other: &Self) -> Self {
        Self {
            a: self.a * other.a + self.b * other.c,
            b: self.a * other.b + self.b * other.d,
            c: self.c * other.a + self.d * other.c,
            d: self.c * other.b + self.d * other.d,
        }
    }

    pub fn inverse(&self) -> Self {
        let det = self.det();
        Self {
            a: self.d / det,
            b: -self.b / det,
            c: -self.c / det,
            d: self.a / det,
        }
    }
}

/// Strictly increasing list of sample times.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    values: Vec<f64>,
}

impl TimeGrid {
    /// `n_steps` equal intervals on `[t0, t1]`.
    pub fn uniform(t0: f64, t1: f64, n_steps: usize) -> Result<Self> {
        if n_steps == 0 || !(t1 > t0) || !t0.is_finite() || !t1.is_finite() {
            return Err(Error::invalid(format!(
                "uniform grid needs t1 > t0 and n_steps > 0 (got {t0}, {t1}, {n_steps})"
            )));
        }
        let h = (t1 - t0) / n_steps as f64;
        let mut values: Vec<f64> = (0..=n_steps).map(|i| t0 + h * i as f64).collect();
        values[n_steps] = t1;
        Ok(Self { values })
    }

    /// `t0 + (t1 - t0) (i/n)^power`, clustered at `t0` for `power > 1`.
    pub fn graded(t0: f64, t1: f64, n_steps: usize, power: f64) -> Result<Self> {
        if !(power >= 1.0) {
            return Err(Error::invalid(format!(
                "grading power {power} must be >= 1"
            )));
        }
        Self::uniform(t0, t1, n_steps)?;
        let values = (0..=n_steps)
            .map(|i| t0 + (t1 - t0) * (i as f64 / n_steps as f64).powf(power))
            .collect();
        Self::from_values(values)
    }

    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("empty time grid"));
        }
        if values.iter().any(|v| !v.is_finite()) || values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid(
                "time grid must be finite and strictly increasing",
            ));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn t0(&self) -> f64 {
        self.values[0]
    }

    pub fn t1(&self) -> f64 {
        *self.values.last().unwrap()
    }
}
