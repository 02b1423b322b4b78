use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;
use qbrown_core::{Error, ExponentQuadraticForm, GeneratorCoeffs, Result, C64};

use crate::ops::{Banded, TruncatedOperators};

/// Coefficients of a superoperator in the span of the quadratic generators:
///
/// `(1/i hbar)[H, .] - k1{q,.,q} - k2{p,.,p} + k3{p,.,q} + k4{q,.,p}` with
/// `H = b11 q^2 + b12 (qp + pq) + b22 p^2`. All entries may be complex, so
/// non-Hermiticity-preserving elements of the algebra are representable too.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuperCoeffs {
    pub b11: C64,
    pub b12: C64,
    pub b22: C64,
    pub k1: C64,
    pub k2: C64,
    pub k3: C64,
    pub k4: C64,
}

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

impl SuperCoeffs {
    pub fn zero() -> Self {
        Self {
            b11: ZERO,
            b12: ZERO,
            b22: ZERO,
            k1: ZERO,
            k2: ZERO,
            k3: ZERO,
            k4: ZERO,
        }
    }

    /// `(1/i hbar)[H, .]`.
    pub fn hamiltonian(b11: f64, b12: f64, b22: f64) -> Self {
        Self {
            b11: C64::new(b11, 0.0),
            b12: C64::new(b12, 0.0),
            b22: C64::new(b22, 0.0),
            ..Self::zero()
        }
    }

    /// `{q,.,q}`.
    pub fn qq() -> Self {
        Self {
            k1: -ONE,
            ..Self::zero()
        }
    }

    /// `{p,.,p}`.
    pub fn pp() -> Self {
        Self {
            k2: -ONE,
            ..Self::zero()
        }
    }

    /// `{p,.,q}`.
    pub fn pq() -> Self {
        Self {
            k3: ONE,
            ..Self::zero()
        }
    }

    /// `{q,.,p}`.
    pub fn qp() -> Self {
        Self {
            k4: ONE,
            ..Self::zero()
        }
    }

    pub fn scale(self, c: C64) -> Self {
        Self {
            b11: self.b11 * c,
            b12: self.b12 * c,
            b22: self.b22 * c,
            k1: self.k1 * c,
            k2: self.k2 * c,
            k3: self.k3 * c,
            k4: self.k4 * c,
        }
    }
}

impl From<GeneratorCoeffs> for SuperCoeffs {
    fn from(g: GeneratorCoeffs) -> Self {
        Self {
            b11: C64::new(g.b11, 0.0),
            b12: C64::new(g.b12, 0.0),
            b22: C64::new(g.b22, 0.0),
            k1: C64::new(g.k1, 0.0),
            k2: C64::new(g.k2, 0.0),
            k3: g.k3,
            k4: g.k4(),
        }
    }
}

/// `-a{q,.,q} - b{p,.,p} + c{q,.,p} + conj(c){p,.,q}`.
impl From<ExponentQuadraticForm> for SuperCoeffs {
    fn from(f: ExponentQuadraticForm) -> Self {
        Self {
            k1: C64::new(f.a, 0.0),
            k2: C64::new(f.b, 0.0),
            k3: f.c.conj(),
            k4: f.c,
            ..Self::zero()
        }
    }
}

impl Add for SuperCoeffs {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            b11: self.b11 + o.b11,
            b12: self.b12 + o.b12,
            b22: self.b22 + o.b22,
            k1: self.k1 + o.k1,
            k2: self.k2 + o.k2,
            k3: self.k3 + o.k3,
            k4: self.k4 + o.k4,
        }
    }
}

impl Sub for SuperCoeffs {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + o.scale(-ONE)
    }
}

impl Mul<f64> for SuperCoeffs {
    type Output = Self;
    fn mul(self, c: f64) -> Self {
        self.scale(C64::new(c, 0.0))
    }
}

/// Matrix-free realization on `N x N` operators.
///
/// Every term is a product with `q`, `p` or their quadratic combinations, all
/// banded in the number basis, so one application costs `O(N^2)`. The action
/// is written as `G rho + rho G' + (q rho) M1 + (p rho) M2`.
#[derive(Debug, Clone)]
pub struct Superoperator {
    n: usize,
    coeffs: SuperCoeffs,
    g_left: Banded,
    g_right: Banded,
    q: Banded,
    p: Banded,
    m1: Banded,
    m2: Banded,
}

impl Superoperator {
    pub fn new(ops: &TruncatedOperators, c: SuperCoeffs) -> Self {
        let n = ops.n;
        let ih = C64::new(0.0, 1.0 / ops.hbar);
        let mut h = Banded::zero(n, 2);
        h.axpy(c.b11, &ops.qq_b);
        h.axpy(c.b12, &ops.qp_b);
        h.axpy(c.b12, &ops.pq_b);
        h.axpy(c.b22, &ops.pp_b);
        let mut diss = Banded::zero(n, 2);
        diss.axpy(-c.k1, &ops.qq_b);
        diss.axpy(-c.k2, &ops.pp_b);
        diss.axpy(c.k3, &ops.qp_b);
        diss.axpy(c.k4, &ops.pq_b);
        let mut g_left = diss.clone();
        g_left.axpy(-ih, &h);
        let mut g_right = diss;
        g_right.axpy(ih, &h);
        let mut m1 = Banded::zero(n, 1);
        m1.axpy(c.k1 * 2.0, &ops.q_b);
        m1.axpy(-c.k4 * 2.0, &ops.p_b);
        let mut m2 = Banded::zero(n, 1);
        m2.axpy(c.k2 * 2.0, &ops.p_b);
        m2.axpy(-c.k3 * 2.0, &ops.q_b);
        Self {
            n,
            coeffs: c,
            g_left,
            g_right,
            q: ops.q_b.clone(),
            p: ops.p_b.clone(),
            m1,
            m2,
        }
    }

    pub fn coeffs(&self) -> SuperCoeffs {
        self.coeffs
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// `out = L x` on column-major buffers; `work` needs `2 N^2` entries.
    pub fn apply_into(&self, x: &[C64], out: &mut [C64], work: &mut [C64]) {
        let nn = self.n * self.n;
        let (yq, yp) = work[..2 * nn].split_at_mut(nn);
        yq.fill(ZERO);
        yp.fill(ZERO);
        out.fill(ZERO);
        self.q.left_into(x, yq);
        self.p.left_into(x, yp);
        self.g_left.left_into(x, out);
        self.g_right.right_into(x, out);
        self.m1.right_into(yq, out);
        self.m2.right_into(yp, out);
    }

    pub fn apply(&self, x: &DMatrix<C64>) -> DMatrix<C64> {
        let mut out = DMatrix::zeros(self.n, self.n);
        let mut work = vec![ZERO; 2 * self.n * self.n];
        self.apply_into(x.as_slice(), out.as_mut_slice(), &mut work);
        out
    }

    /// Explicit `N^2 x N^2` matrix on column-stacked operators.
    pub fn to_matrix(&self) -> SuperoperatorMatrix {
        let n = self.n;
        let nn = n * n;
        let mut mat = DMatrix::zeros(nn, nn);
        let mut unit = vec![ZERO; nn];
        let mut col = vec![ZERO; nn];
        let mut work = vec![ZERO; 2 * nn];
        for k in 0..nn {
            unit[k] = ONE;
            self.apply_into(&unit, &mut col, &mut work);
            unit[k] = ZERO;
            mat.column_mut(k).copy_from_slice(&col);
        }
        SuperoperatorMatrix { n, mat }
    }

    /// Upper bound on the operator norm induced by the Frobenius norm.
    pub fn norm_bound(&self) -> f64 {
        let b = |m: &Banded| m.spectral_bound();
        b(&self.g_left) + b(&self.g_right) + b(&self.q) * b(&self.m1) + b(&self.p) * b(&self.m2)
    }

    /// Power-iteration estimate of the spectral radius.
    pub fn spectral_radius_estimate(&self) -> f64 {
        let n = self.n;
        let nn = n * n;
        let mut x: Vec<C64> = (0..nn)
            .map(|k| {
                let (i, j) = (k % n, k / n);
                let v = ((i * 7 + j * 13 + 1) as f64).sin();
                let w = ((i * 3 + j * 5 + 2) as f64).cos();
                C64::new(v, if i == j { 0.0 } else { 0.5 * w })
            })
            .collect();
        let mut y = vec![ZERO; nn];
        let mut work = vec![ZERO; 2 * nn];
        let frob = |v: &[C64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let mut best = 0.0f64;
        for it in 0..40 {
            let nx = frob(&x);
            self.apply_into(&x, &mut y, &mut work);
            let ny = frob(&y);
            if ny == 0.0 {
                return best;
            }
            if it >= 20 {
                best = best.max(ny / nx);
            }
            for (a, b) in x.iter_mut().zip(&y) {
                *a = *b / ny;
            }
        }
        best
    }
}

impl Banded {
    /// `sqrt(||M||_1 ||M||_inf)`, an upper bound on the spectral norm.
    pub(crate) fn spectral_bound(&self) -> f64 {
        let dense = self.to_dense();
        let n1 = dense
            .column_iter()
            .map(|c| c.iter().map(|v| v.norm()).sum::<f64>())
            .fold(0.0, f64::max);
        let ninf = dense
            .row_iter()
            .map(|r| r.iter().map(|v| v.norm()).sum::<f64>())
            .fold(0.0, f64::max);
        (n1 * ninf).sqrt()
    }
}

/// Explicit superoperator acting on column-stacked `rho`.
#[derive(Debug, Clone)]
pub struct SuperoperatorMatrix {
    pub n: usize,
    pub mat: DMatrix<C64>,
}

impl SuperoperatorMatrix {
    pub fn apply(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let v = nalgebra::DVector::from_column_slice(rho.as_slice());
        let out = &self.mat * v;
        DMatrix::from_column_slice(self.n, self.n, out.as_slice())
    }
}

/// Realization of the generator of the quadratic master equation.
pub fn build_generator(coeffs: &GeneratorCoeffs, ops: &TruncatedOperators) -> Superoperator {
    Superoperator::new(ops, (*coeffs).into())
}

const TAYLOR_THETA: f64 = 2.0;
const TAYLOR_MAX_TERMS: usize = 80;

/// `exp(L) x` by a Taylor series on `ceil(norm / 2)` equal substeps.
///
/// `norm` should bound the operator norm of `L`; an underestimate only costs
/// extra terms. Each substep stops once two consecutive terms fall below
/// `1e-17` of the partial sum.
pub fn expm_action<F>(apply: F, x: &DMatrix<C64>, norm: f64) -> Result<DMatrix<C64>>
where
    F: Fn(&DMatrix<C64>) -> DMatrix<C64>,
{
    if !norm.is_finite() || norm < 0.0 {
        return Err(Error::invalid(format!(
            "norm estimate {norm} is not usable"
        )));
    }
    let s = (norm / TAYLOR_THETA).ceil().max(1.0) as usize;
    let inv_s = 1.0 / s as f64;
    let mut y = x.clone();
    for _ in 0..s {
        let mut term = y.clone();
        let mut sum = y.clone();
        let mut small = 0;
        let mut converged = false;
        for k in 1..=TAYLOR_MAX_TERMS {
            term = apply(&term) * C64::new(inv_s / k as f64, 0.0);
            sum += &term;
            let tn = term.norm();
            if tn <= 1e-17 * sum.norm() || tn == 0.0 {
                small += 1;
                if small == 2 {
                    converged = true;
                    break;
                }
            } else {
                small = 0;
            }
        }
        if !converged {
            return Err(Error::NonConvergence(format!(
                "Taylor series did not converge in {TAYLOR_MAX_TERMS} terms (norm estimate {norm})"
            )));
        }
        y = sum;
    }
    Ok(y)
}

/// `exp(L) rho` for a realized superoperator.
pub fn exp_superoperator(l: &Superoperator, rho: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    expm_action(|x| l.apply(x), rho, l.norm_bound())
}

#[cfg(test)]
mod tests {
    use super::*;
    use qbrown_core::expm;

    fn ops(n: usize) -> TruncatedOperators {
        TruncatedOperators::new(n, 1.2, 0.8, 0.9).unwrap()
    }

    fn sample(n: usize) -> DMatrix<C64> {
        DMatrix::from_fn(n, n, |i, j| {
            C64::new((i + 2 * j) as f64 * 0.1, i as f64 * 0.2 - j as f64 * 0.1)
        })
    }

    fn dense_reference(o: &TruncatedOperators, c: &SuperCoeffs, x: &DMatrix<C64>) -> DMatrix<C64> {
        let (q, p) = (&o.q_mat, &o.p_mat);
        let h = (q * q) * c.b11 + (q * p + p * q) * c.b12 + (p * p) * c.b22;
        let br = |a: &DMatrix<C64>, b: &DMatrix<C64>| {
            b * a * x + x * b * a - a * x * b * C64::new(2.0, 0.0)
        };
        (&h * x - x * &h) * C64::new(0.0, -1.0 / o.hbar) - br(q, q) * c.k1 - br(p, p) * c.k2
            + br(p, q) * c.k3
            + br(q, p) * c.k4
    }

    #[test]
    fn banded_action_matches_dense_products() {
        let o = ops(9);
        let c = SuperCoeffs {
            b11: C64::new(0.7, 0.1),
            b12: C64::new(-0.3, 0.0),
            b22: C64::new(1.1, -0.2),
            k1: C64::new(0.4, 0.3),
            k2: C64::new(0.2, 0.0),
            k3: C64::new(-0.5, 0.6),
            k4: C64::new(0.1, -0.9),
        };
        let x = sample(9);
        let l = Superoperator::new(&o, c);
        assert!((l.apply(&x) - dense_reference(&o, &c, &x)).norm() < 1e-12);
        assert!((l.to_matrix().apply(&x) - l.apply(&x)).norm() < 1e-12);
        let bound = l.norm_bound();
        assert!(l.spectral_radius_estimate() <= bound * (1.0 + 1e-12));
    }

    #[test]
    fn taylor_action_matches_dense_exponential() {
        let o = ops(6);
        let c = SuperCoeffs::from(GeneratorCoeffs {
            b11: 0.5,
            b12: 0.2,
            b22: 0.5,
            k1: 0.3,
            k2: 0.1,
            k3: C64::new(0.05, -0.2),
        })
        .scale(C64::new(1.5, 0.0));
        let l = Superoperator::new(&o, c);
        let x = sample(6);
        let m = l.to_matrix();
        let e = expm(&m.mat);
        let reference = SuperoperatorMatrix { n: 6, mat: e }.apply(&x);
        let got = exp_superoperator(&l, &x).unwrap();
        assert!((got - &reference).norm() < 1e-11 * reference.norm());
    }

    #[test]
    fn zero_coefficients_give_zero_map() {
        let l = Superoperator::new(&ops(5), SuperCoeffs::zero());
        assert_eq!(l.apply(&sample(5)).norm(), 0.0);
    }
}
