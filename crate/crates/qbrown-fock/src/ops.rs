use nalgebra::DMatrix;
use num_complex::Complex64;
use qbrown_core::{Error, GaussianState, Result, C64};

/// Matrix with nonzero entries only within `w` of the diagonal.
///
/// `diags[d][i] = M[i, i + d - w]`.
#[derive(Debug, Clone)]
pub(crate) struct Banded {
    n: usize,
    w: usize,
    diags: Vec<Vec<C64>>,
}

impl Banded {
    pub(crate) fn from_dense(m: &DMatrix<C64>, w: usize) -> Self {
        let n = m.nrows();
        let mut diags = vec![vec![C64::new(0.0, 0.0); n]; 2 * w + 1];
        for (d, diag) in diags.iter_mut().enumerate() {
            for (i, v) in diag.iter_mut().enumerate() {
                let k = i as isize + d as isize - w as isize;
                if k >= 0 && (k as usize) < n {
                    *v = m[(i, k as usize)];
                }
            }
        }
        Self { n, w, diags }
    }

    pub(crate) fn zero(n: usize, w: usize) -> Self {
        Self {
            n,
            w,
            diags: vec![vec![C64::new(0.0, 0.0); n]; 2 * w + 1],
        }
    }

    pub(crate) fn to_dense(&self) -> DMatrix<C64> {
        let n = self.n;
        let mut m = DMatrix::zeros(n, n);
        for (d, diag) in self.diags.iter().enumerate() {
            for (i, v) in diag.iter().enumerate() {
                let k = i as isize + d as isize - self.w as isize;
                if k >= 0 && (k as usize) < n {
                    m[(i, k as usize)] = *v;
                }
            }
        }
        m
    }

    /// `self += c * other`, both of the same shape.
    pub(crate) fn axpy(&mut self, c: C64, other: &Banded) {
        debug_assert!(self.n == other.n && self.w >= other.w);
        let shift = self.w - other.w;
        for (d, diag) in other.diags.iter().enumerate() {
            for (x, y) in self.diags[d + shift].iter_mut().zip(diag) {
                *x += c * y;
            }
        }
    }

    /// `out += M x` on column-major square matrices.
    pub(crate) fn left_into(&self, x: &[C64], out: &mut [C64]) {
        let n = self.n;
        for j in 0..n {
            let col = j * n;
            let xc = &x[col..col + n];
            let oc = &mut out[col..col + n];
            for (d, diag) in self.diags.iter().enumerate() {
                let off = d as isize - self.w as isize;
                let i_lo = (-off).max(0) as usize;
                let i_hi = (n as isize - off).min(n as isize) as usize;
                for i in i_lo..i_hi {
                    oc[i] += diag[i] * xc[(i as isize + off) as usize];
                }
            }
        }
    }

    /// `out += x M`.
    pub(crate) fn right_into(&self, x: &[C64], out: &mut [C64]) {
        let n = self.n;
        let w = self.w;
        for j in 0..n {
            let k_lo = j.saturating_sub(w);
            let k_hi = (j + w).min(n - 1);
            for k in k_lo..=k_hi {
                let c = self.diags[j + w - k][k];
                if c == C64::new(0.0, 0.0) {
                    continue;
                }
                let (xc, oc) = (k * n, j * n);
                for i in 0..n {
                    out[oc + i] += c * x[xc + i];
                }
            }
        }
    }
}

/// Position and momentum in the number basis of an oscillator with mass `m`
/// and frequency `omega_ref`, truncated to `n` levels.
#[derive(Debug, Clone)]
pub struct TruncatedOperators {
    pub n: usize,
    pub m: f64,
    pub omega_ref: f64,
    pub hbar: f64,
    pub q_mat: DMatrix<C64>,
    pub p_mat: DMatrix<C64>,
    pub(crate) q_b: Banded,
    pub(crate) p_b: Banded,
    pub(crate) qq_b: Banded,
    pub(crate) pp_b: Banded,
    pub(crate) qp_b: Banded,
    pub(crate) pq_b: Banded,
}

impl TruncatedOperators {
    pub fn new(n: usize, m: f64, omega_ref: f64, hbar: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(format!(
                "truncation N = {n} must be at least 2"
            )));
        }
        if !(m > 0.0 && omega_ref > 0.0 && hbar > 0.0) || !(m * omega_ref * hbar).is_finite() {
            return Err(Error::invalid("m, omega_ref and hbar must be positive"));
        }
        let a = lowering(n);
        let ad = a.adjoint();
        let sq = (hbar / (2.0 * m * omega_ref)).sqrt();
        let sp = (hbar * m * omega_ref / 2.0).sqrt();
        let q_mat = (&a + &ad) * C64::new(sq, 0.0);
        let p_mat = (&ad - &a) * C64::new(0.0, sp);
        let qq = &q_mat * &q_mat;
        let pp = &p_mat * &p_mat;
        let qp = &q_mat * &p_mat;
        let pq = &p_mat * &q_mat;
        Ok(Self {
            n,
            m,
            omega_ref,
            hbar,
            q_b: Banded::from_dense(&q_mat, 1),
            p_b: Banded::from_dense(&p_mat, 1),
            qq_b: Banded::from_dense(&qq, 2),
            pp_b: Banded::from_dense(&pp, 2),
            qp_b: Banded::from_dense(&qp, 2),
            pq_b: Banded::from_dense(&pq, 2),
            q_mat,
            p_mat,
        })
    }

    pub fn lowering(&self) -> DMatrix<C64> {
        lowering(self.n)
    }

    /// `b_q q + b_p p`.
    pub fn linear(&self, b_q: C64, b_p: C64) -> DMatrix<C64> {
        &self.q_mat * b_q + &self.p_mat * b_p
    }

    /// `b11 q^2 + b12 (qp + pq) + b22 p^2`.
    pub fn quadratic_hamiltonian(&self, b11: f64, b12: f64, b22: f64) -> DMatrix<C64> {
        let (q, p) = (&self.q_mat, &self.p_mat);
        (q * q) * C64::new(b11, 0.0)
            + (q * p + p * q) * C64::new(b12, 0.0)
            + (p * p) * C64::new(b22, 0.0)
    }

    /// Largest entry of `[q, p] - i hbar` on the leading `n - 1` block.
    pub fn commutator_defect(&self) -> f64 {
        let c = &self.q_mat * &self.p_mat - &self.p_mat * &self.q_mat;
        let mut worst = 0.0f64;
        for j in 0..self.n - 1 {
            for i in 0..self.n - 1 {
                let target = if i == j {
                    C64::new(0.0, self.hbar)
                } else {
                    C64::new(0.0, 0.0)
                };
                worst = worst.max((c[(i, j)] - target).norm());
            }
        }
        worst
    }

    /// Means and symmetrized covariances of `rho`, normalized by its trace.
    pub fn moments(&self, rho: &DMatrix<C64>) -> GaussianState {
        let tr = rho.trace().re;
        let ev = |x: &DMatrix<C64>| (rho * x).trace().re / tr;
        let (q, p) = (&self.q_mat, &self.p_mat);
        let mq = ev(q);
        let mp = ev(p);
        GaussianState::from_second_moments(mq, mp, ev(&(q * q)), ev(&(p * p)), ev(&(q * p + p * q)))
    }
}

pub(crate) fn lowering(n: usize) -> DMatrix<C64> {
    let mut a = DMatrix::zeros(n, n);
    for k in 1..n {
        a[(k - 1, k)] = Complex64::new((k as f64).sqrt(), 0.0);
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn banded_products_match_dense() {
        let n = 7;
        let m = DMatrix::from_fn(n, n, |i, j| {
            if (i as isize - j as isize).abs() <= 2 {
                C64::new(i as f64 + 0.3 * j as f64, (i * j) as f64 * 0.1 - 1.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let x = DMatrix::from_fn(n, n, |i, j| {
            C64::new((i * 3 + j) as f64 * 0.1, j as f64 - i as f64)
        });
        let b = Banded::from_dense(&m, 2);
        let mut l = DMatrix::zeros(n, n);
        b.left_into(x.as_slice(), l.as_mut_slice());
        let mut r = DMatrix::zeros(n, n);
        b.right_into(x.as_slice(), r.as_mut_slice());
        assert!((l - &m * &x).norm() < 1e-12);
        assert!((r - &x * &m).norm() < 1e-12);
    }

    #[test]
    fn canonical_commutator_on_interior() {
        let ops = TruncatedOperators::new(20, 1.3, 0.7, 0.9).unwrap();
        assert!(ops.commutator_defect() < 1e-13);
        let c = &ops.q_mat * &ops.p_mat - &ops.p_mat * &ops.q_mat;
        // the corner carries -i hbar (N - 1)
        assert!((c[(19, 19)].im + 0.9 * 19.0).abs() < 1e-12);
    }
}
