use nalgebra::{DMatrix, DVector};
use qbrown_core::{expm, hermitian_min_eig, Error, GaussianState, Result, C64};

use crate::ops::{lowering, TruncatedOperators};

/// Truncated density matrix with the probability weight it is known to miss.
#[derive(Debug, Clone)]
pub struct FockDensityMatrix {
    pub rho: DMatrix<C64>,
    pub leakage: f64,
}

impl FockDensityMatrix {
    pub fn new(rho: DMatrix<C64>, leakage: f64) -> Self {
        Self { rho, leakage }
    }

    /// `|k><k|` in `n` levels.
    pub fn number_state(k: usize, n: usize) -> Result<Self> {
        if k >= n {
            return Err(Error::invalid(format!("level {k} outside truncation {n}")));
        }
        let mut rho = DMatrix::zeros(n, n);
        rho[(k, k)] = C64::new(1.0, 0.0);
        Ok(Self::new(rho, 0.0))
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.rho.trace().re
    }

    pub fn purity(&self) -> f64 {
        self.rho.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn min_eig(&self) -> Result<f64> {
        hermitian_min_eig(&self.rho)
    }

    pub fn hermitize(&mut self) {
        let h = (&self.rho + self.rho.adjoint()) * C64::new(0.5, 0.0);
        self.rho = h;
    }

    /// Population of the top `band` levels.
    pub fn edge_population(&self, band: usize) -> f64 {
        let n = self.dim();
        (n.saturating_sub(band)..n)
            .map(|k| self.rho[(k, k)].re.abs())
            .sum()
    }
}

/// Width of the band of top levels whose population is reported as leakage.
pub fn edge_band(n: usize) -> usize {
    (n / 10).max(2)
}

/// Reference frequency at which `g` has equal position and momentum spreads
/// in the number basis, which keeps strongly squeezed states compact.
pub fn balanced_omega_ref(g: &GaussianState, m: f64) -> f64 {
    (g.cov_pp / g.cov_qq).sqrt() / m
}

/// Gaussian state in the number basis of `ops`.
///
/// The state is built as `D R S rho_th S^dagger R^dagger D^dagger` from a
/// thermal state, a squeeze along `q`, a phase-space rotation and a
/// displacement, in a working basis well beyond `N`, then cut to `N` levels.
/// The discarded weight is the leakage.
pub fn gaussian_to_fock(
    g: &GaussianState,
    ops: &TruncatedOperators,
    leak_tol: f64,
) -> Result<FockDensityMatrix> {
    let hbar = ops.hbar;
    if !g.is_allowable(hbar) {
        return Err(Error::invalid(format!(
            "Gaussian violates the uncertainty relation: det = {}",
            g.det()
        )));
    }
    let ell = (hbar / (ops.m * ops.omega_ref)).sqrt();
    let x0 = g.mean_q / ell;
    let y0 = g.mean_p * ell / hbar;
    let vxx = g.cov_qq / (ell * ell);
    let vyy = g.cov_pp * ell * ell / (hbar * hbar);
    let vxy = g.cov_qp / hbar;
    let nu = (vxx * vyy - vxy * vxy).max(0.25).sqrt();
    let nbar = (nu - 0.5).max(0.0);
    let tr = (vxx + vyy) / nu;
    let big = 0.5 * (tr + (tr * tr - 4.0).max(0.0).sqrt());
    let s = 0.5 * big.max(1.0).ln();
    let phi = 0.5 * (2.0 * vxy).atan2(vxx - vyy);
    let alpha = C64::new(x0, y0) / 2f64.sqrt();

    if nbar < 1e-12 && alpha.norm() == 0.0 {
        return finish(squeezed_vacuum(ops.n, s, phi), ops.n, leak_tol);
    }
    // photon content of the target bounds how far the working basis must reach
    let content = nbar * (2.0 * s).cosh() + (s.sinh()).powi(2) + alpha.norm_sqr();
    let mut m = (2 * ops.n)
        .max(ops.n + 60)
        .max((12.0 * content) as usize + 60);
    loop {
        let rho_w = synthesize(m, nbar, s, phi, alpha);
        let tail = (m - m / 8..m).map(|k| rho_w[(k, k)].re.abs()).sum::<f64>();
        if tail < 1e-14 || m >= 8 * ops.n.max(50) {
            return finish(
                rho_w.view((0, 0), (ops.n, ops.n)).into_owned(),
                ops.n,
                leak_tol,
            );
        }
        m *= 2;
    }
}

fn finish(rho: DMatrix<C64>, n: usize, leak_tol: f64) -> Result<FockDensityMatrix> {
    let leakage = (1.0 - rho.trace().re).max(0.0);
    if leakage > leak_tol {
        return Err(Error::gate(
            "fock_oracle",
            "leakage",
            format!("N = {n} misses weight {leakage:e} (tolerance {leak_tol:e})"),
        ));
    }
    let mut out = FockDensityMatrix::new(rho, leakage);
    out.hermitize();
    Ok(out)
}

/// `R S |0>` cut to `n` levels, from the closed-form even amplitudes.
fn squeezed_vacuum(n: usize, s: f64, phi: f64) -> DMatrix<C64> {
    let th = s.tanh();
    let mut psi = DVector::<C64>::zeros(n);
    let mut c = 1.0 / s.cosh().sqrt();
    let mut k = 0;
    while 2 * k < n {
        psi[2 * k] = C64::from_polar(c, phi * (2 * k) as f64);
        c *= th * (((2 * k + 1) * (2 * k + 2)) as f64).sqrt() / (2 * (k + 1)) as f64;
        k += 1;
    }
    &psi * psi.adjoint()
}

fn synthesize(m: usize, nbar: f64, s: f64, phi: f64, alpha: C64) -> DMatrix<C64> {
    let a = lowering(m);
    let ad = a.adjoint();
    let mut rho = DMatrix::zeros(m, m);
    let ratio = nbar / (1.0 + nbar);
    let mut pk = 1.0 / (1.0 + nbar);
    for k in 0..m {
        rho[(k, k)] = C64::new(pk, 0.0);
        pk *= ratio;
    }
    if s != 0.0 {
        let gen = (&ad * &ad - &a * &a) * C64::new(0.5 * s, 0.0);
        let u = expm(&gen);
        rho = &u * rho * u.adjoint();
    }
    if phi != 0.0 {
        for j in 0..m {
            for i in 0..m {
                rho[(i, j)] *= C64::from_polar(1.0, phi * (i as f64 - j as f64));
            }
        }
    }
    if alpha.norm() != 0.0 {
        let gen = &ad * alpha - &a * alpha.conj();
        let d = expm(&gen);
        rho = &d * rho * d.adjoint();
    }
    rho
}
