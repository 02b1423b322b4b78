use nalgebra::{ComplexField, DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Maximum absolute column sum.
pub fn norm1<T: ComplexField<RealField = f64>>(m: &DMatrix<T>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.clone().abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Largest deviation `|m - m^dagger|` over entries.
pub fn hermiticity_defect(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in 0..=j {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn hermitian_min_eig(m: &DMatrix<C64>) -> Result<f64> {
    if m.nrows() != m.ncols() {
        return Err(Error::invalid("matrix is not square"));
    }
    if m.nrows() == 0 {
        return Err(Error::invalid("empty matrix"));
    }
    let defect = hermiticity_defect(m);
    let scale = norm1(m).max(1.0);
    if defect > 1e-10 * scale {
        return Err(Error::NonHermitian(defect));
    }
    let eig = SymmetricEigen::new(m.clone());
    Ok(eig
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min))
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    let eig = SymmetricEigen::new(m.clone());
    let mut v: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

const PADE13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

const THETA13: f64 = 5.371_920_351_148_152;

/// Dense matrix exponential by Pade(13) scaling and squaring.
pub fn expm<T>(a: &DMatrix<T>) -> DMatrix<T>
where
    T: ComplexField<RealField = f64> + Copy,
{
    let n = a.nrows();
    let nrm = norm1(a);
    let s = if nrm > THETA13 {
        (nrm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let scale = T::from_real(0.5f64.powi(s));
    let a = a.map(|v| v * scale);
    let id = DMatrix::<T>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let c = |k: usize| T::from_real(PADE13[k]);
    let u_inner = a6.map(|v| v * c(13)) + a4.map(|v| v * c(11)) + a2.map(|v| v * c(9));
    let u = &a
        * (&a6 * u_inner
            + a6.map(|v| v * c(7))
            + a4.map(|v| v * c(5))
            + a2.map(|v| v * c(3))
            + id.map(|v| v * c(1)));
    let v_inner = a6.map(|v| v * c(12)) + a4.map(|v| v * c(10)) + a2.map(|v| v * c(8));
    let v = &a6 * v_inner
        + a6.map(|v| v * c(6))
        + a4.map(|v| v * c(4))
        + a2.map(|v| v * c(2))
        + id.map(|v| v * c(0));
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.lu().solve(&p).expect("Pade denominator is singular");
    for _ in 0..s {
        r = &r * &r;
    }
    r
}
