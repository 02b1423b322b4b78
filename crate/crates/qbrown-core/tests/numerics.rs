use nalgebra::{DMatrix, DVector};
use qbrown_core::{adaptive_quad, expm, hermitian_min_eig, rk_integrate, TimeGrid, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn trapezoid<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = 0.5 * (f(a) + f(b));
    for i in 1..n {
        s += f(a + h * i as f64);
    }
    s * h
}

#[test]
fn rational_times_exponential_matches_dense_trapezoid() {
    let g = |x: f64| 2.0 / std::f64::consts::PI * x / (1.0 + x * x) * (-x).exp();
    let v = adaptive_quad(g, 0.0, f64::INFINITY, 1e-12).unwrap();
    // tail beyond 40 is below e^-40
    let reference = trapezoid(g, 0.0, 40.0, 1_000_000);
    assert!((v - reference).abs() < 1e-9, "{v} vs {reference}");
}

#[test]
fn algebraic_tail_converges() {
    let v = adaptive_quad(|x| 1.0 / (1.0 + x * x), 0.0, f64::INFINITY, 1e-12).unwrap();
    assert!((v - std::f64::consts::FRAC_PI_2).abs() < 1e-11);
}

fn poly_from_roots(roots: &[f64]) -> Vec<f64> {
    // monic, coefficients from constant term upward
    let mut c = vec![1.0];
    for &r in roots {
        let mut next = vec![0.0; c.len() + 1];
        for (i, &ci) in c.iter().enumerate() {
            next[i + 1] += ci;
            next[i] -= r * ci;
        }
        c = next;
    }
    c
}

fn companion_min_real_root(coeffs: &[f64]) -> f64 {
    let n = coeffs.len() - 1;
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        m[(i, i - 1)] = 1.0;
    }
    for i in 0..n {
        m[(i, n - 1)] = -coeffs[i];
    }
    m.complex_eigenvalues()
        .iter()
        .filter(|z| z.im.abs() < 1e-6)
        .map(|z| z.re)
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn planted_spectrum_matches_companion_roots() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let planted: Vec<f64> = vec![-1.7, -0.3, 0.2, 0.9, 1.4, 2.2, 3.1, 4.0];
    let raw = DMatrix::<C64>::from_fn(8, 8, |_, _| {
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    let q = raw.qr().q();
    let d = DMatrix::from_diagonal(&DVector::from_iterator(
        8,
        planted.iter().map(|&x| C64::new(x, 0.0)),
    ));
    let h = &q * d * q.adjoint();
    let h = (&h + h.adjoint()) * C64::new(0.5, 0.0);
    let got = hermitian_min_eig(&h).unwrap();
    let via_poly = companion_min_real_root(&poly_from_roots(&planted));
    assert!((got - via_poly).abs() < 1e-8, "{got} vs {via_poly}");
    assert!((got + 1.7).abs() < 1e-10 * 4.0);
}

#[test]
fn rk_matches_matrix_exponential_on_linear_system() {
    // homogeneous exponent system with b11 = b22 = 1/2, b12 = 0
    let m = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, -2.0, 0.0, 0.0, 2.0, 1.0, -1.0, 0.0]);
    let y0 = [0.3, -0.2, 0.7];
    let grid = TimeGrid::uniform(0.0, 5.0, 50).unwrap();
    let tr = rk_integrate(
        |_, y: &[f64], d: &mut [f64]| {
            for i in 0..3 {
                d[i] = (0..3).map(|j| m[(i, j)] * y[j]).sum();
            }
        },
        &y0,
        &grid,
        1e-11,
    )
    .unwrap();
    for (t, y) in tr.times.iter().zip(&tr.states) {
        let e = expm(&(&m * *t)) * DVector::from_column_slice(&y0);
        for i in 0..3 {
            assert!((e[i] - y[i]).abs() < 1e-8 * e[i].abs().max(1.0), "t = {t}");
        }
    }
}

#[test]
fn expm_complex_matches_eigendecomposition() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let raw = DMatrix::<C64>::from_fn(6, 6, |_, _| {
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    let h = (&raw + raw.adjoint()) * C64::new(2.0, 0.0);
    let eig = nalgebra::SymmetricEigen::new(h.clone());
    let phase = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| C64::new(0.0, -l).exp()));
    let reference = &eig.eigenvectors * phase * eig.eigenvectors.adjoint();
    let got = expm(&(h * C64::new(0.0, -1.0)));
    assert!((got - reference).norm() < 1e-10);
}
