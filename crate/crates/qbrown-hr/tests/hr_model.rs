use nalgebra::DMatrix;
use num_complex::Complex64;
use qbrown_core::{ExponentQuadraticForm, TimeGrid};
use qbrown_hr::{
    closed_form_w, coefficients_at, composite_map, hr_coeffs, interaction_form, m_tilde_map,
    manifest_factors, n_map, positive_factorization, solve_gamma_omega, trajectory_a,
    HrModelParams,
};
use qbrown_wn::integrate_w;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn params() -> HrModelParams {
    HrModelParams {
        alpha: 10.0,
        kappa: 0.1,
        omega0: 2.0,
        kt: 5.0,
        m: 1.0,
        hbar: 1.0,
    }
}

#[test]
fn exponents_are_roots_of_the_response_cubic() {
    // Laplace transform of A is (s + alpha) / (s^3 + alpha s^2 + omega0^2 s + alpha omega^2)
    let p = params();
    let model = solve_gamma_omega(&p).unwrap();
    let c = [
        p.alpha * p.renormalized_omega_sq(),
        p.omega0 * p.omega0,
        p.alpha,
    ];
    let comp = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, -c[0], 1.0, 0.0, -c[1], 0.0, 1.0, -c[2]]);
    let roots = comp.complex_eigenvalues();
    for l in model.lambdas {
        let best = roots
            .iter()
            .map(|r| (r - l).norm())
            .fold(f64::INFINITY, f64::min);
        assert!(best < 1e-10, "{l} not a root");
    }
}

#[test]
fn weak_coupling_limit() {
    for kappa in [1e-3, 1e-4, 1e-5] {
        let p = HrModelParams { kappa, ..params() };
        let m = solve_gamma_omega(&p).unwrap();
        let first_order =
            0.5 * kappa * p.alpha * p.alpha / (p.alpha * p.alpha + p.omega0 * p.omega0);
        let rel = (m.gamma - first_order).abs() / first_order;
        assert!(rel < 10.0 * kappa, "kappa = {kappa}: rel = {rel}");
        assert!((m.big_omega - p.omega0).abs() < 10.0 * kappa);
    }
}

#[test]
fn response_derivatives_match_finite_differences() {
    let m = solve_gamma_omega(&params()).unwrap();
    let ts = [0.3, 2.0, 15.0];
    let h = 1e-4;
    for t in ts {
        let s = trajectory_a(&m, &[t - h, t, t + h]);
        for k in 0..3 {
            let fd = (s[2][k] - s[0][k]) / (2.0 * h);
            assert!((fd - s[1][k + 1]).abs() < 1e-6 * s[1][k + 1].abs().max(1.0));
        }
    }
}

fn simpson(f: impl Fn(f64) -> Complex64, a: f64, b: f64, n: usize) -> Complex64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + h * i as f64) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * (h / 3.0)
}

/// Direct double integral over frequency and time: Simpson in `t'` with
/// resolution following the phase `omega t`, Simpson in `omega` up to a
/// cutoff, plus the leading `A(t)^2 / omega^2` tail beyond it.
fn brute_force_x(t: f64) -> f64 {
    let p = params();
    let m = solve_gamma_omega(&p).unwrap();
    let inner = |w: f64| -> f64 {
        let nt = (((w * t / 0.2).ceil() as usize).max(400) + 1) & !1;
        let f = |s: f64| Complex64::from_polar(m.response(s)[0], w * s);
        simpson(f, 0.0, t, nt).norm_sqr()
    };
    let weight = |w: f64| -> f64 {
        let x = p.hbar * w / (2.0 * p.kt);
        let wcoth = if x < 1e-8 {
            2.0 * p.kt / p.hbar
        } else {
            w / x.tanh()
        };
        p.hbar * p.kappa * p.alpha * p.alpha / std::f64::consts::PI * wcoth
            / (p.alpha * p.alpha + w * w)
    };
    let g = |w: f64| Complex64::new(weight(w) * inner(w), 0.0);
    let w_cut = 1500.0;
    let body = simpson(g, 0.0, 50.0, 5000).re
        + simpson(g, 50.0, w_cut, 2 * ((w_cut - 50.0) / 0.4) as usize).re;
    let a_t = m.response(t)[0];
    let tail = p.hbar * p.kappa * p.alpha * p.alpha * a_t * a_t
        / (2.0 * std::f64::consts::PI * w_cut * w_cut);
    body + tail
}

#[test]
fn noise_integral_matches_brute_force_quadrature() {
    let m = solve_gamma_omega(&params()).unwrap();
    for t in [0.7, 2.5] {
        let x = coefficients_at(&m, t).unwrap().x;
        let reference = brute_force_x(t);
        let rel = (x - reference).abs() / reference;
        assert!(rel < 1e-4, "t = {t}: {x} vs {reference} (rel {rel:e})");
    }
}

#[test]
fn diffusion_vanishes_at_origin() {
    let m = solve_gamma_omega(&params()).unwrap();
    let c = coefficients_at(&m, 0.0).unwrap();
    assert_eq!((c.d_pp, c.d_pq), (0.0, 0.0));
    assert!((c.r - 1.0).abs() < 1e-8);
    // the bare frequency at t = 0
    assert!((c.f_pq + params().omega0.powi(2)).abs() < 1e-9);
    let w = closed_form_w(&c, 1.0, 1.0);
    assert_eq!(w.as_array()[..3], [0.0; 3]);
}

fn sup_relative(a: &[f64], b: &[f64]) -> f64 {
    let scale = a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
        / scale
}

#[test]
fn wei_norman_integration_matches_closed_form() {
    let p = params();
    let m = solve_gamma_omega(&p).unwrap();
    let grid = TimeGrid::graded(0.0, 10.0, 400, 3.0).unwrap();
    let table = hr_coeffs(&m, &grid).unwrap();
    let tr = integrate_w(&table.master, &grid).unwrap();
    let closed: Vec<[f64; 4]> = table
        .rows
        .iter()
        .map(|r| closed_form_w(r, p.m, p.hbar).as_array())
        .collect();
    for k in 0..4 {
        let a: Vec<f64> = closed.iter().map(|w| w[k]).collect();
        let b: Vec<f64> = tr.states.iter().map(|w| w.as_array()[k]).collect();
        let e = sup_relative(&a, &b);
        assert!(e < 1e-4, "component {k}: {e:e}");
    }
    for (r, w) in table.rows.iter().zip(&closed) {
        assert!(w[0] >= -1e-15 && w[1] >= -1e-15);
        assert!(r.r > 0.0 && r.r <= 1.0 + 1e-12);
    }
}

#[test]
fn closed_form_determinant() {
    let m = solve_gamma_omega(&params()).unwrap();
    for t in [0.5, 3.0, 8.0] {
        let r = coefficients_at(&m, t).unwrap();
        let w = closed_form_w(&r, 1.0, 1.0);
        let expected = (r.x * r.y - 0.25 * r.x_dot * r.x_dot) / (4.0 * r.r.powi(4));
        assert!((w.det() - expected).abs() < 1e-12 * expected.abs().max(1e-300));
        assert!(expected > 0.0);
    }
}

#[test]
fn random_forms_reconstruct() {
    let mut rng = ChaCha8Rng::seed_from_u64(20120423);
    let hbar = 0.7;
    for _ in 0..200 {
        let a: f64 = rng.gen_range(0.01..3.0);
        let b: f64 = rng.gen_range(0.01..3.0);
        let re = rng.gen_range(-1.0..1.0) * (a * b).sqrt() * 0.99;
        let im = rng.gen_range(-2.0..2.0);
        let f = ExponentQuadraticForm {
            a,
            b,
            c: Complex64::new(re, im),
        };
        let pf = positive_factorization(&f, hbar).unwrap();
        assert!((pf.commutator(hbar) - 1.0).abs() < 1e-10);
        let target = [
            Complex64::new(-a, 0.0),
            f.c,
            f.c.conj(),
            Complex64::new(-b, 0.0),
        ];
        for (x, y) in pf.bracket_coefficients().iter().zip(target) {
            assert!((x - y).norm() < 1e-10, "{x} vs {y}");
        }
    }
}

#[test]
fn reversible_factors_are_symplectic_and_compose() {
    let p = params();
    let m = solve_gamma_omega(&p).unwrap();
    let omega = m.omega;
    for t in [0.0, 0.4, 2.0, 7.0] {
        let r = coefficients_at(&m, t).unwrap();
        let n = n_map(&r, p.m, omega, p.hbar).unwrap();
        let mt = m_tilde_map(&r, p.m, omega, p.hbar).unwrap();
        assert!((n.det() - 1.0).abs() < 1e-12 && (mt.det() - 1.0).abs() < 1e-10);
        let c = composite_map(&r, p.m, omega, p.hbar).unwrap();
        let expected = [
            r.a_dot / r.r,
            r.a / (p.m * r.r),
            p.m * r.a_ddot / r.r,
            r.a_dot / r.r,
        ];
        for (x, y) in [c.a, c.b, c.c, c.d].iter().zip(expected) {
            assert!((x - y).abs() < 1e-12, "t = {t}");
        }
    }
}

#[test]
fn manifest_form_has_non_positive_factors() {
    let p = params();
    let m = solve_gamma_omega(&p).unwrap();
    for t in [0.5, 1.5, 4.0, 9.0] {
        let r = coefficients_at(&m, t).unwrap();
        let form = interaction_form(&r, p.m, p.hbar);
        let pf = positive_factorization(&form, p.hbar).unwrap();
        assert!(pf.two_generator);
        let (cb, cbd) = manifest_factors(&r, p.hbar);
        assert!(cb <= 0.0 && cbd <= 0.0);
        let (sb, sbd) = pf.separated_exponents();
        assert!(
            (cb - sb).abs() < 1e-8 * cb.abs().max(1e-3),
            "t = {t}: {cb} vs {sb}"
        );
        assert!(
            (cbd - sbd).abs() < 1e-8 * cbd.abs().max(1e-3),
            "t = {t}: {cbd} vs {sbd}"
        );
    }
}
