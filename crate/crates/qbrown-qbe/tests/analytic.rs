use nalgebra::Matrix2;
use num_complex::Complex64;
use qbrown_core::{GaussianState, OscillatorParams};
use qbrown_qbe::{
    classify, combined_form, criterion, criterion_roots, first_marginal_time,
    long_time_violation_scan, propagate_gaussian, solve_at, two_photon_coherent_state,
    Classification,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Schrodinger-picture moment flow of the standard equation, written out
/// from the generator: `d<x>/dt = A <x>`, `dV/dt = A V + V A^T + D` with
/// `D = diag(0, 4 Gamma m kT)`. Returns the affine map `(X, Y)` over `[0, t]`
/// with `X = e^{At}` and `Y` the accumulated noise.
fn moment_flow(p: &OscillatorParams, t: f64, steps: usize) -> (Matrix2<f64>, Matrix2<f64>) {
    let a = Matrix2::new(0.0, 1.0 / p.m, -p.m * p.omega * p.omega, -2.0 * p.gamma);
    let d = Matrix2::new(0.0, 0.0, 0.0, 4.0 * p.gamma * p.m * p.kt);
    let f = |x: &Matrix2<f64>, y: &Matrix2<f64>| (a * x, a * y + y * a.transpose() + d);
    let h = t / steps as f64;
    let (mut x, mut y) = (Matrix2::identity(), Matrix2::zeros());
    for _ in 0..steps {
        let (k1x, k1y) = f(&x, &y);
        let (k2x, k2y) = f(&(x + k1x * (0.5 * h)), &(y + k1y * (0.5 * h)));
        let (k3x, k3y) = f(&(x + k2x * (0.5 * h)), &(y + k2y * (0.5 * h)));
        let (k4x, k4y) = f(&(x + k3x * h), &(y + k3y * h));
        x += (k1x + k2x * 2.0 + k3x * 2.0 + k4x) * (h / 6.0);
        y += (k1y + k2y * 2.0 + k3y * 2.0 + k4y) * (h / 6.0);
    }
    (x, y)
}

/// Heisenberg flow `e^{-Bt}` of the reversible part, which carries moments
/// into the interaction picture.
fn frame(p: &OscillatorParams, t: f64) -> Matrix2<f64> {
    let b = Matrix2::new(p.gamma, 1.0 / p.m, -p.m * p.omega * p.omega, -p.gamma);
    (b * -t).exp()
}

fn cov(g: &GaussianState) -> Matrix2<f64> {
    Matrix2::new(g.cov_qq, g.cov_qp, g.cov_qp, g.cov_pp)
}

fn param_sets() -> Vec<OscillatorParams> {
    vec![
        OscillatorParams::from_eta_r(2.0, 1.0, 1.0).unwrap(),
        OscillatorParams::from_eta_r(0.7, 0.3, 0.5).unwrap(),
        OscillatorParams::new(1.3, 2.1, 0.4, 3.0, 0.8).unwrap(),
    ]
}

#[test]
fn closed_form_matches_moment_equations() {
    let g0 = GaussianState {
        mean_q: 0.4,
        mean_p: -0.3,
        ..GaussianState::centered(0.7, 0.6, 0.1)
    };
    for p in param_sets() {
        for t in [0.3, 1.0, 2.5] {
            let (x, y) = moment_flow(&p, t, 20_000);
            let f = frame(&p, t);
            let mean = f * x * nalgebra::Vector2::new(g0.mean_q, g0.mean_p);
            let v = f * (x * cov(&g0) * x.transpose() + y) * f.transpose();
            let got = propagate_gaussian(&p, t, &g0).unwrap();
            let scale = v.amax();
            assert!(
                (cov(&got) - v).amax() < 1e-9 * scale,
                "{p:?} t = {t}: {got:?} vs {v}"
            );
            assert!((got.mean_q - mean[0]).abs() < 1e-9 && (got.mean_p - mean[1]).abs() < 1e-9);
        }
    }
}

/// `det Y - (hbar/2)^2 (1 - det X)^2`: non-negative exactly when the
/// single-mode Gaussian map `(X, Y)` respects the uncertainty relation for
/// every input.
fn channel_margin(x: &Matrix2<f64>, y: &Matrix2<f64>, hbar: f64) -> f64 {
    let gap = 1.0 - x.determinant();
    y.determinant() - 0.25 * hbar * hbar * gap * gap
}

#[test]
fn criterion_sign_matches_channel_condition() {
    let mut rng = ChaCha8Rng::seed_from_u64(20120423);
    let mut checked = 0;
    for _ in 0..60 {
        let et = rng.gen_range(0.3..4.0);
        let r = et * rng.gen_range(0.05..0.95);
        let p = OscillatorParams::from_eta_r(et, r, 1.0).unwrap();
        let u = rng.gen_range(0.05..3.0);
        let s = criterion(&p, u).unwrap();
        if s.abs() < 1e-6 {
            continue;
        }
        let (x, y) = moment_flow(&p, u, 4000);
        let margin = channel_margin(&x, &y, p.hbar);
        assert_eq!(
            margin < 0.0,
            s > 0.0,
            "eta_tilde = {et}, r = {r}, u = {u}: s = {s}, margin = {margin}"
        );
        checked += 1;
    }
    assert!(checked > 50);
}

#[test]
fn excess_fluctuation_forms_decompose() {
    let p = OscillatorParams::from_eta_r(2.0, 1.0, 1.0).unwrap();
    for k in 1..60 {
        let u = 0.05 * k as f64;
        let s = criterion(&p, u).unwrap();
        let f = combined_form(&p, u).unwrap();
        let gap = f.a * f.b - f.c.re * f.c.re;
        if s < -1e-9 {
            assert!(
                f.a >= 0.0 && f.b >= 0.0 && gap >= f.c.im * f.c.im * (1.0 - 1e-9),
                "u = {u}"
            );
        } else if s > 1e-9 {
            assert!(gap < f.c.im * f.c.im, "u = {u}");
        }
    }
}

#[test]
fn lowering_operator_has_unit_commutator() {
    for p in param_sets() {
        for k in 0..40 {
            let sol = solve_at(&p, 0.1 * k as f64).unwrap();
            assert!(sol.commutator_defect(p.hbar) < 1e-10);
        }
    }
}

#[test]
fn marginal_time_keeps_two_photon_state_pure() {
    for p in param_sets() {
        let t = first_marginal_time(&p).unwrap();
        let sol = solve_at(&p, t).unwrap();
        assert_eq!(classify(sol.s), Classification::Marginal);
        let g0 = two_photon_coherent_state(&sol, Complex64::new(0.5, 0.25), p.hbar).unwrap();
        assert!((g0.det() - p.hbar * p.hbar / 4.0).abs() < 1e-10);
        let g = propagate_gaussian(&p, t, &g0).unwrap();
        assert!(
            (g.det() - p.hbar * p.hbar / 4.0).abs() < 1e-8,
            "{}",
            g.det()
        );
        // a generic pure state does not stay pure
        let other = GaussianState::vacuum(p.m, p.omega, p.hbar);
        let go = propagate_gaussian(&p, t, &other).unwrap();
        assert!(go.det() > p.hbar * p.hbar / 4.0 * (1.0 + 1e-3));
    }
}

#[test]
fn violation_at_ten_damping_times() {
    let w = long_time_violation_scan(100.0, 10.0).unwrap();
    let p = w.params;
    assert!(p.kt / (p.hbar * p.gamma) >= 100.0);
    assert!(w.thermal_times > 100.0);
    // 1 - x is taken as a difference of the unscaled energies, since x ~ 1
    let x = p.hbar * p.omega / (2.0 * p.kt);
    let one_minus_x = (2.0 * p.kt - p.hbar * p.omega) / (2.0 * p.kt);
    let et = ((p.omega / p.gamma).powi(2) - 1.0).sqrt();
    let r = et * (one_minus_x * (1.0 + x)).sqrt();
    let s = (et * 10.0).sin().powi(2) - (r * 10f64.sinh()).powi(2);
    assert!(s > 0.0 && w.s_at_u_star > 0.0);
    assert!((s - w.s_at_u_star).abs() < 1e-6 * s);
    assert!(w.u_max >= 10.0);
}

#[test]
fn roots_bracket_sign_changes() {
    let (et, r) = (10.0, 0.1);
    let roots = criterion_roots(et, r, 1e-9, 8.0, 8000);
    assert!(!roots.is_empty());
    for pair in roots.windows(2) {
        let mid = 0.5 * (pair[0] + pair[1]);
        let left = qbrown_qbe::criterion_raw(et, r, pair[0] - 1e-7);
        let right = qbrown_qbe::criterion_raw(et, r, pair[0] + 1e-7);
        assert!(left * right < 0.0);
        assert!(mid > pair[0]);
    }
    // beyond the last root the hyperbolic term wins for good
    let last = *roots.last().unwrap();
    for k in 1..200 {
        assert!(qbrown_qbe::criterion_raw(et, r, last + 0.01 * k as f64) < 0.0);
    }
}

#[test]
fn rejects_bad_inputs() {
    let p = param_sets()[0];
    assert!(criterion(&p, -1.0).is_err());
    assert!(solve_at(&p, f64::NAN).is_err());
    assert!(long_time_violation_scan(0.5, 3.0).is_err());
    assert!(long_time_violation_scan(100.0, 40.0).is_err());
    let bad = GaussianState::centered(0.1, 0.1, 0.0);
    assert!(propagate_gaussian(&p, 1.0, &bad).is_err());
}
