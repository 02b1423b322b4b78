use num_complex::Complex64;
use qbrown_core::{GeneratorCoeffs, SymplecticMap2, TimeGrid};
use qbrown_hr::{
    closed_form_w, composite_map, hr_coeffs, interaction_form, solve_gamma_omega, HrModelParams,
};
use qbrown_positivity::{
    gaussian_positivity_condition, integrate_u, metaplectic_transform_w, minkowski_dot,
    minkowski_norm, pointwise_integrand_w, sufficient_checks, w_to_u, HVector, Verdict,
};
use qbrown_wn::{combined_exponent, integrate_w, MasterEqCoefficients, WeiNormanState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_w(rng: &mut ChaCha8Rng) -> WeiNormanState {
    WeiNormanState {
        w1: rng.gen_range(-1.0..2.0),
        w2: rng.gen_range(-1.0..2.0),
        w3: rng.gen_range(-1.0..1.0),
        w4: rng.gen_range(-1.5..0.5),
    }
}

fn random_symplectic(rng: &mut ChaCha8Rng) -> SymplecticMap2 {
    let a: f64 = rng.gen_range(0.3..2.0) * if rng.gen::<bool>() { 1.0 } else { -1.0 };
    let b: f64 = rng.gen_range(-2.0..2.0);
    let c: f64 = rng.gen_range(-2.0..2.0);
    SymplecticMap2::new(a, b, c, (1.0 + b * c) / a).unwrap()
}

fn hr_params() -> HrModelParams {
    HrModelParams {
        alpha: 10.0,
        kappa: 0.1,
        omega0: 2.0,
        kt: 5.0,
        m: 1.0,
        hbar: 1.0,
    }
}

/// Smooth time-dependent coefficients with a one-sided diffusion.
fn driven() -> MasterEqCoefficients {
    MasterEqCoefficients::from_fn(0.8, |t: f64| GeneratorCoeffs {
        b11: 0.5 + 0.2 * t.sin(),
        b12: 0.1 * (1.0 - t).tanh(),
        b22: 0.6,
        k1: 0.4 + 0.1 * (2.0 * t).cos(),
        k2: 0.3,
        k3: Complex64::new(0.05 * t.cos(), 0.08 + 0.02 * t),
    })
}

#[test]
fn gaussian_condition_matches_cone_and_norm() {
    let mut rng = ChaCha8Rng::seed_from_u64(20120423);
    let hbar = 0.9;
    let mut seen = [0usize; 2];
    for _ in 0..2000 {
        let w = random_w(&mut rng);
        let eta = rng.gen_range(0.2..5.0);
        let u = w_to_u(&w, eta, hbar).unwrap();
        let d = w.w4.exp_m1() / (4.0 * hbar);
        let lhs = w.det() - d * d;
        // keep away from the tolerance band
        if lhs.abs() < 1e-6 || w.w1.abs() < 1e-6 || w.w2.abs() < 1e-6 {
            continue;
        }
        let norm = minkowski_norm(&u);
        assert!((norm - hbar * hbar * lhs).abs() < 1e-12 * (1.0 + norm.abs()));
        let via_u = u.u1 >= u.u2.abs() && norm >= 0.0;
        let direct = gaussian_positivity_condition(&w, hbar);
        assert_eq!(via_u, direct, "{w:?}");
        seen[direct as usize] += 1;
    }
    assert!(seen[0] > 100 && seen[1] > 100);
}

#[test]
fn symplectic_maps_preserve_norm_and_u4() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let hbar = 1.3;
    for _ in 0..100 {
        let w = random_w(&mut rng);
        let s = random_symplectic(&mut rng);
        let eta = rng.gen_range(0.5..2.0);
        let u = w_to_u(&w, eta, hbar).unwrap();
        let v = w_to_u(&metaplectic_transform_w(&w, &s).unwrap(), eta, hbar).unwrap();
        let n = minkowski_norm(&u);
        assert!((minkowski_norm(&v) - n).abs() < 1e-10 * n.abs().max(1.0));
        assert_eq!(u.u4, v.u4);
    }
    // u2 alone is not invariant
    let w = WeiNormanState {
        w1: 1.0,
        w2: 2.0,
        w3: 0.0,
        w4: 0.0,
    };
    let f = SymplecticMap2::new(0.0, 1.0, -1.0, 0.0).unwrap();
    let u = w_to_u(&w, 1.0, 1.0).unwrap();
    let v = w_to_u(&metaplectic_transform_w(&w, &f).unwrap(), 1.0, 1.0).unwrap();
    assert_eq!(v.u2, -u.u2);
}

#[test]
fn trivial_trajectories() {
    let grid = TimeGrid::uniform(0.0, 2.0, 20).unwrap();
    let zero = MasterEqCoefficients::constant(GeneratorCoeffs::zero(), 1.0);
    let tr = integrate_u(&zero, 1.0, &grid).unwrap();
    assert!(tr.u.iter().all(|u| minkowski_norm(u) == 0.0 && u.u1 == 0.0));
    let report = tr.checks().unwrap();
    assert!(report
        .rows
        .iter()
        .all(|r| r.cond_norm == Verdict::Marginal && r.cond_integral == Verdict::Marginal));

    let hbar = 0.7;
    let k1 = 0.9;
    let c = GeneratorCoeffs {
        k1,
        ..GeneratorCoeffs::zero()
    };
    let tr = integrate_u(&MasterEqCoefficients::constant(c, hbar), 1.0, &grid).unwrap();
    for (t, u) in tr.times.iter().zip(&tr.u) {
        let expected = 0.5 * hbar * k1 * t;
        assert!((u.u1 - expected).abs() < 1e-12 && (u.u2 - expected).abs() < 1e-12);
        assert!(u.u3 == 0.0 && u.u4 == 0.0);
    }
}

#[test]
fn u_system_agrees_with_exponent_system() {
    let coeffs = driven();
    let grid = TimeGrid::uniform(0.0, 3.0, 60).unwrap();
    for eta in [0.4, 1.0, 2.5] {
        let tr = integrate_u(&coeffs, eta, &grid).unwrap();
        let w = integrate_w(&coeffs, &grid).unwrap();
        for (u, w) in tr.u.iter().zip(&w.states) {
            let v = w_to_u(w, eta, coeffs.hbar).unwrap();
            for (x, y) in [(u.u1, v.u1), (u.u2, v.u2), (u.u3, v.u3), (u.u4, v.u4)] {
                assert!(
                    (x - y).abs() < 1e-8 * y.abs().max(1.0),
                    "eta = {eta}: {x} vs {y}"
                );
            }
        }
    }
}

#[test]
fn norm_derivative_is_weighted_dot() {
    let coeffs = driven();
    let hbar = coeffs.hbar;
    let h = 1e-3;
    let mut ts = Vec::new();
    for t in [0.5, 1.2, 2.7] {
        ts.extend([t - 2.0 * h, t - h, t, t + h, t + 2.0 * h]);
    }
    let mut all = vec![0.0];
    all.extend(ts.iter().copied());
    let grid = TimeGrid::from_values(all).unwrap();
    let tr = integrate_u(&coeffs, 1.7, &grid).unwrap();
    for j in 0..3 {
        let i = 1 + 5 * j;
        let n: Vec<f64> = (0..5).map(|k| minkowski_norm(&tr.u[i + k])).collect();
        let fd = (n[0] - 8.0 * n[1] + 8.0 * n[3] - n[4]) / (12.0 * h);
        let u = &tr.u[i + 2];
        let exact = hbar * hbar * (1.0 + 4.0 * u.u4) * minkowski_dot(u, &tr.h[i + 2]);
        assert!(
            (fd - exact).abs() < 1e-5 * exact.abs().max(1.0),
            "{fd} vs {exact}"
        );
    }
}

#[test]
fn original_variable_forms_agree() {
    let coeffs = driven();
    let grid = TimeGrid::uniform(0.0, 3.0, 30).unwrap();
    let w = integrate_w(&coeffs, &grid).unwrap();
    for eta in [0.3, 1.0, 4.0] {
        for (t, w) in w.times.iter().zip(&w.states) {
            let c = coeffs.at(*t);
            let u = w_to_u(w, eta, coeffs.hbar).unwrap();
            let h = HVector::from_coeffs(&c, eta, coeffs.hbar);
            let a = minkowski_dot(&u, &h);
            let b = pointwise_integrand_w(w, &c, coeffs.hbar);
            assert!((a - b).abs() < 1e-10 * a.abs().max(1.0));
        }
    }
}

#[test]
fn sufficient_conditions_are_ordered() {
    let coeffs = driven();
    let grid = TimeGrid::uniform(0.0, 4.0, 400).unwrap();
    let tr = integrate_u(&coeffs, 1.0, &grid).unwrap();
    let report = tr.checks().unwrap();
    assert!(report.implications_hold());
    // weight exp(2 hbar^2 int h4) against e^{w4}
    let mut acc: f64 = 0.0;
    for i in 1..tr.times.len() {
        let dt = tr.times[i] - tr.times[i - 1];
        acc += 0.5 * dt * (tr.h[i].h4 + tr.h[i - 1].h4);
        let weight = (2.0 * coeffs.hbar * coeffs.hbar * acc).exp();
        assert!((weight - tr.w4[i].exp()).abs() < 1e-5);
    }
}

#[test]
fn pure_w4_drive_fails_the_norm_condition() {
    let c = GeneratorCoeffs {
        k3: Complex64::new(0.0, 0.2),
        ..GeneratorCoeffs::zero()
    };
    let grid = TimeGrid::uniform(0.0, 1.0, 10).unwrap();
    let coeffs = MasterEqCoefficients::constant(c, 1.0);
    let tr = integrate_u(&coeffs, 1.0, &grid).unwrap();
    let w = integrate_w(&coeffs, &grid).unwrap();
    let report = tr.checks().unwrap();
    for (r, w) in report.rows.iter().zip(&w.states).skip(1) {
        assert_eq!((r.u.u1, r.u.u2, r.u.u3), (0.0, 0.0, 0.0));
        assert!(r.u.u4 != 0.0);
        assert_eq!(r.cond_norm, Verdict::Fail);
        assert_eq!(w.det(), 0.0);
    }
}

#[test]
fn haake_reibold_trajectory_passes_every_condition() {
    let p = hr_params();
    let m = solve_gamma_omega(&p).unwrap();
    let grid = TimeGrid::graded(0.0, 10.0, 400, 3.0).unwrap();
    let table = hr_coeffs(&m, &grid).unwrap();
    let tr = integrate_u(&table.master, 1.0, &grid).unwrap();
    let w = integrate_w(&table.master, &grid).unwrap();
    for ((row, u), w) in table.rows.iter().zip(&tr.u).zip(&w.states) {
        let closed = closed_form_w(row, p.m, p.hbar);
        assert!(
            gaussian_positivity_condition(&closed, p.hbar),
            "t = {}",
            row.t
        );
        // u4 = (e^{-int f_pp} - 1)/4 = (R^{-2} - 1)/4
        let expected = 0.25 * (1.0 / row.r_squared() - 1.0);
        assert!((u.u4 - expected).abs() < 1e-6 * expected.max(1e-3));
        let v = w_to_u(w, 1.0, p.hbar).unwrap();
        assert!((u.u1 - v.u1).abs() < 1e-8 * v.u1.abs().max(1.0));
    }
    let report = sufficient_checks(&tr.times, &tr.u, &tr.h, &tr.w4).unwrap();
    for r in &report.rows {
        assert!(r.cond_norm.holds(), "t = {}: norm {:e}", r.t, r.norm);
        assert!(
            r.cond_integral.holds(),
            "t = {}: integral {:e}",
            r.t,
            r.integral
        );
        assert!(r.cond_pointwise.holds(), "t = {}: dot {:e}", r.t, r.dot);
    }
    assert!(report.implications_hold());
}

#[test]
fn interaction_form_is_the_transformed_exponent() {
    let p = hr_params();
    let m = solve_gamma_omega(&p).unwrap();
    for t in [0.3, 1.0, 4.0, 9.0] {
        let row = qbrown_hr::coefficients_at(&m, t).unwrap();
        let s = composite_map(&row, p.m, m.omega, p.hbar).unwrap();
        let w = metaplectic_transform_w(&closed_form_w(&row, p.m, p.hbar), &s).unwrap();
        let got = combined_exponent(&w, p.hbar);
        let want = interaction_form(&row, p.m, p.hbar);
        let scale = want.a.abs() + want.b.abs() + want.c.norm();
        for (x, y) in [
            (got.a, want.a),
            (got.b, want.b),
            (got.c.re, want.c.re),
            (got.c.im, want.c.im),
        ] {
            assert!((x - y).abs() < 1e-10 * scale, "t = {t}: {x} vs {y}");
        }
    }
}
