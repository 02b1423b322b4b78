//! One function per command; each returns the artifacts to write.

use nalgebra::DMatrix;
use num_complex::Complex64;
use qbrown_core::{Error, GaussianState, OscillatorParams, TimeGrid, C64};
use qbrown_fock::{
    balanced_omega_ref, check_commutator_table, check_damping_identities, check_dephasing_average,
    check_exponent_merge, edge_band, exp_superoperator, gaussian_to_fock, merge_pair,
    DampingIdentity, FockDensityMatrix, Picture, SuperCoeffs, Superoperator, TruncatedOperators,
};
use qbrown_hr::{hr_coeffs, solve_gamma_omega, HrModel, HrModelParams};
use qbrown_positivity::{gaussian_positivity_condition, integrate_u, CheckReport};
use qbrown_qbe::{
    classify, criterion_raw, criterion_roots, first_marginal_time, propagate_gaussian, solve_at,
};
use qbrown_witness::{build_witness, lemma_moments, LemmaForm, WitnessConstruction};
use qbrown_wn::{check_determinant_identity, integrate_w, MasterEqCoefficients};
use serde_json::{json, Value};

use crate::config::*;
use crate::output::{fmt_num, num, Artifacts, Cell, Table};
use crate::CliError;

pub fn criterion_scan(p: &CriterionScanParams) -> Result<Artifacts, CliError> {
    let mut out = Artifacts::default();
    let mut t = Table::new("criterion_scan", &["u", "s"]).with_plot("s(u)", &["s"]);
    let n = p.points;
    for i in 0..n {
        let u = if i + 1 == n {
            p.u_max
        } else {
            p.u_min + (p.u_max - p.u_min) * i as f64 / (n - 1) as f64
        };
        t.push_nums(&[u, criterion_raw(p.eta_tilde, p.r, u)]);
    }
    // s(0) = 0 exactly, so the root search starts just above zero
    let lo = if p.u_min > 0.0 {
        p.u_min
    } else {
        1e-9 * p.u_max
    };
    let roots = criterion_roots(p.eta_tilde, p.r, lo, p.u_max, 16 * (n - 1));
    t.footer.push(if roots.is_empty() {
        "sign changes: none".into()
    } else {
        format!(
            "sign changes at u = {}",
            roots
                .iter()
                .map(|&x| fmt_num(x))
                .collect::<Vec<_>>()
                .join(" ")
        )
    });
    out.set(
        "sign_changes",
        roots.iter().map(|&x| num(x)).collect::<Vec<_>>(),
    );
    let positive = t
        .rows
        .iter()
        .filter(|r| matches!(r[1], Cell::Num(s) if s > 0.0))
        .count();
    out.set("samples_non_positive_map", positive);
    out.tables.push(t);
    Ok(out)
}

pub fn qbe_solve(p: &QbeSolveParams) -> Result<Artifacts, CliError> {
    let params = OscillatorParams::from_eta_r(p.eta_tilde, p.r, p.gamma)?;
    let g0 = GaussianState {
        mean_q: p.mean_q,
        mean_p: p.mean_p,
        ..GaussianState::centered(p.cov_qq, p.cov_pp, p.cov_qp)
    };
    if !g0.is_allowable(params.hbar) {
        return Err(CliError::Config(format!(
            "initial state violates det sigma >= hbar^2/4: det = {}",
            g0.det()
        )));
    }
    let mut out = Artifacts::default();
    let cols = [
        "t",
        "u",
        "s",
        "delta",
        "mean_q",
        "mean_p",
        "cov_qq",
        "cov_pp",
        "cov_qp",
        "det_excess",
    ];
    let mut t = Table::new("qbe_solve", &cols).with_plot(
        "interaction-picture moments",
        &["cov_qq", "cov_pp", "cov_qp", "det_excess"],
    );
    let grid = TimeGrid::uniform(0.0, p.t_max, p.points - 1)?;
    let h2 = 0.25 * params.hbar * params.hbar;
    for &time in grid.values() {
        let sol = solve_at(&params, time)?;
        let g = propagate_gaussian(&params, time, &g0)?;
        t.push_nums(&[
            time,
            sol.u,
            sol.s,
            sol.delta,
            g.mean_q,
            g.mean_p,
            g.cov_qq,
            g.cov_pp,
            g.cov_qp,
            g.det() - h2,
        ]);
    }
    out.set("omega", num(params.omega));
    out.set("kt", num(params.kt));
    out.set("m", num(params.m));
    out.set("hbar", num(params.hbar));
    out.set(
        "first_marginal_time",
        first_marginal_time(&params).map(num).unwrap_or(Value::Null),
    );
    let last = solve_at(&params, p.t_max)?;
    out.set("classification_at_t_max", classify(last.s).as_str());
    out.tables.push(t);
    Ok(out)
}

fn hr_model(
    alpha: f64,
    kappa: f64,
    omega0: f64,
    kt: f64,
    m: f64,
    hbar: f64,
) -> Result<HrModel, CliError> {
    Ok(solve_gamma_omega(&HrModelParams {
        alpha,
        kappa,
        omega0,
        kt,
        m,
        hbar,
    })?)
}

pub const R0_TOL: f64 = 1e-8;
pub const A0_TOL: f64 = 1e-10;

pub fn hr_coeffs_cmd(p: &HrCoeffsParams) -> Result<Artifacts, CliError> {
    let model = hr_model(p.alpha, p.kappa, p.omega0, p.kt, p.m, p.hbar)?;
    let grid = TimeGrid::graded(0.0, p.t_max, p.points - 1, p.grading)?;
    let table = hr_coeffs(&model, &grid)?;
    let mut out = Artifacts::default();
    let first = table.rows[0];
    let r0 = (first.r - 1.0).abs();
    if !(r0 <= R0_TOL) {
        return Err(
            Error::gate("haake_reibold", "R(0) = 1", format!("|R(0) - 1| = {r0:e}")).into(),
        );
    }
    out.note(format!(
        "gate R(0) = 1: |R(0) - 1| = {r0:e} (tolerance {R0_TOL:e}) ok"
    ));
    let a0 = first.a.abs();
    if !(a0 <= A0_TOL) {
        return Err(Error::gate("haake_reibold", "A(0) = 0", format!("|A(0)| = {a0:e}")).into());
    }
    out.note(format!(
        "gate A(0) = 0: |A(0)| = {a0:e} (tolerance {A0_TOL:e}) ok"
    ));
    let (lo, hi) = table
        .rows
        .iter()
        .map(|r| r.r_squared())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
            (a.min(v), b.max(v))
        });
    if !(lo > 0.0 && hi <= 1.0 + 1e-12) {
        return Err(Error::gate(
            "haake_reibold",
            "0 < R^2 <= 1",
            format!("R^2 ranges over [{lo:e}, {hi:e}]"),
        )
        .into());
    }
    out.note(format!("gate 0 < R^2 <= 1: R^2 in [{lo:e}, {hi:e}] ok"));

    let cols = [
        "t", "a", "a_dot", "a_ddot", "a_tdot", "r", "x", "y", "x_dot", "y_dot", "x_ddot", "f_pq",
        "f_pp", "d_pp", "d_pq",
    ];
    let mut t = Table::new("hr_coeffs", &cols).with_plot(
        "Haake-Reibold coefficients",
        &["f_pq", "f_pp", "d_pp", "d_pq"],
    );
    for r in &table.rows {
        t.push_nums(&[
            r.t, r.a, r.a_dot, r.a_ddot, r.a_tdot, r.r, r.x, r.y, r.x_dot, r.y_dot, r.x_ddot,
            r.f_pq, r.f_pp, r.d_pp, r.d_pq,
        ]);
    }
    out.set("gamma", num(model.gamma));
    out.set("big_omega", num(model.big_omega));
    out.set("omega", num(model.omega));
    out.set(
        "gates",
        json!({ "r0_deviation": num(r0), "a0": num(a0), "r_squared_min": num(lo), "r_squared_max": num(hi) }),
    );
    out.tables.push(t);
    Ok(out)
}

/// Coefficients of a named system on a grid, plus `hbar`.
pub fn system_coefficients(
    system: &str,
    hr: [f64; 6],
    eta_tilde: f64,
    r: f64,
    gamma: f64,
    grid: &TimeGrid,
) -> Result<(MasterEqCoefficients, f64), CliError> {
    match system {
        "hr" => {
            let model = hr_model(hr[0], hr[1], hr[2], hr[3], hr[4], hr[5])?;
            Ok((hr_coeffs(&model, grid)?.master, hr[5]))
        }
        "qbe" => {
            let p = OscillatorParams::from_eta_r(eta_tilde, r, gamma)?;
            Ok((
                MasterEqCoefficients::constant(p.qbe_coeffs(), p.hbar),
                p.hbar,
            ))
        }
        other => Err(CliError::Config(format!("unknown system {other:?}"))),
    }
}

pub const DETERMINANT_TOL: f64 = 1e-6;

pub fn wn_integrate(p: &WnIntegrateParams) -> Result<Artifacts, CliError> {
    let grid = TimeGrid::graded(0.0, p.t_max, p.points - 1, p.grading)?;
    let hr = [p.alpha, p.kappa, p.omega0, p.kt, p.m, p.hbar];
    let (coeffs, _) = system_coefficients(&p.system, hr, p.eta_tilde, p.r, p.gamma, &grid)?;
    let traj = integrate_w(&coeffs, &grid)?;
    let residual = check_determinant_identity(&coeffs, &traj);
    if !(residual < DETERMINANT_TOL) {
        return Err(Error::gate(
            "wei_norman",
            "determinant identity",
            format!("max relative residual {residual:e}"),
        )
        .into());
    }
    let mut out = Artifacts::default();
    out.note(format!(
        "determinant identity: max relative residual {residual:e}"
    ));
    let mut t = Table::new("wn_integrate", &["t", "w1", "w2", "w3", "w4"])
        .with_plot("exponent coordinates", &["w1", "w2", "w3", "w4"]);
    for (time, w) in traj.times.iter().zip(&traj.states) {
        t.push_nums(&[*time, w.w1, w.w2, w.w3, w.w4]);
    }
    t.footer.push(format!(
        "determinant identity max relative residual = {}",
        fmt_num(residual)
    ));
    out.set("determinant_residual", num(residual));
    out.tables.push(t);
    Ok(out)
}

/// Rows where a stronger condition holds while a weaker one fails.
pub fn implication_violations(report: &CheckReport) -> usize {
    let mut pointwise_so_far = true;
    report
        .rows
        .iter()
        .filter(|r| {
            pointwise_so_far &= r.cond_pointwise.holds();
            let c_to_b = !pointwise_so_far || r.cond_integral.holds();
            let b_to_a = !r.cond_integral.holds() || r.cond_norm.holds();
            !(c_to_b && b_to_a)
        })
        .count()
}

pub fn positivity_report(p: &PositivityReportParams) -> Result<Artifacts, CliError> {
    let grid = TimeGrid::graded(0.0, p.t_max, p.points - 1, p.grading)?;
    let hr = [p.alpha, p.kappa, p.omega0, p.kt, p.m, p.hbar];
    let (coeffs, hbar) = system_coefficients(&p.system, hr, p.eta_tilde, p.r, p.gamma, &grid)?;
    let ut = integrate_u(&coeffs, p.eta, &grid)?;
    let report = ut.checks()?;
    let w = integrate_w(&coeffs, &grid)?;
    let cols = [
        "t",
        "u1",
        "u2",
        "u3",
        "u4",
        "norm",
        "dot",
        "integral",
        "cond_gaussian",
        "cond_norm",
        "cond_integral",
        "cond_pointwise",
    ];
    let mut t = Table::new("positivity_report", &cols).with_plot(
        "sufficient-condition quantities",
        &["norm", "dot", "integral"],
    );
    let mut gaussian_fail = 0;
    for (r, w) in report.rows.iter().zip(&w.states) {
        let g = gaussian_positivity_condition(w, hbar);
        gaussian_fail += usize::from(!g);
        t.push(vec![
            r.t.into(),
            r.u.u1.into(),
            r.u.u2.into(),
            r.u.u3.into(),
            r.u.u4.into(),
            r.norm.into(),
            r.dot.into(),
            r.integral.into(),
            if g { "pass" } else { "fail" }.into(),
            r.cond_norm.as_str().into(),
            r.cond_integral.as_str().into(),
            r.cond_pointwise.as_str().into(),
        ]);
    }
    let violations = implication_violations(&report);
    t.footer.push(format!(
        "implication audit (pointwise => integrated => norm): {violations} violations in {} rows",
        report.rows.len()
    ));
    let mut out = Artifacts::default();
    let count = |f: &dyn Fn(&qbrown_positivity::CheckRow) -> bool| {
        report.rows.iter().filter(|r| f(r)).count()
    };
    out.set("rows", report.rows.len());
    out.set("gaussian_fail", gaussian_fail);
    out.set("norm_fail", count(&|r| !r.cond_norm.holds()));
    out.set("integral_fail", count(&|r| !r.cond_integral.holds()));
    out.set("pointwise_fail", count(&|r| !r.cond_pointwise.holds()));
    out.set("implication_violations", violations);
    out.tables.push(t);
    Ok(out)
}

/// `Tr [A rho A^dagger]` for `A = q + (beta + i lambda) p`.
pub fn oracle_witness_value(
    ops: &TruncatedOperators,
    rho: &DMatrix<C64>,
    beta: f64,
    lambda: f64,
) -> f64 {
    let a = &ops.q_mat + &ops.p_mat * C64::new(beta, lambda);
    (&a * rho * a.adjoint()).trace().re
}

/// Minimum eigenvalue, leakage and witness value of the form applied to
/// `sigma` in `n` levels at `omega_ref`.
fn witness_oracle(
    form: &LemmaForm,
    sigma: &GaussianState,
    w: &WitnessConstruction,
    omega_ref: f64,
    n: usize,
    p: &WitnessParams,
) -> qbrown_core::Result<(f64, f64, f64)> {
    let ops = TruncatedOperators::new(n, p.m, omega_ref, p.hbar)?;
    let rho0 = gaussian_to_fock(sigma, &ops, p.leak_tol)?;
    let l = Superoperator::new(&ops, SuperCoeffs::from(form.as_quadratic()));
    let mut rho = FockDensityMatrix::new(exp_superoperator(&l, &rho0.rho)?, 0.0);
    rho.hermitize();
    let leakage = rho0.leakage + rho.edge_population(edge_band(n));
    if leakage > p.leak_tol {
        return Err(Error::gate(
            "fock_oracle",
            "leakage",
            format!(
                "N = {n} misses weight {leakage:e} (tolerance {:e})",
                p.leak_tol
            ),
        ));
    }
    let i_oracle = oracle_witness_value(&ops, &rho.rho, w.beta_bar, w.lambda);
    Ok((rho.min_eig()?, leakage, i_oracle))
}

pub fn witness(p: &WitnessParams) -> Result<Artifacts, CliError> {
    let form = LemmaForm::new(p.eta_form, p.xi, Complex64::new(p.zeta_re, p.zeta_im));
    let w = build_witness(&form, p.hbar)?;
    if !(w.i_value < 0.0) {
        return Err(Error::gate(
            "witness",
            "negative witness",
            format!("I = {:e}", w.i_value),
        )
        .into());
    }
    let sigma = w.sigma();
    // The output is squeezed far more than the input and its spectrum decays
    // slowly, so the basis is balanced for the output when the input still
    // fits there.
    let (q2, p2, _) = lemma_moments(&form, w.sigma_moments(), p.hbar)?;
    let w_in = balanced_omega_ref(&sigma, p.m);
    let w_out = (p2.abs() / q2.abs()).sqrt() / p.m;
    let mut last_err = None;
    let mut chosen = None;
    for omega_ref in [w_out, (w_in * w_out).sqrt(), w_in] {
        match witness_oracle(&form, &sigma, &w, omega_ref, p.n, p) {
            Ok(first) => {
                chosen = Some((omega_ref, first));
                break;
            }
            Err(e) => last_err = Some(e),
        }
    }
    let Some((omega_ref, first)) = chosen else {
        return Err(last_err.expect("three candidates tried").into());
    };
    let second = witness_oracle(&form, &sigma, &w, omega_ref, p.n_check, p)?;
    let mut out = Artifacts::default();
    let mut t = Table::new("witness", &["n", "min_eig", "leakage", "i_oracle"]);
    let mut oracle = vec![];
    for (n, (min_eig, leakage, i_oracle)) in [(p.n, first), (p.n_check, second)] {
        t.push_nums(&[n as f64, min_eig, leakage, i_oracle]);
        oracle.push(json!({ "n": n, "min_eig": num(min_eig), "leakage": num(leakage), "i_value": num(i_oracle) }));
    }
    out.set("i_value", num(w.i_value));
    out.set("lambda1", num(w.lambda1));
    out.set("lambda2", num(w.lambda2));
    out.set("lambda3", num(w.lambda3));
    out.set("lambda", num(w.lambda));
    out.set("beta_bar", num(w.beta_bar));
    out.set("d_p", num(w.d_p));
    out.set("omega_ref", num(omega_ref));
    out.set("oracle", oracle);
    out.tables.push(t);
    Ok(out)
}

/// Operator that is supported on the lowest `support` levels with fixed
/// pseudo-random entries, Hermitian and of unit Frobenius norm.
pub fn low_lying(n: usize, support: usize) -> DMatrix<C64> {
    let mut x = DMatrix::zeros(n, n);
    for j in 0..support {
        for i in 0..support {
            let v = (((i * 31 + j * 17) % 11) as f64 - 5.0) / 7.0;
            let w = (((i * 7 + j * 3) % 5) as f64 - 2.0) / 9.0;
            x[(i, j)] = C64::new(v, if i == j { 0.0 } else { w });
        }
    }
    let h = (&x + x.adjoint()) * C64::new(0.5, 0.0);
    let s = h.norm();
    h / C64::new(s, 0.0)
}

fn lowering_coeffs(ops: &TruncatedOperators) -> (C64, C64) {
    let s = (2.0 * ops.m * ops.omega_ref * ops.hbar).sqrt();
    (
        C64::new(ops.m * ops.omega_ref / s, 0.0),
        C64::new(0.0, 1.0 / s),
    )
}

fn projector(n: usize, k: usize) -> DMatrix<C64> {
    let mut m = DMatrix::zeros(n, n);
    m[(k, k)] = C64::new(1.0, 0.0);
    m
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityRow {
    pub identity: String,
    pub parameter: f64,
    pub residual: f64,
    /// `None` for rows that are reported but not required to hold.
    pub tolerance: Option<f64>,
}

impl IdentityRow {
    pub fn holds(&self) -> bool {
        self.tolerance.is_none_or(|tol| self.residual < tol)
    }
}

pub const IDENTITY_TOL: f64 = 1e-8;

/// Every operator identity with its residual.
pub fn identity_suite(n: usize) -> Result<Vec<IdentityRow>, CliError> {
    let mut rows = vec![];
    let mut row = |identity: &str, parameter: f64, residual: f64, enforced: bool| {
        rows.push(IdentityRow {
            identity: identity.into(),
            parameter,
            residual,
            tolerance: enforced.then_some(IDENTITY_TOL),
        })
    };
    let ops = TruncatedOperators::new(n, 1.0, 1.0, 1.0)?;
    let (bq, bp) = lowering_coeffs(&ops);
    let mut rho = projector(n, 1) * C64::new(0.6, 0.0) + projector(n, 3) * C64::new(0.4, 0.0);
    rho[(1, 3)] = C64::new(0.2, 0.1);
    rho[(3, 1)] = C64::new(0.2, -0.1);
    let x = low_lying(n, 6);
    for r in [0.1, 0.5, 1.0, 2.0] {
        let st = check_damping_identities(
            &ops,
            bq,
            bp,
            r,
            &rho,
            DampingIdentity::Attenuator,
            Picture::State,
        )?;
        row("attenuator (state)", r, st.max(), true);
        let ob = check_damping_identities(
            &ops,
            bq,
            bp,
            r,
            &x,
            DampingIdentity::Attenuator,
            Picture::Observable,
        )?;
        row("attenuator (observable)", r, ob.max(), true);
        let amp = check_damping_identities(
            &ops,
            bq,
            bp,
            r,
            &x,
            DampingIdentity::Amplifier,
            Picture::Observable,
        )?;
        row(
            "amplifier with gain e^{2r} - 1 (observable)",
            r,
            amp.max(),
            true,
        );
        let printed = check_damping_identities(
            &ops,
            bq,
            bp,
            r,
            &x,
            DampingIdentity::AmplifierDampingWeight,
            Picture::Observable,
        )?;
        row(
            "amplifier with weight 1 - e^{-2r} (observable)",
            r,
            printed.exp_vs_sandwich,
            false,
        );
    }
    let vac = projector(n, 0);
    for tau in [1e-6, 0.05, 0.5, 2.0] {
        row(
            "dephasing average, A = q",
            tau,
            check_dephasing_average(&ops.q_mat, tau, &vac)?,
            true,
        );
    }
    let small = TruncatedOperators::new(20, 1.0, 1.0, 1.0)?;
    let number = small.lowering().adjoint() * small.lowering();
    let coh = gaussian_to_fock(
        &GaussianState {
            mean_q: 1.0,
            mean_p: 0.5,
            ..GaussianState::vacuum(1.0, 1.0, 1.0)
        },
        &small,
        1e-10,
    )?;
    for tau in [0.05, 0.5, 2.0] {
        row(
            "dephasing average, A = a^dagger a",
            tau,
            check_dephasing_average(&number, tau, &coh.rho)?,
            true,
        );
    }
    let merge_ops = TruncatedOperators::new(30, 1.0, 4.0, 1.0)?;
    let (a, b) = merge_pair(1.0);
    let vac30 = projector(30, 0);
    for (r1, r2) in [(0.3, 0.7), (-0.3, 0.4)] {
        let m = check_exponent_merge(&merge_ops, a, b, r1, r2, &vac30)?;
        row(&format!("exponent merge, r2 = {r2}"), r1, m.residual, true);
    }
    let table_ops = TruncatedOperators::new(30, 1.3, 0.9, 0.7)?;
    for e in check_commutator_table(&table_ops, 0.8, -0.35, 0.45, &low_lying(30, 12)) {
        row(&format!("commutator {}", e.label), 0.0, e.residual, true);
    }
    Ok(rows)
}

pub fn identity_check(p: &IdentityCheckParams) -> Result<Artifacts, CliError> {
    let rows = identity_suite(p.n)?;
    let mut out = Artifacts::default();
    let mut t = Table::new(
        "identity_check",
        &["identity", "parameter", "residual", "tolerance", "status"],
    );
    for r in &rows {
        t.push(vec![
            r.identity.clone().into(),
            r.parameter.into(),
            r.residual.into(),
            r.tolerance.map_or(Cell::Text("none".into()), Cell::Num),
            match (r.tolerance, r.holds()) {
                (None, _) => "reported",
                (Some(_), true) => "pass",
                (Some(_), false) => "fail",
            }
            .into(),
        ]);
    }
    let failed: Vec<&IdentityRow> = rows.iter().filter(|r| !r.holds()).collect();
    out.set("rows", rows.len());
    out.set("failed", failed.len());
    out.tables.push(t);
    if let Some(f) = failed.first() {
        out.failure = Some(Error::gate(
            "fock_oracle",
            "operator identity",
            format!(
                "{} at {}: residual {:e}",
                f.identity, f.parameter, f.residual
            ),
        ));
    }
    Ok(out)
}
