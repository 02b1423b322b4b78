//! Two computation paths for the same quantity, with per-time residuals.

use nalgebra::Vector3;
use num_complex::Complex64;
use qbrown_core::{Error, GaussianState, GeneratorCoeffs, OscillatorParams, TimeGrid};
use qbrown_fock::{
    gaussian_to_fock, propagate, to_interaction_picture, PropagateOptions, TruncatedOperators,
};
use qbrown_hr::{closed_form_w, hr_coeffs, solve_gamma_omega, HrModelParams};
use qbrown_wn::{
    integrate_w, principal_matrix, riccati_reduce, MasterEqCoefficients, RiccatiBranch,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use crate::config::OracleCompareParams;
use crate::output::{fmt_num, num, Artifacts, Table};
use crate::sweeps::{
    criterion_oracle_sweep, random_allowable_gaussian, SweepConfig, WitnessOutcome,
};
use crate::CliError;

pub const SCENARIOS: [&str; 4] = [
    "analytic-vs-oracle",
    "wn-vs-closed-form",
    "riccati-vs-direct",
    "criterion-vs-oracle",
];

/// Per-time residuals of one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub times: Vec<f64>,
    pub residuals: Vec<f64>,
    pub tolerance: f64,
}

impl Comparison {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }

    pub fn passes(&self) -> bool {
        self.max_residual() < self.tolerance
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-3)
}

fn moment_residual(a: &GaussianState, b: &GaussianState) -> f64 {
    [
        rel(a.mean_q, b.mean_q),
        rel(a.mean_p, b.mean_p),
        rel(a.cov_qq, b.cov_qq),
        rel(a.cov_pp, b.cov_pp),
        rel(a.cov_qp, b.cov_qp),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

/// Truncated propagation of random Gaussians under the standard equation,
/// moved to the interaction picture, against the closed form.
pub fn analytic_vs_oracle(n: usize, states: usize, seed: u64) -> Result<Comparison, CliError> {
    let p = OscillatorParams::from_eta_r(2.0, 1.0, 1.0)?;
    let c = p.qbe_coeffs();
    let ops = TruncatedOperators::new(n, p.m, p.omega, p.hbar)?;
    let grid = TimeGrid::uniform(0.0, 3.0, 12)?;
    let opts = PropagateOptions {
        step_factor: 2.5,
        halving_check: false,
        ..Default::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let initial: Vec<GaussianState> = (0..states)
        .map(|_| random_allowable_gaussian(&mut rng, &p))
        .collect();
    let per_state = initial
        .par_iter()
        .map(|g0| {
            let rho0 = gaussian_to_fock(g0, &ops, 1e-8)?;
            let tr = propagate(&ops, |_| c, &grid, &rho0, &opts)?;
            tr.times
                .iter()
                .zip(&tr.states)
                .map(|(&t, s)| {
                    let ri = to_interaction_picture(&ops, c.b11, c.b12, c.b22, t, &s.rho);
                    let exact = qbrown_qbe::propagate_gaussian(&p, t, g0)?;
                    Ok(moment_residual(&ops.moments(&ri), &exact))
                })
                .collect::<qbrown_core::Result<Vec<f64>>>()
        })
        .collect::<qbrown_core::Result<Vec<_>>>()?;
    let residuals = (0..grid.len())
        .map(|i| per_state.iter().map(|r| r[i]).fold(0.0, f64::max))
        .collect();
    Ok(Comparison {
        times: grid.values().to_vec(),
        residuals,
        tolerance: 1e-4,
    })
}

pub fn hr_test_params() -> HrModelParams {
    HrModelParams {
        alpha: 10.0,
        kappa: 0.1,
        omega0: 2.0,
        kt: 5.0,
        m: 1.0,
        hbar: 1.0,
    }
}

/// Exponent coordinates from integration against the closed form, relative
/// to each component's largest magnitude on the grid.
pub fn wn_vs_closed_form(t_max: f64, steps: usize) -> Result<Comparison, CliError> {
    let p = hr_test_params();
    let model = solve_gamma_omega(&p)?;
    let grid = TimeGrid::graded(0.0, t_max, steps, 3.0)?;
    let table = hr_coeffs(&model, &grid)?;
    let tr = integrate_w(&table.master, &grid)?;
    let closed: Vec<[f64; 4]> = table
        .rows
        .iter()
        .map(|r| closed_form_w(r, p.m, p.hbar).as_array())
        .collect();
    let mut sup = [0.0f64; 4];
    for w in &closed {
        for k in 0..4 {
            sup[k] = sup[k].max(w[k].abs());
        }
    }
    let residuals = closed
        .iter()
        .zip(&tr.states)
        .map(|(c, w)| {
            let w = w.as_array();
            (0..4)
                .map(|k| (w[k] - c[k]).abs() / sup[k].max(1e-300))
                .fold(0.0, f64::max)
        })
        .collect();
    Ok(Comparison {
        times: grid.values().to_vec(),
        residuals,
        tolerance: 1e-4,
    })
}

/// Null-cone initial data used by every Riccati scenario.
pub const RICCATI_DATA: [f64; 3] = [1.0, 4.0, -2.0];

/// Both branch reconstructions against the principal matrix applied to the
/// initial data.
pub fn riccati_vs_direct(
    coeffs: &MasterEqCoefficients,
    grid: &TimeGrid,
) -> Result<Comparison, CliError> {
    let v0 = Vector3::from(RICCATI_DATA);
    let mut residuals = vec![0.0f64; grid.len()];
    for (branch, comp) in [(RiccatiBranch::One, 0), (RiccatiBranch::Two, 1)] {
        let r = riccati_reduce(coeffs, grid, branch, RICCATI_DATA)?;
        for (i, (t, w)) in r.times.iter().zip(&r.reconstructed).enumerate() {
            let d = (principal_matrix(coeffs, *t, grid.t0())? * v0)[comp];
            residuals[i] = residuals[i].max((w - d).abs() / d.abs());
        }
    }
    Ok(Comparison {
        times: grid.values().to_vec(),
        residuals,
        tolerance: 1e-6,
    })
}

pub fn constant_riccati_coeffs(b11: f64, b12: f64, b22: f64) -> MasterEqCoefficients {
    MasterEqCoefficients::constant(
        GeneratorCoeffs {
            b11,
            b12,
            b22,
            k1: 0.4,
            k2: 0.15,
            k3: Complex64::new(-0.05, -0.25),
        },
        1.0,
    )
}

fn comparison_artifacts(name: &str, cmp: &Comparison) -> Artifacts {
    let mut out = Artifacts::default();
    let mut t = Table::new(
        &format!("oracle_compare_{}", name.replace('-', "_")),
        &["t", "residual"],
    )
    .with_plot(name, &["residual"]);
    for (&time, &r) in cmp.times.iter().zip(&cmp.residuals) {
        t.push_nums(&[time, r]);
    }
    let max = cmp.max_residual();
    let verdict = if cmp.passes() { "pass" } else { "fail" };
    t.footer.push(format!(
        "max residual = {} tolerance = {} {verdict}",
        fmt_num(max),
        fmt_num(cmp.tolerance)
    ));
    out.set("scenario", name);
    out.set("max_residual", num(max));
    out.set("tolerance", num(cmp.tolerance));
    out.set("pass", cmp.passes());
    out.note(format!(
        "{name}: max residual {max:e} (tolerance {:e}) {verdict}",
        cmp.tolerance
    ));
    if !cmp.passes() {
        out.failure = Some(Error::gate(
            "cli",
            "scenario tolerance",
            format!("{name}: max residual {max:e} exceeds {:e}", cmp.tolerance),
        ));
    }
    out.tables.push(t);
    out
}

fn criterion_artifacts(p: &OracleCompareParams, seed: u64) -> Result<Artifacts, CliError> {
    let config = SweepConfig {
        states: p.states,
        n: p.n,
        n_check: p.n + 20,
        seed,
        ..Default::default()
    };
    let report = criterion_oracle_sweep(&config)?;
    let mut out = Artifacts::default();
    let mut t = Table::new(
        "oracle_compare_criterion_vs_oracle",
        &["eta_tilde", "r", "u", "s", "kind", "value", "value_check"],
    );
    for pair in &report.pairs {
        t.push(vec![
            pair.eta_tilde.into(),
            pair.r.into(),
            f64::NAN.into(),
            f64::NAN.into(),
            "positivity margin".into(),
            pair.worst_margin.into(),
            f64::NAN.into(),
        ]);
        for w in &pair.witnesses {
            let (kind, a, b) = match &w.outcome {
                WitnessOutcome::Checked {
                    min_eig,
                    min_eig_check,
                    ..
                } => ("witness", *min_eig, *min_eig_check),
                WitnessOutcome::Unrepresentable {
                    extended: Some((a, b)),
                    ..
                } => ("witness (extended truncation)", *a, *b),
                WitnessOutcome::Unrepresentable { extended: None, .. } => {
                    ("witness not representable", f64::NAN, f64::NAN)
                }
                WitnessOutcome::HypothesesFail => ("hypotheses fail", f64::NAN, f64::NAN),
                WitnessOutcome::ConstructionFailed { .. } => {
                    ("construction failed", f64::NAN, f64::NAN)
                }
            };
            t.push(vec![
                pair.eta_tilde.into(),
                pair.r.into(),
                w.u.into(),
                w.s.into(),
                kind.into(),
                a.into(),
                b.into(),
            ]);
        }
    }
    let pass = report.positivity_failures() == 0
        && report.witness_confirmed() == report.witness_checked()
        && report.construction_failures() == 0;
    t.footer.push(format!(
        "positivity failures {} of {}; witnesses confirmed {} of {} checked; {} not representable",
        report.positivity_failures(),
        report.positive_samples(),
        report.witness_confirmed(),
        report.witness_checked(),
        report.witness_unrepresentable()
    ));
    out.set(
        "counts",
        json!({
            "positive_samples": report.positive_samples(),
            "positivity_failures": report.positivity_failures(),
            "witness_checked": report.witness_checked(),
            "witness_confirmed": report.witness_confirmed(),
            "witness_unrepresentable": report.witness_unrepresentable(),
            "witness_extended_confirmed": report.witness_extended_confirmed(),
            "construction_failures": report.construction_failures(),
            "hypotheses_fail": report.hypotheses_fail(),
        }),
    );
    out.set("pass", pass);
    if !pass {
        out.failure = Some(Error::gate(
            "cli",
            "criterion equivalence",
            "see the comparison table",
        ));
    }
    out.tables.push(t);
    Ok(out)
}

pub fn oracle_compare(p: &OracleCompareParams, seed: u64) -> Result<Artifacts, CliError> {
    let cmp = match p.scenario.as_str() {
        "analytic-vs-oracle" => analytic_vs_oracle(p.n, p.states, seed)?,
        "wn-vs-closed-form" => wn_vs_closed_form(20.0, 400)?,
        "riccati-vs-direct" => riccati_vs_direct(
            &constant_riccati_coeffs(1.0, 0.3, 0.4),
            &TimeGrid::uniform(0.0, 0.8, 40)?,
        )?,
        "criterion-vs-oracle" => return criterion_artifacts(p, seed),
        other => return Err(CliError::Config(format!("unknown scenario {other:?}"))),
    };
    Ok(comparison_artifacts(&p.scenario, &cmp))
}
