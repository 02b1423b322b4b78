//! Criterion-versus-oracle sweep on the standard equation.
//!
//! Where `s(u) <= 0` the exact map is positive, so truncated propagation of
//! random allowable Gaussians must keep every eigenvalue above
//! `-(leakage + tol)`. Where `s(u) > 0` the witness built from the extracted
//! exponent must go negative, stably across two truncations.

use qbrown_core::{GaussianState, OscillatorParams, Result, TimeGrid};
use qbrown_fock::{
    balanced_omega_ref, gaussian_to_fock, propagate, PropagateOptions, TruncatedOperators,
};
use qbrown_witness::{build_witness, check_hypotheses, LemmaForm};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct SweepConfig {
    pub pairs: Vec<(f64, f64)>,
    pub u_step: f64,
    pub u_max: f64,
    pub states: usize,
    pub n: usize,
    pub n_check: usize,
    pub seed: u64,
    pub step_factor: f64,
    pub positivity_tol: f64,
    pub witness_threshold: f64,
    pub synth_leak_tol: f64,
    /// Larger pair of truncations tried when a witness misses `(n, n_check)`.
    pub extended: Option<(usize, usize)>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            pairs: vec![
                (0.5, 0.4),
                (1.0, 0.2),
                (1.0, 0.5),
                (1.0, 0.8),
                (2.0, 0.4),
                (2.0, 1.0),
                (2.0, 1.6),
                (3.0, 0.6),
                (3.0, 1.5),
                (3.0, 2.4),
                (5.0, 1.0),
                (5.0, 2.5),
            ],
            u_step: 0.25,
            u_max: 6.0,
            states: 20,
            n: 60,
            n_check: 80,
            seed: 20120423,
            step_factor: 2.5,
            positivity_tol: 1e-6,
            witness_threshold: -1e-4,
            synth_leak_tol: 1e-6,
            extended: Some((120, 140)),
        }
    }
}

/// Outcome at one `s(u) > 0` sample.
#[derive(Debug, Clone, Serialize)]
pub enum WitnessOutcome {
    /// Extracted form misses the theorem hypotheses; nothing is claimed.
    HypothesesFail,
    /// Witness state does not fit one of the truncations. The minimum
    /// eigenvalues at the extended pair are kept when it fits there.
    Unrepresentable {
        reason: String,
        extended: Option<(f64, f64)>,
    },
    Checked {
        min_eig: f64,
        min_eig_check: f64,
        i_value: f64,
    },
    /// Construction failed although the hypotheses hold.
    ConstructionFailed { reason: String },
}

#[derive(Debug, Clone, Serialize)]
pub struct WitnessPoint {
    pub u: f64,
    pub s: f64,
    pub outcome: WitnessOutcome,
}

#[derive(Debug, Clone, Serialize)]
pub struct PairReport {
    pub eta_tilde: f64,
    pub r: f64,
    /// Sampled `u` with `s(u) <= 0`.
    pub positive_times: Vec<f64>,
    /// Smallest value of `min_eig + leakage` over states and positive times.
    pub worst_margin: f64,
    pub worst_leakage: f64,
    pub positivity_failures: usize,
    pub witnesses: Vec<WitnessPoint>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub config: SweepConfig,
    pub pairs: Vec<PairReport>,
}

impl SweepReport {
    pub fn positivity_failures(&self) -> usize {
        self.pairs.iter().map(|p| p.positivity_failures).sum()
    }

    pub fn positive_samples(&self) -> usize {
        self.pairs
            .iter()
            .map(|p| p.positive_times.len())
            .sum::<usize>()
            * self.config.states
    }

    fn witnesses(&self) -> impl Iterator<Item = &WitnessPoint> {
        self.pairs.iter().flat_map(|p| &p.witnesses)
    }

    pub fn witness_checked(&self) -> usize {
        self.witnesses()
            .filter(|w| matches!(w.outcome, WitnessOutcome::Checked { .. }))
            .count()
    }

    /// Checked witness points that are negative and stable.
    pub fn witness_confirmed(&self) -> usize {
        let c = &self.config;
        self.witnesses()
            .filter(|w| match w.outcome {
                WitnessOutcome::Checked {
                    min_eig,
                    min_eig_check,
                    ..
                } => stable_negative(min_eig, min_eig_check, c.witness_threshold),
                _ => false,
            })
            .count()
    }

    pub fn witness_unrepresentable(&self) -> usize {
        self.witnesses()
            .filter(|w| matches!(w.outcome, WitnessOutcome::Unrepresentable { .. }))
            .count()
    }

    /// Unrepresentable points that are negative and stable at the extended pair.
    pub fn witness_extended_confirmed(&self) -> usize {
        let c = &self.config;
        self.witnesses()
            .filter(|w| match w.outcome {
                WitnessOutcome::Unrepresentable {
                    extended: Some((a, b)),
                    ..
                } => stable_negative(a, b, c.witness_threshold),
                _ => false,
            })
            .count()
    }

    pub fn construction_failures(&self) -> usize {
        self.witnesses()
            .filter(|w| matches!(w.outcome, WitnessOutcome::ConstructionFailed { .. }))
            .count()
    }

    pub fn hypotheses_fail(&self) -> usize {
        self.witnesses()
            .filter(|w| matches!(w.outcome, WitnessOutcome::HypothesesFail))
            .count()
    }
}

fn stable_negative(a: f64, b: f64, threshold: f64) -> bool {
    a <= threshold && b <= threshold && (a - b).abs() <= 1e-6 + 1e-3 * b.abs()
}

/// Random allowable Gaussian that fits comfortably in a few dozen levels of
/// the oscillator basis: a quarter are pure.
pub fn random_allowable_gaussian(rng: &mut ChaCha8Rng, p: &OscillatorParams) -> GaussianState {
    let hbar = p.hbar;
    let nbar = if rng.gen_bool(0.25) {
        0.0
    } else {
        rng.gen_range(0.0..1.0)
    };
    let s: f64 = rng.gen_range(0.0..0.5);
    let phi: f64 = rng.gen_range(0.0..std::f64::consts::PI);
    let amp: f64 = rng.gen_range(0.0..1.5);
    let arg: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    // covariance in units where the oscillator vacuum is identity / 2
    let nu = nbar + 0.5;
    let (e2, c, sn) = ((2.0 * s).exp(), phi.cos(), phi.sin());
    let (d1, d2) = (nu * e2, nu / e2);
    let vxx = d1 * c * c + d2 * sn * sn;
    let vyy = d1 * sn * sn + d2 * c * c;
    let vxy = (d1 - d2) * c * sn;
    let ell = (hbar / (p.m * p.omega)).sqrt();
    let x0 = 2f64.sqrt() * amp * arg.cos();
    let y0 = 2f64.sqrt() * amp * arg.sin();
    GaussianState {
        mean_q: x0 * ell,
        mean_p: y0 * hbar / ell,
        ..GaussianState::centered(vxx * ell * ell, vyy * hbar * hbar / (ell * ell), vxy * hbar)
    }
}

fn sample_times(c: &SweepConfig) -> Vec<f64> {
    let k = (c.u_max / c.u_step).round() as usize;
    (1..=k).map(|i| i as f64 * c.u_step).collect()
}

fn options(c: &SweepConfig) -> PropagateOptions {
    PropagateOptions {
        step_factor: c.step_factor,
        halving_check: false,
        ..Default::default()
    }
}

fn pair_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

fn positivity_part(
    c: &SweepConfig,
    p: &OscillatorParams,
    index: usize,
    report: &mut PairReport,
) -> Result<()> {
    let times = sample_times(c);
    let coeffs = p.qbe_coeffs();
    let ops = TruncatedOperators::new(c.n, p.m, p.omega, p.hbar)?;
    // Gamma = 1 by construction, so t = u
    let grid = TimeGrid::from_values(std::iter::once(0.0).chain(times.iter().copied()).collect())?;
    let keep: Vec<bool> = times
        .iter()
        .map(|&u| qbrown_qbe::criterion(p, u).map(|s| s <= qbrown_qbe::MARGINAL_TOL))
        .collect::<Result<_>>()?;
    report.positive_times = times
        .iter()
        .zip(&keep)
        .filter(|(_, &k)| k)
        .map(|(&u, _)| u)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(pair_seed(c.seed, index));
    for _ in 0..c.states {
        let g = random_allowable_gaussian(&mut rng, p);
        let rho0 = gaussian_to_fock(&g, &ops, c.synth_leak_tol)?;
        let tr = propagate(&ops, |_| coeffs, &grid, &rho0, &options(c))?;
        for (st, &k) in tr.states[1..].iter().zip(&keep) {
            if !k {
                continue;
            }
            let margin = st.min_eig()? + st.leakage;
            report.worst_margin = report.worst_margin.min(margin);
            report.worst_leakage = report.worst_leakage.max(st.leakage);
            if margin < -c.positivity_tol {
                report.positivity_failures += 1;
            }
        }
    }
    Ok(())
}

fn final_min_eig(
    c: &SweepConfig,
    p: &OscillatorParams,
    sigma: &GaussianState,
    n: usize,
    u: f64,
) -> std::result::Result<f64, String> {
    let ops = TruncatedOperators::new(n, p.m, balanced_omega_ref(sigma, p.m), p.hbar)
        .map_err(|e| e.to_string())?;
    let rho0 =
        gaussian_to_fock(sigma, &ops, c.synth_leak_tol).map_err(|e| format!("N = {n}: {e}"))?;
    let coeffs = p.qbe_coeffs();
    let grid = TimeGrid::uniform(0.0, u, 1).map_err(|e| e.to_string())?;
    let tr = propagate(&ops, |_| coeffs, &grid, &rho0, &options(c))
        .map_err(|e| format!("N = {n}: {e}"))?;
    tr.states
        .last()
        .expect("grid has two points")
        .min_eig()
        .map_err(|e| e.to_string())
}

fn witness_point(c: &SweepConfig, p: &OscillatorParams, u: f64, s: f64) -> Result<WitnessPoint> {
    let form = qbrown_qbe::combined_form(p, u)?;
    let lemma = LemmaForm::new(form.a, form.b, form.c);
    let outcome = if check_hypotheses(&lemma).is_err() {
        WitnessOutcome::HypothesesFail
    } else {
        match build_witness(&lemma, p.hbar) {
            Err(e) => WitnessOutcome::ConstructionFailed {
                reason: e.to_string(),
            },
            Ok(w) => {
                let sigma = w.sigma();
                match (
                    final_min_eig(c, p, &sigma, c.n, u),
                    final_min_eig(c, p, &sigma, c.n_check, u),
                ) {
                    (Ok(a), Ok(b)) => WitnessOutcome::Checked {
                        min_eig: a,
                        min_eig_check: b,
                        i_value: w.i_value,
                    },
                    (Err(reason), _) | (_, Err(reason)) => {
                        let extended = c.extended.and_then(|(n1, n2)| {
                            let a = final_min_eig(c, p, &sigma, n1, u).ok()?;
                            let b = final_min_eig(c, p, &sigma, n2, u).ok()?;
                            Some((a, b))
                        });
                        WitnessOutcome::Unrepresentable { reason, extended }
                    }
                }
            }
        }
    };
    Ok(WitnessPoint { u, s, outcome })
}

fn run_pair(c: &SweepConfig, index: usize) -> Result<PairReport> {
    let (et, r) = c.pairs[index];
    let p = OscillatorParams::from_eta_r(et, r, 1.0)?;
    let mut report = PairReport {
        eta_tilde: et,
        r,
        positive_times: vec![],
        worst_margin: f64::INFINITY,
        worst_leakage: 0.0,
        positivity_failures: 0,
        witnesses: vec![],
    };
    positivity_part(c, &p, index, &mut report)?;
    for u in sample_times(c) {
        let s = qbrown_qbe::criterion(&p, u)?;
        if s > qbrown_qbe::MARGINAL_TOL {
            report.witnesses.push(witness_point(c, &p, u, s)?);
        }
    }
    Ok(report)
}

/// Runs every pair; pairs are independent and run in parallel, results are
/// collected in input order.
pub fn criterion_oracle_sweep(c: &SweepConfig) -> Result<SweepReport> {
    let pairs = (0..c.pairs.len())
        .into_par_iter()
        .map(|i| run_pair(c, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepReport {
        config: c.clone(),
        pairs,
    })
}
