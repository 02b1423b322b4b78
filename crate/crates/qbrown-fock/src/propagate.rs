use nalgebra::DMatrix;
use qbrown_core::{expm, Error, GeneratorCoeffs, Result, TimeGrid, C64};

use crate::ops::TruncatedOperators;
use crate::states::{edge_band, FockDensityMatrix};
use crate::superop::Superoperator;

pub const DEFAULT_N: usize = 60;
pub const DEFAULT_LEAK_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagateOptions {
    /// Largest tolerated edge population along the trajectory.
    pub leak_tol: f64,
    /// RK4 step as a fraction of the inverse spectral radius of the generator.
    pub step_factor: f64,
    /// Repeat with half the step and compare.
    pub halving_check: bool,
    /// Largest Frobenius difference accepted by the halving check.
    pub halving_tol: f64,
}

impl Default for PropagateOptions {
    fn default() -> Self {
        Self {
            leak_tol: DEFAULT_LEAK_TOL,
            step_factor: 0.5,
            halving_check: true,
            halving_tol: 1e-7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FockTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<FockDensityMatrix>,
    /// RK4 step bound actually used.
    pub step: f64,
    /// Largest difference to the half-step run, when requested.
    pub halving_defect: Option<f64>,
}

struct Work {
    k: [Vec<C64>; 4],
    tmp: Vec<C64>,
    scratch: Vec<C64>,
}

fn rk4_step<F>(ops: &TruncatedOperators, coeffs: &F, t: f64, h: f64, y: &mut [C64], w: &mut Work)
where
    F: Fn(f64) -> GeneratorCoeffs,
{
    let l0 = Superoperator::new(ops, coeffs(t).into());
    let lh = Superoperator::new(ops, coeffs(t + 0.5 * h).into());
    let l1 = Superoperator::new(ops, coeffs(t + h).into());
    let [k1, k2, k3, k4] = &mut w.k;
    l0.apply_into(y, k1, &mut w.scratch);
    for (t, (a, b)) in w.tmp.iter_mut().zip(y.iter().zip(k1.iter())) {
        *t = a + b * (0.5 * h);
    }
    lh.apply_into(&w.tmp, k2, &mut w.scratch);
    for (t, (a, b)) in w.tmp.iter_mut().zip(y.iter().zip(k2.iter())) {
        *t = a + b * (0.5 * h);
    }
    lh.apply_into(&w.tmp, k3, &mut w.scratch);
    for (t, (a, b)) in w.tmp.iter_mut().zip(y.iter().zip(k3.iter())) {
        *t = a + b * h;
    }
    l1.apply_into(&w.tmp, k4, &mut w.scratch);
    let c = h / 6.0;
    for i in 0..y.len() {
        y[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * c;
    }
}

fn hermitize(y: &mut [C64], n: usize) {
    for j in 0..n {
        for i in 0..=j {
            let (a, b) = (y[j * n + i], y[i * n + j]);
            let m = (a + b.conj()) * 0.5;
            y[j * n + i] = m;
            y[i * n + j] = m.conj();
        }
    }
}

fn run<F>(
    ops: &TruncatedOperators,
    coeffs: &F,
    grid: &TimeGrid,
    rho0: &FockDensityMatrix,
    h_max: f64,
    leak_tol: f64,
) -> Result<Vec<FockDensityMatrix>>
where
    F: Fn(f64) -> GeneratorCoeffs,
{
    let n = ops.n;
    let nn = n * n;
    let mut w = Work {
        k: [
            vec![C64::new(0.0, 0.0); nn],
            vec![C64::new(0.0, 0.0); nn],
            vec![C64::new(0.0, 0.0); nn],
            vec![C64::new(0.0, 0.0); nn],
        ],
        tmp: vec![C64::new(0.0, 0.0); nn],
        scratch: vec![C64::new(0.0, 0.0); 2 * nn],
    };
    let mut y = rho0.rho.as_slice().to_vec();
    let band = edge_band(n);
    let mut leak = rho0.leakage;
    let ts = grid.values();
    let mut out = Vec::with_capacity(ts.len());
    out.push(rho0.clone());
    for win in ts.windows(2) {
        let dt = win[1] - win[0];
        let steps = (dt / h_max).ceil().max(1.0) as usize;
        let h = dt / steps as f64;
        for k in 0..steps {
            rk4_step(ops, coeffs, win[0] + h * k as f64, h, &mut y, &mut w);
            hermitize(&mut y, n);
        }
        if y.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Divergence { t: win[1] });
        }
        let rho = FockDensityMatrix::new(DMatrix::from_column_slice(n, n, &y), 0.0);
        leak = leak.max(rho0.leakage + rho.edge_population(band));
        if leak > leak_tol {
            return Err(Error::gate(
                "fock_oracle",
                "leakage",
                format!(
                    "edge population {leak:e} at t = {} exceeds {leak_tol:e} (N = {n})",
                    win[1]
                ),
            ));
        }
        out.push(FockDensityMatrix::new(rho.rho, leak));
    }
    Ok(out)
}

/// Integrate the quadratic master equation on `grid` with fixed-step RK4.
///
/// The step is `step_factor` over the largest spectral-radius estimate of the
/// generator at the start, middle and end of the grid; each grid interval is
/// split into equal substeps no longer than that. `rho` is re-Hermitized after
/// every step. The reported leakage is the initial leakage plus the largest
/// population seen in the top tenth of the levels.
pub fn propagate<F>(
    ops: &TruncatedOperators,
    coeffs: F,
    grid: &TimeGrid,
    rho0: &FockDensityMatrix,
    opts: &PropagateOptions,
) -> Result<FockTrajectory>
where
    F: Fn(f64) -> GeneratorCoeffs,
{
    if rho0.dim() != ops.n {
        return Err(Error::invalid(format!(
            "rho is {}x{}, operators are N = {}",
            rho0.dim(),
            rho0.dim(),
            ops.n
        )));
    }
    if !(opts.step_factor > 0.0) {
        return Err(Error::invalid("step_factor must be positive"));
    }
    let mid = 0.5 * (grid.t0() + grid.t1());
    let mut radius = 0.0f64;
    for t in [grid.t0(), mid, grid.t1()] {
        let c = coeffs(t);
        if !c.is_finite() {
            return Err(Error::invalid(format!(
                "non-finite coefficients at t = {t}"
            )));
        }
        radius = radius.max(Superoperator::new(ops, c.into()).spectral_radius_estimate());
    }
    let h_max = if radius > 0.0 {
        opts.step_factor / radius
    } else {
        f64::INFINITY
    };
    let coarse = run(ops, &coeffs, grid, rho0, h_max, opts.leak_tol)?;
    if !opts.halving_check {
        return Ok(FockTrajectory {
            times: grid.values().to_vec(),
            states: coarse,
            step: h_max,
            halving_defect: None,
        });
    }
    let fine = run(ops, &coeffs, grid, rho0, 0.5 * h_max, opts.leak_tol)?;
    let defect = coarse
        .iter()
        .zip(&fine)
        .map(|(a, b)| (&a.rho - &b.rho).norm())
        .fold(0.0, f64::max);
    if defect > opts.halving_tol {
        return Err(Error::NonConvergence(format!(
            "RK4 step halving changed rho by {defect:e} (tolerance {:e})",
            opts.halving_tol
        )));
    }
    Ok(FockTrajectory {
        times: grid.values().to_vec(),
        states: fine,
        step: 0.5 * h_max,
        halving_defect: Some(defect),
    })
}

/// `e^{iHt/hbar} rho e^{-iHt/hbar}` for a quadratic Hamiltonian.
pub fn to_interaction_picture(
    ops: &TruncatedOperators,
    b11: f64,
    b12: f64,
    b22: f64,
    t: f64,
    rho: &DMatrix<C64>,
) -> DMatrix<C64> {
    let h = ops.quadratic_hamiltonian(b11, b12, b22);
    let u = expm(&(h * C64::new(0.0, t / ops.hbar)));
    &u * rho * u.adjoint()
}

/// Smallest eigenvalue at one sample, with its trust threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinEigSample {
    pub t: f64,
    pub min_eig: f64,
    pub leakage: f64,
    /// Negative beyond what truncation can explain.
    pub negative: bool,
}

pub fn min_eig_scan(traj: &FockTrajectory) -> Result<Vec<MinEigSample>> {
    traj.times
        .iter()
        .zip(&traj.states)
        .map(|(&t, s)| {
            let min_eig = s.min_eig()?;
            Ok(MinEigSample {
                t,
                min_eig,
                leakage: s.leakage,
                negative: min_eig < -(s.leakage + 1e-8),
            })
        })
        .collect()
}
