//! Classical RK4 sampled on a fixed grid, with per-interval step halving.

use crate::error::{Error, Result};
use crate::types::TimeGrid;

/// Samples of a vector ODE solution, one state per grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> &[f64] {
        self.states.last().unwrap()
    }

    /// Column `k` across all samples.
    pub fn component(&self, k: usize) -> Vec<f64> {
        self.states.iter().map(|s| s[k]).collect()
    }
}

struct Rk4Work {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4Work {
    fn new(n: usize) -> Self {
        Self {
            k1: vec![0.0; n],
            k2: vec![0.0; n],
            k3: vec![0.0; n],
            k4: vec![0.0; n],
            tmp: vec![0.0; n],
        }
    }
}

fn rk4_step<F>(f: &F, t: f64, y: &mut [f64], h: f64, w: &mut Rk4Work)
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let n = y.len();
    f(t, y, &mut w.k1);
    for i in 0..n {
        w.tmp[i] = y[i] + 0.5 * h * w.k1[i];
    }
    f(t + 0.5 * h, &w.tmp, &mut w.k2);
    for i in 0..n {
        w.tmp[i] = y[i] + 0.5 * h * w.k2[i];
    }
    f(t + 0.5 * h, &w.tmp, &mut w.k3);
    for i in 0..n {
        w.tmp[i] = y[i] + h * w.k3[i];
    }
    f(t + h, &w.tmp, &mut w.k4);
    for i in 0..n {
        y[i] += h / 6.0 * (w.k1[i] + 2.0 * w.k2[i] + 2.0 * w.k3[i] + w.k4[i]);
    }
}

fn advance<F>(f: &F, a: f64, b: f64, y0: &[f64], n: usize, w: &mut Rk4Work) -> Vec<f64>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let mut y = y0.to_vec();
    let h = (b - a) / n as f64;
    for i in 0..n {
        rk4_step(f, a + h * i as f64, &mut y, h, w);
    }
    y
}

const MAX_SUBSTEPS: usize = 1 << 20;

/// Integrate `y' = f(t, y)` and sample at every grid point.
///
/// On each grid interval the substep count is doubled until two successive
/// refinements agree to `rtol` relative to `max(1, max_i |y_i|)`. The scale
/// is shared by all components, so a component that passes through zero
/// beside large ones is not held to a relative accuracy below round-off.
pub fn rk_integrate<F>(f: F, y0: &[f64], grid: &TimeGrid, rtol: f64) -> Result<Trajectory>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let ts = grid.values();
    let mut states = Vec::with_capacity(ts.len());
    states.push(y0.to_vec());
    let mut w = Rk4Work::new(y0.len());
    let mut n = 1usize;
    for win in ts.windows(2) {
        let (a, b) = (win[0], win[1]);
        let start = states.last().unwrap().clone();
        n = (n / 2).max(1);
        let mut coarse = advance(&f, a, b, &start, n, &mut w);
        if coarse.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { t: b });
        }
        loop {
            let fine = advance(&f, a, b, &start, 2 * n, &mut w);
            if fine.iter().any(|v| !v.is_finite()) {
                return Err(Error::Divergence { t: b });
            }
            let scale = fine.iter().fold(1.0f64, |m, x| m.max(x.abs()));
            let delta = fine
                .iter()
                .zip(&coarse)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max)
                / scale;
            n *= 2;
            if delta < rtol {
                states.push(fine);
                break;
            }
            if n >= MAX_SUBSTEPS {
                return Err(Error::NonConvergence(format!(
                    "RK4 refinement stalled on [{a}, {b}] (delta {delta:e})"
                )));
            }
            coarse = fine;
        }
    }
    Ok(Trajectory {
        times: ts.to_vec(),
        states,
    })
}
