use qbrown_core::{Error, OscillatorParams, Result};

use crate::criterion_raw;

/// Bisection to machine precision on a bracketed sign change.
fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm > 0.0) == (fa > 0.0) {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Roots of `s(u)` in `(u_lo, u_hi]`, located on an `n`-point scan and polished.
///
/// Double roots (tangencies, as at `u = k pi / eta_tilde` when `r = 0`) are
/// found only when a sample lands on them.
pub fn criterion_roots(eta_tilde: f64, r: f64, u_lo: f64, u_hi: f64, n: usize) -> Vec<f64> {
    let f = |u: f64| criterion_raw(eta_tilde, r, u);
    let h = (u_hi - u_lo) / n as f64;
    let mut roots = Vec::new();
    let mut prev_u = u_lo;
    let mut prev = f(u_lo);
    for i in 1..=n {
        let u = u_lo + h * i as f64;
        let v = f(u);
        if v == 0.0 {
            roots.push(u);
        } else if prev != 0.0 && (v > 0.0) != (prev > 0.0) {
            roots.push(bisect(f, prev_u, u));
        }
        prev_u = u;
        prev = v;
    }
    roots
}

/// First positive time at which the criterion vanishes.
pub fn first_marginal_time(params: &OscillatorParams) -> Result<f64> {
    params.validate()?;
    let (et, r) = (params.eta_tilde(), params.r());
    // s > 0 just after 0 when r < eta_tilde; the first crossing lies before
    // the first zero of sin, unless r sinh stays below 1 for longer.
    let span = (std::f64::consts::PI / et).max(1.0) * 4.0;
    let roots = criterion_roots(et, r, 1e-9, span, 20_000);
    roots
        .first()
        .map(|u| u / params.gamma)
        .ok_or_else(|| Error::gate("qbe_analytic", "marginal time", "no sign change found"))
}

/// Parameter set exhibiting non-positivity at a long time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViolationWitness {
    pub params: OscillatorParams,
    pub u_star: f64,
    pub s_at_u_star: f64,
    /// `kT / (hbar Gamma)`.
    pub chi: f64,
    /// `Gamma t kT / hbar` at `u_star`.
    pub thermal_times: f64,
    /// Largest `u` at which `s > 0`.
    pub u_max: f64,
}

/// Drive `hbar omega / 2kT` towards one from below so that `r -> 0+` at
/// large `eta_tilde`, keeping `kT / (hbar Gamma) >= chi_min`.
pub fn long_time_violation_scan(chi_min: f64, u_star: f64) -> Result<ViolationWitness> {
    if !(chi_min > 1.0) || !(u_star >= 0.0) || !chi_min.is_finite() {
        return Err(Error::invalid("need chi_min > 1 and u_star >= 0"));
    }
    if u_star > 30.0 {
        return Err(Error::invalid(format!(
            "u_star = {u_star} is infeasible: r would have to be below double precision resolution"
        )));
    }
    let (gamma, hbar) = (1.0, 1.0);
    for step in 0..400 {
        let kt = chi_min * hbar * gamma * (1.0 + 0.001 * step as f64);
        let omega0 = 2.0 * kt / hbar;
        let et0 = ((omega0 / gamma).powi(2) - 1.0).sqrt();
        let sin0 = (et0 * u_star).sin().abs();
        if u_star > 0.0 && sin0 < 0.5 {
            continue;
        }
        let r_target = if u_star > 0.0 {
            0.25 * sin0 / u_star.sinh()
        } else {
            0.25 * et0
        };
        let ratio = r_target / et0;
        let x = (1.0 - ratio * ratio).sqrt();
        if ratio * ratio < 1e-14 {
            return Err(Error::invalid(format!(
                "u_star = {u_star} is infeasible at chi_min = {chi_min}: r/eta_tilde = {ratio:e}"
            )));
        }
        let params = OscillatorParams::new(1.0, omega0 * x, gamma, kt, hbar)?;
        let s = criterion_raw(params.eta_tilde(), params.r(), u_star);
        if u_star > 0.0 && s <= 0.0 {
            continue;
        }
        let et = params.eta_tilde();
        let r = params.r();
        let u_hi = ((2.0 / r.max(1e-300)).ln() + 2.0).max(u_star + 1.0);
        let n = ((u_hi * et) as usize * 20).clamp(1000, 5_000_000);
        let u_max = criterion_roots(et, r, 1e-9, u_hi, n)
            .last()
            .copied()
            .unwrap_or(0.0);
        return Ok(ViolationWitness {
            params,
            u_star,
            s_at_u_star: s,
            chi: kt / (hbar * gamma),
            thermal_times: u_star * kt / hbar,
            u_max,
        });
    }
    Err(Error::gate(
        "qbe_analytic",
        "violation scan",
        "no parameter set found",
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn largest_positive_u_near_log_bound() {
        let roots = criterion_roots(10.0, 0.1, 1e-9, 6.0, 60_000);
        let u_max = *roots.last().unwrap();
        assert!(
            criterion_raw(10.0, 0.1, u_max - 0.02) > 0.0
                || criterion_raw(10.0, 0.1, u_max - 0.2) > 0.0
        );
        assert!((u_max - (2.0f64 / 0.1).ln()).abs() < 0.5, "u_max = {u_max}");
        for k in 1..100 {
            assert!(criterion_raw(10.0, 0.1, u_max + 0.01 * k as f64) < 0.0);
        }
    }

    #[test]
    fn violation_at_u5() {
        let w = long_time_violation_scan(50.0, 5.0).unwrap();
        assert!(w.s_at_u_star > 0.0);
        assert!(w.chi >= 50.0);
        let r = w.params.r();
        assert!(r < 0.05 && r > 0.0, "r = {r}");
        assert!(w.u_max >= 5.0);
    }

    #[test]
    fn zero_target_time() {
        let w = long_time_violation_scan(50.0, 0.0).unwrap();
        let (et, r) = (w.params.eta_tilde(), w.params.r());
        assert!(criterion_raw(et, r, 1e-4) > 0.0);
    }
}
