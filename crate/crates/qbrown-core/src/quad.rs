//! Globally adaptive Gauss-Kronrod (7/15) quadrature.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_INTERVALS: usize = 4000;

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    abs_value: f64,
    err: f64,
}

fn gk15<G: Fn(f64) -> f64>(g: &G, a: f64, b: f64) -> Segment {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = g(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    let mut abs_k = WGK[7] * fc.abs();
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = g(c - dx);
        let f2 = g(c + dx);
        kron += WGK[j] * (f1 + f2);
        abs_k += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    Segment {
        a,
        b,
        value: kron * h,
        abs_value: abs_k * h.abs(),
        err: ((kron - gauss) * h).abs(),
    }
}

/// Integrate `g` over `[lo, hi]` to relative tolerance `rtol`.
///
/// `hi = f64::INFINITY` is handled with the substitution `x = lo + tan(theta)`.
/// An absolute floor of `1e-14 * int |g|` stops refinement of integrands
/// whose signed integral cancels to zero.
pub fn adaptive_quad<G: Fn(f64) -> f64>(g: G, lo: f64, hi: f64, rtol: f64) -> Result<f64> {
    adaptive_quad_tol(g, lo, hi, rtol, 0.0)
}

/// As [`adaptive_quad`], also accepting an absolute error `atol`.
pub fn adaptive_quad_tol<G: Fn(f64) -> f64>(
    g: G,
    lo: f64,
    hi: f64,
    rtol: f64,
    atol: f64,
) -> Result<f64> {
    if !lo.is_finite() || hi.is_nan() || hi < lo {
        return Err(Error::invalid(format!("bad quadrature range [{lo}, {hi}]")));
    }
    if hi == lo {
        return Ok(0.0);
    }
    if hi.is_infinite() {
        let mapped = |th: f64| {
            let c = th.cos();
            if c <= 0.0 {
                return 0.0;
            }
            let x = lo + th.tan();
            let v = g(x) / (c * c);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        };
        return integrate_finite(&mapped, 0.0, std::f64::consts::FRAC_PI_2, rtol, atol);
    }
    integrate_finite(&g, lo, hi, rtol, atol)
}

/// Composite 15-point Kronrod rule on `panels` equal panels of `[lo, hi]`,
/// for integrands with several components.
pub fn composite_kronrod<const K: usize, G: Fn(f64) -> [f64; K]>(
    g: G,
    lo: f64,
    hi: f64,
    panels: usize,
) -> [f64; K] {
    let mut out = [0.0; K];
    let w = (hi - lo) / panels as f64;
    for i in 0..panels {
        let c = lo + w * (i as f64 + 0.5);
        let h = 0.5 * w;
        let fc = g(c);
        for k in 0..K {
            out[k] += h * WGK[7] * fc[k];
        }
        for j in 0..7 {
            let dx = h * XGK[j];
            let (f1, f2) = (g(c - dx), g(c + dx));
            for k in 0..K {
                out[k] += h * WGK[j] * (f1[k] + f2[k]);
            }
        }
    }
    out
}

fn integrate_finite<G: Fn(f64) -> f64>(
    g: &G,
    lo: f64,
    hi: f64,
    rtol: f64,
    atol: f64,
) -> Result<f64> {
    let mut segs = vec![gk15(g, lo, hi)];
    loop {
        let total: f64 = segs.iter().map(|s| s.value).sum();
        let total_abs: f64 = segs.iter().map(|s| s.abs_value).sum();
        let err: f64 = segs.iter().map(|s| s.err).sum();
        if !total.is_finite() {
            return Err(Error::NonConvergence(
                "quadrature produced a non-finite value".into(),
            ));
        }
        if err <= (rtol * total.abs()).max(1e-14 * total_abs).max(atol) {
            return Ok(total);
        }
        if segs.len() >= MAX_INTERVALS {
            return Err(Error::NonConvergence(format!(
                "quadrature: {MAX_INTERVALS} subdivisions, error estimate {err:e} on value {total:e}"
            )));
        }
        let (k, _) =
            segs.iter().enumerate().fold(
                (0, -1.0),
                |acc, (i, s)| if s.err > acc.1 { (i, s.err) } else { acc },
            );
        let s = segs.swap_remove(k);
        let mid = 0.5 * (s.a + s.b);
        segs.push(gk15(g, s.a, mid));
        segs.push(gk15(g, mid, s.b));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn composite_rule_on_smooth_pair() {
        let v = composite_kronrod(|x: f64| [x.exp(), x.sin()], 0.0, 2.0, 4);
        assert!((v[0] - (2f64.exp() - 1.0)).abs() < 1e-14);
        assert!((v[1] - (1.0 - 2f64.cos())).abs() < 1e-14);
    }

    #[test]
    fn exponential_tail() {
        let v = adaptive_quad(|x| (-x).exp(), 0.0, f64::INFINITY, 1e-12).unwrap();
        assert!((v - 1.0).abs() < 1e-10);
    }

    #[test]
    fn zero_integrand() {
        assert_eq!(adaptive_quad(|_| 0.0, 0.0, 5.0, 1e-10).unwrap(), 0.0);
    }

    #[test]
    fn polynomial_exact() {
        let v = adaptive_quad(|x| x * x * x - 2.0 * x, -1.0, 3.0, 1e-13).unwrap();
        assert!((v - (81.0 / 4.0 - 9.0 - (0.25 - 1.0))).abs() < 1e-12);
    }
}
