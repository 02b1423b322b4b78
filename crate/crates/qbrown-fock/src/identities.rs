use nalgebra::{DMatrix, DVector, SymmetricEigen};
use qbrown_core::linalg::{hermiticity_defect, norm1};
use qbrown_core::{expm, inv_expm1_ratio, Error, GeneratorCoeffs, Result, C64};

use crate::ops::TruncatedOperators;
use crate::superop::{expm_action, SuperCoeffs, Superoperator};

fn spectral_bound(a: &DMatrix<C64>) -> f64 {
    (norm1(a) * norm1(&a.adjoint())).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DampingIdentity {
    /// `exp(-r{A^dagger,.,A^dagger})`, the attenuating form.
    Attenuator,
    /// `exp(-r{A,.,A})` with the attenuator's sandwich coefficient
    /// `1 - e^{-2r}`, as if `A` and `A^dagger` could simply be swapped. This
    /// does not hold and is kept to show by how much it fails.
    AmplifierDampingWeight,
    /// `exp(-r{A,.,A})` with sandwich coefficient `e^{2r} - 1`, the gain of the
    /// quantum-limited amplifier.
    Amplifier,
}

/// Which side of the trace pairing the maps act on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Picture {
    /// Maps applied to a density operator.
    State,
    /// Hilbert-Schmidt adjoint maps applied to an observable.
    Observable,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityResiduals {
    pub exp_vs_sandwich: f64,
    pub exp_vs_kraus: f64,
    pub sandwich_vs_kraus: f64,
    /// Number of Kraus terms kept.
    pub kraus_terms: usize,
}

impl IdentityResiduals {
    pub fn max(&self) -> f64 {
        self.exp_vs_sandwich
            .max(self.exp_vs_kraus)
            .max(self.sandwich_vs_kraus)
    }
}

/// Three evaluations of one damping identity for `A = b_q q + b_p p`.
///
/// (i) the exponential of the bracket superoperator by Taylor action, (ii) the
/// sandwiched form `e^{-rK} [exp(c L . L^dagger) x] e^{-rK}` with
/// `c = 1 - e^{-2r}`, and (iii) the explicit Kraus sum. In the state picture
/// `K = A^dagger A, L = A` for the attenuating identity and
/// `K = A A^dagger, L = A^dagger` for the amplifying one. The observable
/// picture uses the adjoint maps, where the sandwich acts after the outer
/// exponentials and `L` is replaced by `L^dagger`. Returned distances are
/// Frobenius norms.
pub fn check_damping_identities(
    ops: &TruncatedOperators,
    b_q: C64,
    b_p: C64,
    r: f64,
    x: &DMatrix<C64>,
    which: DampingIdentity,
    picture: Picture,
) -> Result<IdentityResiduals> {
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::invalid(format!(
            "r = {r} must be finite and non-negative"
        )));
    }
    let comm = -2.0 * ops.hbar * (b_q * b_p.conj()).im;
    if (comm - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!("[A, A^dagger] = {comm}, not 1")));
    }
    if x.nrows() != ops.n || x.ncols() != ops.n {
        return Err(Error::invalid("operator does not match the truncation"));
    }
    let a = ops.linear(b_q, b_p);
    let ad = a.adjoint();
    let (k, l) = match (which, picture) {
        (DampingIdentity::Attenuator, Picture::State) => (&ad * &a, a.clone()),
        (DampingIdentity::AmplifierDampingWeight | DampingIdentity::Amplifier, Picture::State) => {
            (&a * &ad, ad.clone())
        }
        (DampingIdentity::Attenuator, Picture::Observable) => (&ad * &a, ad.clone()),
        (
            DampingIdentity::AmplifierDampingWeight | DampingIdentity::Amplifier,
            Picture::Observable,
        ) => (&a * &ad, a.clone()),
    };
    let ld = l.adjoint();
    let two = C64::new(2.0, 0.0);
    // the bracket is K x + x K - 2 L x L^dagger in all four cases
    let bracket = |y: &DMatrix<C64>| (&k * y + y * &k - &l * y * &ld * two) * C64::new(-r, 0.0);
    let kn = spectral_bound(&k);
    let ln = spectral_bound(&l);
    let lhs = expm_action(bracket, x, r * (2.0 * kn + 2.0 * ln * ln))?;

    let e = expm(&(&k * C64::new(-r, 0.0)));
    let c = match which {
        DampingIdentity::Amplifier => (2.0 * r).exp_m1(),
        _ => -(-2.0 * r).exp_m1(),
    };
    let sandwich = |y: &DMatrix<C64>| &l * y * &ld * C64::new(c, 0.0);
    let outer = |y: &DMatrix<C64>| &e * y * &e;
    let mid = match picture {
        Picture::State => outer(&expm_action(sandwich, x, c * ln * ln)?),
        Picture::Observable => expm_action(sandwich, &outer(x), c * ln * ln)?,
    };

    let start = match picture {
        Picture::State => x.clone(),
        Picture::Observable => outer(x),
    };
    let mut term = start.clone();
    let mut sum = start;
    let mut terms = 1;
    for n in 1..10_000 {
        term = &l * term * &ld * C64::new(c / n as f64, 0.0);
        sum += &term;
        terms += 1;
        if term.norm() < 1e-14 {
            break;
        }
        if n == 9_999 {
            return Err(Error::NonConvergence("Kraus sum did not terminate".into()));
        }
    }
    let kraus = match picture {
        Picture::State => outer(&sum),
        Picture::Observable => sum,
    };
    Ok(IdentityResiduals {
        exp_vs_sandwich: (&lhs - &mid).norm(),
        exp_vs_kraus: (&lhs - &kraus).norm(),
        sandwich_vs_kraus: (&mid - &kraus).norm(),
        kraus_terms: terms,
    })
}

const GAUSS_WINGS: f64 = 7.5;

/// Dephasing identity for a Hermitian `A`:
/// `exp(-tau{A,.,A}) rho` against the Gaussian average of
/// `e^{-iuA} rho e^{iuA}` with weight `(4 pi tau)^{-1/2} e^{-u^2 / 4 tau}`.
///
/// The average is a trapezoid rule on `|u| <= 7.5 sqrt(2 tau)` (tail mass
/// below `1e-13`), refined by doubling until it settles. Returns the
/// Frobenius distance between the two sides.
pub fn check_dephasing_average(a: &DMatrix<C64>, tau: f64, rho: &DMatrix<C64>) -> Result<f64> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::invalid(format!("tau = {tau} must be positive")));
    }
    if hermiticity_defect(a) > 1e-12 * norm1(a).max(1.0) {
        return Err(Error::NonHermitian(hermiticity_defect(a)));
    }
    let n = a.nrows();
    let two = C64::new(2.0, 0.0);
    let a2 = a * a;
    let bracket = |y: &DMatrix<C64>| (&a2 * y + y * &a2 - a * y * a * two) * C64::new(-tau, 0.0);
    let an = spectral_bound(a);
    let lhs = expm_action(bracket, rho, 4.0 * tau * an * an)?;

    let eig = SymmetricEigen::new(a.clone());
    let v = eig.eigenvectors;
    let lam: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
    let rho_t = v.adjoint() * rho * &v;
    let half = GAUSS_WINGS * (2.0 * tau).sqrt();
    let weight = |u: f64| (-u * u / (4.0 * tau)).exp() / (4.0 * std::f64::consts::PI * tau).sqrt();
    let average = |nodes: usize| -> DMatrix<C64> {
        let h = 2.0 * half / (nodes - 1) as f64;
        let mut f = DMatrix::<C64>::zeros(n, n);
        for k in 0..nodes {
            let u = -half + h * k as f64;
            let wk = weight(u) * h * if k == 0 || k == nodes - 1 { 0.5 } else { 1.0 };
            let ph: Vec<C64> = lam.iter().map(|l| C64::from_polar(1.0, -u * l)).collect();
            for j in 0..n {
                for i in 0..n {
                    f[(i, j)] += ph[i] * ph[j].conj() * wk;
                }
            }
        }
        f
    };
    let mut nodes = 65;
    let mut prev = average(nodes);
    loop {
        nodes = 2 * nodes - 1;
        let next = average(nodes);
        let change = (&next - &prev).camax();
        prev = next;
        if change < 1e-14 {
            break;
        }
        if nodes > 1 << 18 {
            return Err(Error::NonConvergence(format!(
                "dephasing quadrature still moving by {change:e}"
            )));
        }
    }
    let rhs = &v * rho_t.component_mul(&prev) * v.adjoint();
    Ok((lhs - rhs).norm())
}

/// The pair `A = -i({q,.,p} - {p,.,q}) / (4 hbar)`, `B = -{q,.,q}` with
/// `[A, B] = B`.
pub fn merge_pair(hbar: f64) -> (SuperCoeffs, SuperCoeffs) {
    let a = (SuperCoeffs::qp() - SuperCoeffs::pq()).scale(C64::new(0.0, -1.0 / (4.0 * hbar)));
    (a, SuperCoeffs::qq() * -1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MergeResidual {
    /// `|[A, B] x - B x|` on the interior block.
    pub pair_defect: f64,
    /// `|e^{r1 A} e^{r2 B} x - exp(r1 A + r1 r2 / (1 - e^{-r1}) B) x|`.
    pub residual: f64,
}

/// Largest entry difference on the leading `keep x keep` block.
fn interior_distance(a: &DMatrix<C64>, b: &DMatrix<C64>, keep: usize) -> f64 {
    let d = a - b;
    d.view((0, 0), (keep, keep)).camax()
}

/// Exponent merging for a pair with `[A, B] = B`. The pair condition is
/// checked on `x` away from the top of the truncation.
pub fn check_exponent_merge(
    ops: &TruncatedOperators,
    a: SuperCoeffs,
    b: SuperCoeffs,
    r1: f64,
    r2: f64,
    x: &DMatrix<C64>,
) -> Result<MergeResidual> {
    let la = Superoperator::new(ops, a);
    let lb = Superoperator::new(ops, b);
    let keep = ops.n.saturating_sub(6);
    let comm = la.apply(&lb.apply(x)) - lb.apply(&la.apply(x));
    let bx = lb.apply(x);
    let scale = bx.camax().max(1e-300);
    let pair_defect = interior_distance(&comm, &bx, keep) / scale;
    if pair_defect > 1e-8 {
        return Err(Error::invalid(format!(
            "pair violates [A, B] = B: relative defect {pair_defect:e}"
        )));
    }
    let left = expm_action(
        |y| la.apply(y) * C64::new(r1, 0.0),
        &expm_action(
            |y| lb.apply(y) * C64::new(r2, 0.0),
            x,
            r2.abs() * lb.norm_bound(),
        )?,
        r1.abs() * la.norm_bound(),
    )?;
    let phi = inv_expm1_ratio(-r1);
    let merged = Superoperator::new(ops, a * r1 + b * (phi * r2));
    let right = expm_action(|y| merged.apply(y), x, merged.norm_bound())?;
    Ok(MergeResidual {
        pair_defect,
        residual: (left - right).norm(),
    })
}

/// One row of the commutator table.
#[derive(Debug, Clone, PartialEq)]
pub struct TableEntry {
    pub label: &'static str,
    pub residual: f64,
}

/// Commutators of the five generators against their tabulated values, each
/// applied to `x` and compared on the interior block. Residuals are relative
/// to the larger of the two products `S1 S2 x`, `S2 S1 x`.
pub fn check_commutator_table(
    ops: &TruncatedOperators,
    b11: f64,
    b12: f64,
    b22: f64,
    x: &DMatrix<C64>,
) -> Vec<TableEntry> {
    let h = ops.hbar;
    let i2h = C64::new(0.0, 2.0 * h);
    let ls = SuperCoeffs::hamiltonian(b11, b12, b22);
    let (qq, pp, pq, qp) = (
        SuperCoeffs::qq(),
        SuperCoeffs::pp(),
        SuperCoeffs::pq(),
        SuperCoeffs::qp(),
    );
    let zero = SuperCoeffs::zero();
    let rows: Vec<(&'static str, SuperCoeffs, SuperCoeffs, SuperCoeffs)> = vec![
        (
            "[L_s, {q,.,q}]",
            ls,
            qq,
            qq * (-4.0 * b12) + (pq + qp) * (-2.0 * b22),
        ),
        (
            "[L_s, {p,.,p}]",
            ls,
            pp,
            pp * (4.0 * b12) + (pq + qp) * (2.0 * b11),
        ),
        (
            "[L_s, {p,.,q}]",
            ls,
            pq,
            qq * (2.0 * b11) + pp * (-2.0 * b22),
        ),
        (
            "[L_s, {q,.,p}]",
            ls,
            qp,
            qq * (2.0 * b11) + pp * (-2.0 * b22),
        ),
        ("[{q,.,q}, {p,.,p}]", qq, pp, zero),
        ("[{q,.,q}, {p,.,q}]", qq, pq, qq.scale(i2h)),
        ("[{q,.,q}, {q,.,p}]", qq, qp, qq.scale(-i2h)),
        ("[{p,.,p}, {p,.,q}]", pp, pq, pp.scale(i2h)),
        ("[{p,.,p}, {q,.,p}]", pp, qp, pp.scale(-i2h)),
        ("[{p,.,q}, {q,.,p}]", pq, qp, (pq + qp).scale(-i2h)),
    ];
    let keep = ops.n.saturating_sub(6);
    rows.into_iter()
        .map(|(label, a, b, rhs)| {
            let la = Superoperator::new(ops, a);
            let lb = Superoperator::new(ops, b);
            let (ab, ba) = (la.apply(&lb.apply(x)), lb.apply(&la.apply(x)));
            let expected = Superoperator::new(ops, rhs).apply(x);
            let scale = ab.camax().max(ba.camax());
            let d = interior_distance(&(ab - ba), &expected, keep);
            TableEntry {
                label,
                residual: if scale > 0.0 { d / scale } else { d },
            }
        })
        .collect()
}

/// Generator `(1/i hbar)[H, .] - sum_C {C,.,C}` for jump operators
/// `C = mu q + nu p`, given as `(mu, nu)` pairs.
pub fn lindblad_coeffs(b11: f64, b12: f64, b22: f64, jumps: &[(C64, C64)]) -> GeneratorCoeffs {
    let mut c = GeneratorCoeffs {
        b11,
        b12,
        b22,
        ..GeneratorCoeffs::zero()
    };
    for (mu, nu) in jumps {
        c.k1 += mu.norm_sqr();
        c.k2 += nu.norm_sqr();
        c.k3 -= mu * nu.conj();
    }
    c
}

/// Initial purity rate `-2 sum_C <psi|{C, |psi><psi|, C}|psi>` of a Lindblad
/// generator at the pure state `psi`.
pub fn lindblad_purity_rate(
    ops: &TruncatedOperators,
    jumps: &[(C64, C64)],
    psi: &DVector<C64>,
) -> f64 {
    let proj = psi * psi.adjoint();
    let mut rate = 0.0;
    for (mu, nu) in jumps {
        let c = ops.linear(*mu, *nu);
        let cd = c.adjoint();
        let br = &c * &cd * &proj + &proj * &c * &cd - &cd * &proj * &c * C64::new(2.0, 0.0);
        rate -= 2.0 * (psi.adjoint() * br * psi)[(0, 0)].re;
    }
    rate
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_damping_returns_input() {
        let ops = TruncatedOperators::new(10, 1.0, 1.0, 1.0).unwrap();
        let bq = C64::new(1.0 / 2f64.sqrt(), 0.0);
        let bp = C64::new(0.0, 1.0 / 2f64.sqrt());
        let mut x = DMatrix::zeros(10, 10);
        x[(2, 2)] = C64::new(1.0, 0.0);
        for which in [
            DampingIdentity::Attenuator,
            DampingIdentity::AmplifierDampingWeight,
        ] {
            let r = check_damping_identities(&ops, bq, bp, 0.0, &x, which, Picture::State).unwrap();
            assert!(r.max() < 1e-15);
        }
    }

    #[test]
    fn non_unit_commutator_rejected() {
        let ops = TruncatedOperators::new(10, 1.0, 1.0, 1.0).unwrap();
        let x = DMatrix::identity(10, 10);
        let e = check_damping_identities(
            &ops,
            C64::new(1.0, 0.0),
            C64::new(0.0, 1.0),
            0.3,
            &x,
            DampingIdentity::Attenuator,
            Picture::State,
        );
        assert!(e.is_err());
    }

    #[test]
    fn lindblad_coefficients_expand_the_bracket() {
        let ops = TruncatedOperators::new(12, 1.0, 1.3, 0.8).unwrap();
        let jumps = [(C64::new(0.4, 0.2), C64::new(-0.3, 0.7))];
        let gen = Superoperator::new(&ops, lindblad_coeffs(0.0, 0.0, 0.0, &jumps).into());
        let x = DMatrix::from_fn(12, 12, |i, j| {
            C64::new(1.0 / (1.0 + (i + j) as f64), (i as f64 - j as f64) * 0.05)
        });
        let c = ops.linear(jumps[0].0, jumps[0].1);
        let cd = c.adjoint();
        let br = &c * &cd * &x + &x * &c * &cd - &cd * &x * &c * C64::new(2.0, 0.0);
        assert!((gen.apply(&x) + br).norm() < 1e-12);
    }
}
