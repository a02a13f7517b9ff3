//! Closed-form entropy bounds and the entropy of a single toral
//! endomorphism.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::actions::{Action, GeneratorMap};
use crate::error::{Error, Result};
use crate::intmat::IntMatrix;
use crate::math::{abs, ln};
use crate::rational::to_f64;

/// Moduli closer than this to 1 are reported as boundary cases.
pub const BOUNDARY_TOL: f64 = 1e-9;

/// Allowed gap between `|det|` and the product of eigenvalue moduli.
pub const DET_AGREEMENT_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    Lipschitz,
    Skew,
    TorusPreimage,
    SingleEndo,
}

impl fmt::Display for BoundKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundKind::Lipschitz => "lipschitz",
            BoundKind::Skew => "skew",
            BoundKind::TorusPreimage => "torus_preimage",
            BoundKind::SingleEndo => "single_endo",
        })
    }
}

/// A bound in nats together with the inputs it was computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub kind: BoundKind,
    pub value: f64,
    pub ball_dimension: Option<f64>,
    /// `L_+(T_i) = max(1, L(T_i))`.
    pub lipschitz: Vec<f64>,
    pub moduli: Vec<Vec<f64>>,
    pub determinants: Vec<i128>,
    /// Some modulus lies within `BOUNDARY_TOL` of 1.
    pub boundary: bool,
}

impl BoundReport {
    fn new(kind: BoundKind, value: f64) -> Self {
        BoundReport {
            kind,
            value,
            ball_dimension: None,
            lipschitz: Vec::new(),
            moduli: Vec::new(),
            determinants: Vec::new(),
            boundary: false,
        }
    }
}

/// Eigenvalues of an integer matrix from the roots of its characteristic
/// polynomial, with the exact determinant alongside.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<Complex64>,
    /// Sorted in decreasing order.
    pub moduli: Vec<f64>,
    pub det: i128,
}

impl Spectrum {
    pub fn of(a: &IntMatrix) -> Result<Spectrum> {
        let poly: Vec<BigRational> = a
            .char_poly()?
            .into_iter()
            .map(|c| BigRational::from_integer(BigInt::from(c)))
            .collect();
        // repeated eigenvalues are found once, on a square-free factor
        let mut eigenvalues = Vec::with_capacity(a.dim());
        for (factor, multiplicity) in square_free_factors(poly) {
            let coeffs: Vec<f64> = factor.iter().map(to_f64).collect();
            for z in polynomial_roots(&coeffs)? {
                eigenvalues.extend(core::iter::repeat_n(z, multiplicity));
            }
        }
        let mut moduli: Vec<f64> = eigenvalues.iter().map(|z| z.norm()).collect();
        moduli.sort_by(|x, y| y.total_cmp(x));
        Ok(Spectrum {
            eigenvalues,
            moduli,
            det: a.det(),
        })
    }

    pub fn modulus_product(&self) -> f64 {
        self.moduli.iter().product()
    }

    /// Relative gap between `prod |lambda|` and `|det|`.
    pub fn det_discrepancy(&self) -> f64 {
        let d = self.det.unsigned_abs() as f64;
        abs(self.modulus_product() - d) / d.max(1.0)
    }

    pub fn min_modulus(&self) -> f64 {
        self.moduli.last().copied().unwrap_or(0.0)
    }

    pub fn has_boundary(&self) -> bool {
        self.moduli.iter().any(|&m| abs(m - 1.0) <= BOUNDARY_TOL)
    }

    pub fn is_expanding(&self) -> bool {
        self.min_modulus() > 1.0 + BOUNDARY_TOL
    }
}

type Poly = Vec<BigRational>;

fn trim(mut p: Poly) -> Poly {
    while p.last().is_some_and(Zero::is_zero) {
        p.pop();
    }
    p
}

fn derivative(p: &Poly) -> Poly {
    trim(
        p.iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| c * BigRational::from_integer(BigInt::from(i)))
            .collect(),
    )
}

fn sub(a: &Poly, b: &Poly) -> Poly {
    let n = a.len().max(b.len());
    let zero = BigRational::zero();
    trim(
        (0..n)
            .map(|i| a.get(i).unwrap_or(&zero) - b.get(i).unwrap_or(&zero))
            .collect(),
    )
}

/// Quotient and remainder of `a / b`, `b` nonzero.
fn div_rem(a: &Poly, b: &Poly) -> (Poly, Poly) {
    let mut r = a.clone();
    let db = b.len() - 1;
    if r.len() <= db {
        return (Vec::new(), r);
    }
    let mut q = vec![BigRational::zero(); r.len() - db];
    let lead = &b[db];
    for i in (0..q.len()).rev() {
        let c = &r[i + db] / lead;
        for (j, bj) in b.iter().enumerate() {
            r[i + j] -= &c * bj;
        }
        q[i] = c;
    }
    r.truncate(db);
    (trim(q), trim(r))
}

fn monic(p: Poly) -> Poly {
    let lead = p.last().cloned().unwrap_or_else(BigRational::one);
    p.into_iter().map(|c| c / &lead).collect()
}

fn gcd(a: &Poly, b: &Poly) -> Poly {
    let (mut a, mut b) = (a.clone(), b.clone());
    while !b.is_empty() {
        let r = div_rem(&a, &b).1;
        a = b;
        b = r;
    }
    monic(a)
}

/// Yun's square-free decomposition: factors `a_i` with `p = prod a_i^i`.
fn square_free_factors(p: Poly) -> Vec<(Poly, usize)> {
    let p = monic(trim(p));
    let dp = derivative(&p);
    let a0 = gcd(&p, &dp);
    let mut b = div_rem(&p, &a0).0;
    let c = div_rem(&dp, &a0).0;
    let mut d = sub(&c, &derivative(&b));
    let mut out = Vec::new();
    let mut i = 1;
    while b.len() > 1 {
        let a = gcd(&b, &d);
        let next_b = div_rem(&b, &a).0;
        let c = div_rem(&d, &a).0;
        d = sub(&c, &derivative(&next_b));
        if a.len() > 1 {
            out.push((a, i));
        }
        b = next_b;
        i += 1;
    }
    out
}

fn horner(coeffs: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// Roots of `c_0 + c_1 z + ... + c_n z^n` by simultaneous Aberth iteration,
/// each polished with a few Newton steps.
pub fn polynomial_roots(coeffs: &[f64]) -> Result<Vec<Complex64>> {
    let n = coeffs.len().saturating_sub(1);
    let lead = *coeffs.last().unwrap_or(&0.0);
    if n == 0 || lead == 0.0 {
        return Err(Error::InvalidArgument("need a polynomial of degree >= 1".into()));
    }
    let monic: Vec<f64> = coeffs.iter().map(|c| c / lead).collect();
    let radius = 1.0 + monic[..n].iter().fold(0.0f64, |m, c| m.max(abs(*c)));
    let mut z: Vec<Complex64> = (0..n)
        .map(|j| Complex64::from_polar(radius, 0.4 + core::f64::consts::TAU * j as f64 / n as f64))
        .collect();
    let mut iterations = 0;
    loop {
        iterations += 1;
        let mut step = 0.0f64;
        for j in 0..n {
            let (p, dp) = horner(&monic, z[j]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let repulsion: Complex64 = (0..n).filter(|&i| i != j).map(|i| (z[j] - z[i]).inv()).sum();
            let w = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            if w.is_finite() {
                z[j] -= w;
                step = step.max(w.norm() / (1.0 + z[j].norm()));
            }
        }
        if step < 1e-15 {
            break;
        }
        if iterations >= 1000 {
            return Err(Error::NotConverged {
                iterations,
                residual: step,
            });
        }
    }
    for r in &mut z {
        for _ in 0..3 {
            let (p, dp) = horner(&monic, *r);
            let w = p / dp;
            if w.is_finite() && w.norm() < 1e-6 * (1.0 + r.norm()) {
                *r -= w;
            }
        }
        if abs(r.im) < 1e-12 * (1.0 + abs(r.re)) {
            r.im = 0.0;
        }
    }
    Ok(z)
}

/// Lipschitz constant for the metric in use: `|L|` for `x -> L x`, 1 for a
/// rotation, the max absolute row sum for a matrix (exact for the sup
/// metric), the declared constant otherwise.
pub fn lipschitz_constant(g: &GeneratorMap) -> f64 {
    abs(g.declared_lipschitz())
}

fn check_dimension(d: f64) -> Result<()> {
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::InvalidArgument(alloc::format!(
            "ball dimension must be positive and finite, got {d}"
        )));
    }
    Ok(())
}

fn plus_constants(t: &Action) -> Vec<f64> {
    t.generators().iter().map(|g| lipschitz_constant(g).max(1.0)).collect()
}

/// `log sum_i L_+(T_i)^D`.
pub fn lipschitz_bound(t: &Action, d: f64) -> Result<BoundReport> {
    check_dimension(d)?;
    let lp = plus_constants(t);
    let value = ln(lp.iter().map(|&l| libm::pow(l, d)).sum());
    Ok(BoundReport {
        ball_dimension: Some(d),
        lipschitz: lp,
        ..BoundReport::new(BoundKind::Lipschitz, value)
    })
}

/// `log k + D log max_i L_+(T_i)`: the bound for the skew product.
pub fn skew_bound(t: &Action, d: f64) -> Result<BoundReport> {
    check_dimension(d)?;
    let lp = plus_constants(t);
    let max = lp.iter().cloned().fold(1.0, f64::max);
    Ok(BoundReport {
        ball_dimension: Some(d),
        lipschitz: lp,
        ..BoundReport::new(BoundKind::Skew, ln(t.k() as f64) + d * ln(max))
    })
}

fn as_matrix(g: &GeneratorMap) -> Option<IntMatrix> {
    match g {
        GeneratorMap::TorusMatrix(a) => Some(a.clone()),
        GeneratorMap::CircleLinear(l) => Some(IntMatrix::diag(&[*l])),
        _ => None,
    }
}

/// `log sum_i |det A_i|` for expanding integer matrices (circle
/// multipliers count as 1x1 matrices).
pub fn torus_preimage_bound(t: &Action) -> Result<BoundReport> {
    let mut report = BoundReport::new(BoundKind::TorusPreimage, 0.0);
    let mut total: u128 = 0;
    for (index, g) in t.generators().iter().enumerate() {
        let a = as_matrix(g).ok_or(Error::Unsupported("non-matrix generators in the torus bound"))?;
        let spec = Spectrum::of(&a)?;
        if spec.det == 0 {
            return Err(Error::Singular);
        }
        if !spec.is_expanding() {
            return Err(Error::NotExpanding {
                index: index + 1,
                modulus: spec.min_modulus(),
            });
        }
        if spec.det_discrepancy() > DET_AGREEMENT_TOL {
            return Err(Error::NotConverged {
                iterations: 0,
                residual: spec.det_discrepancy(),
            });
        }
        total += spec.det.unsigned_abs();
        report.lipschitz.push(lipschitz_constant(g).max(1.0));
        report.determinants.push(spec.det);
        report.moduli.push(spec.moduli);
    }
    report.ball_dimension = Some(t.space().ball_dimension());
    report.value = ln(total as f64);
    Ok(report)
}

/// `sum_{|lambda| > 1} log |lambda|`. Moduli within `BOUNDARY_TOL` of 1
/// contribute nothing and set the `boundary` flag.
pub fn single_endo_entropy(a: &IntMatrix) -> Result<BoundReport> {
    let spec = Spectrum::of(a)?;
    if spec.det == 0 {
        return Err(Error::Singular);
    }
    let value = spec
        .moduli
        .iter()
        .filter(|&&m| m > 1.0 + BOUNDARY_TOL)
        .map(|&m| ln(m))
        .sum();
    Ok(BoundReport {
        boundary: spec.has_boundary(),
        determinants: vec![spec.det],
        moduli: vec![spec.moduli],
        ..BoundReport::new(BoundKind::SingleEndo, value)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actions::Action;

    fn m(rows: &[&[i64]]) -> IntMatrix {
        IntMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn lipschitz_constants() {
        assert_eq!(lipschitz_constant(&GeneratorMap::linear(3).unwrap()), 3.0);
        assert_eq!(lipschitz_constant(&GeneratorMap::rotation(0.3).unwrap()), 1.0);
        assert_eq!(lipschitz_constant(&GeneratorMap::matrix(IntMatrix::diag(&[2, 3])).unwrap()), 3.0);
    }

    #[test]
    fn lipschitz_and_skew_bounds() {
        let c = Action::circle_linear(&[2, 3]).unwrap();
        assert!((lipschitz_bound(&c, 1.0).unwrap().value - 5f64.ln()).abs() < 1e-15);
        assert!((skew_bound(&c, 1.0).unwrap().value - 6f64.ln()).abs() < 1e-15);
        let r = Action::circle_rotations(&[0.1, 0.2]).unwrap();
        assert!((lipschitz_bound(&r, 1.0).unwrap().value - 2f64.ln()).abs() < 1e-15);
        let r3 = Action::circle_rotations(&[0.1, 0.2, 0.3]).unwrap();
        assert!((skew_bound(&r3, 1.0).unwrap().value - 3f64.ln()).abs() < 1e-15);
        let t = Action::torus(vec![IntMatrix::diag(&[2, 2]), IntMatrix::diag(&[3, 3])]).unwrap();
        assert!((lipschitz_bound(&t, 2.0).unwrap().value - 13f64.ln()).abs() < 1e-15);
        assert!(lipschitz_bound(&c, 0.0).is_err());
        assert!(lipschitz_bound(&c, f64::INFINITY).is_err());
    }

    #[test]
    fn torus_bound() {
        let t = Action::torus(vec![IntMatrix::diag(&[2, 2]), IntMatrix::diag(&[3, 3])]).unwrap();
        let r = torus_preimage_bound(&t).unwrap();
        assert!((r.value - 13f64.ln()).abs() < 1e-15);
        assert_eq!(r.determinants, vec![4, 9]);
        let c = Action::circle_linear(&[2, 3]).unwrap();
        assert!((torus_preimage_bound(&c).unwrap().value - 5f64.ln()).abs() < 1e-15);
        let cat = Action::torus(vec![m(&[&[2, 1], &[1, 1]])]).unwrap();
        match torus_preimage_bound(&cat) {
            Err(Error::NotExpanding { index: 1, modulus }) => {
                assert!((modulus - (3.0 - 5f64.sqrt()) / 2.0).abs() < 1e-12)
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn single_endomorphisms() {
        let r = single_endo_entropy(&IntMatrix::diag(&[2, 3])).unwrap();
        assert!((r.value - 6f64.ln()).abs() < 1e-9);
        assert!(!r.boundary);
        let rot = single_endo_entropy(&m(&[&[0, -1], &[1, 0]])).unwrap();
        assert_eq!(rot.value, 0.0);
        assert!(rot.boundary);
        let fib = single_endo_entropy(&m(&[&[1, 1], &[1, 0]])).unwrap();
        assert!((fib.value - ((1.0 + 5f64.sqrt()) / 2.0).ln()).abs() < 1e-12);
        assert!(matches!(single_endo_entropy(&m(&[&[1, 1], &[1, 1]])), Err(Error::Singular)));
    }

    #[test]
    fn roots_of_known_polynomials() {
        // (z - 1)(z + 2)(z - 3) = z^3 - 2z^2 - 5z + 6
        let mut r: Vec<f64> = polynomial_roots(&[6.0, -5.0, -2.0, 1.0])
            .unwrap()
            .iter()
            .map(|z| z.re)
            .collect();
        r.sort_by(f64::total_cmp);
        for (a, b) in r.iter().zip([-2.0, 1.0, 3.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        let i = polynomial_roots(&[1.0, 0.0, 1.0]).unwrap();
        assert!(i.iter().all(|z| (z.norm() - 1.0).abs() < 1e-14 && z.re.abs() < 1e-14));
    }

    #[test]
    fn square_free_decomposition() {
        let q = |v: &[i64]| v.iter().map(|&c| BigRational::from_integer(BigInt::from(c))).collect::<Poly>();
        // (z - 2)^3 (z + 1) = z^4 - 5z^3 + 6z^2 + 4z - 8
        let f = square_free_factors(q(&[-8, 4, 6, -5, 1]));
        assert_eq!(f, vec![(q(&[1, 1]), 1), (q(&[-2, 1]), 3)]);
        let s = Spectrum::of(&IntMatrix::diag(&[2, 2, 2])).unwrap();
        assert_eq!(s.moduli, vec![2.0; 3]);
    }

    #[test]
    fn expanding_entropy_is_log_det() {
        for a in [
            m(&[&[2, 1], &[0, 2]]),
            m(&[&[3, 1], &[1, 2]]),
            m(&[&[2, 0, 1], &[1, 3, 0], &[0, 1, 2]]),
            IntMatrix::diag(&[2, 2, 2]),
        ] {
            let s = Spectrum::of(&a).unwrap();
            assert!(s.is_expanding());
            assert!(s.det_discrepancy() < 1e-9, "{a}");
            let h = single_endo_entropy(&a).unwrap().value;
            assert!((h - (s.det.unsigned_abs() as f64).ln()).abs() < 1e-9, "{a}");
        }
    }
}
