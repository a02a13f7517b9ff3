//! Generators and `Z+^k` actions, plus the derived actions obtained by
//! taking powers, restricting to a subcollection of generators, or
//! conjugating by a homeomorphism.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::intmat::IntMatrix;
use crate::math::{abs, frac};
pub use crate::spaces::Space;
use crate::spaces::{flat_dist, Point};

/// Pointwise map of the base space, used for generic generators and
/// conjugating homeomorphisms.
pub type PointMap = Arc<dyn Fn(&Point) -> Point + Send + Sync>;

/// Grid size for sampled comparisons of generic maps.
pub const SAMPLE_GRID: usize = 1024;
/// Tolerance for sampled pointwise equality of generic maps.
pub const SAMPLE_TOL: f64 = 1e-12;
/// Tolerance for the `h(h_inv(x)) = x` check of a conjugacy.
pub const INVERSE_TOL: f64 = 1e-9;

/// One generator of an action.
#[derive(Clone)]
pub enum GeneratorMap {
    /// `x -> L x mod 1` on the circle.
    CircleLinear(i64),
    /// `x -> x + alpha mod 1` on the circle.
    CircleRotation(f64),
    /// `x -> A x mod 1` on the torus of dimension `A.dim()`.
    TorusMatrix(IntMatrix),
    /// Any continuous map together with a declared Lipschitz constant.
    Generic {
        space: Space,
        lipschitz: f64,
        map: PointMap,
        label: String,
    },
}

impl fmt::Debug for GeneratorMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeneratorMap::CircleLinear(l) => write!(f, "CircleLinear({l})"),
            GeneratorMap::CircleRotation(a) => write!(f, "CircleRotation({a})"),
            GeneratorMap::TorusMatrix(m) => write!(f, "TorusMatrix({m})"),
            GeneratorMap::Generic {
                space,
                lipschitz,
                label,
                ..
            } => write!(f, "Generic({label} on {space}, lip {lipschitz})"),
        }
    }
}

impl fmt::Display for GeneratorMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeneratorMap::CircleLinear(l) => write!(f, "x -> {l}x"),
            GeneratorMap::CircleRotation(a) => write!(f, "x -> x + {a}"),
            GeneratorMap::TorusMatrix(m) => write!(f, "x -> {m}x"),
            GeneratorMap::Generic { label, .. } => f.write_str(label),
        }
    }
}

impl GeneratorMap {
    pub fn linear(l: i64) -> Result<Self> {
        let g = GeneratorMap::CircleLinear(l);
        g.validate()?;
        Ok(g)
    }

    pub fn rotation(alpha: f64) -> Result<Self> {
        let g = GeneratorMap::CircleRotation(alpha);
        g.validate()?;
        Ok(g)
    }

    pub fn matrix(a: IntMatrix) -> Result<Self> {
        let g = GeneratorMap::TorusMatrix(a);
        g.validate()?;
        Ok(g)
    }

    pub fn generic(
        space: Space,
        lipschitz: f64,
        label: impl Into<String>,
        map: impl Fn(&Point) -> Point + Send + Sync + 'static,
    ) -> Result<Self> {
        let g = GeneratorMap::Generic {
            space,
            lipschitz,
            map: Arc::new(map),
            label: label.into(),
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            GeneratorMap::CircleLinear(l) if *l < 1 => Err(Error::InvalidGenerator(format!(
                "circle multiplier must be >= 1, got {l}"
            ))),
            GeneratorMap::CircleRotation(a) if !(0.0..1.0).contains(a) => Err(
                Error::InvalidGenerator(format!("rotation angle must lie in [0, 1), got {a}")),
            ),
            GeneratorMap::TorusMatrix(m) if m.det() == 0 => Err(Error::InvalidGenerator(format!(
                "torus matrix {m} is singular"
            ))),
            GeneratorMap::Generic { lipschitz, .. } if !(lipschitz.is_finite() && *lipschitz >= 0.0) => {
                Err(Error::InvalidGenerator(format!(
                    "declared Lipschitz constant must be finite and nonnegative, got {lipschitz}"
                )))
            }
            _ => Ok(()),
        }
    }

    pub fn space(&self) -> Space {
        match self {
            GeneratorMap::CircleLinear(_) | GeneratorMap::CircleRotation(_) => Space::Circle,
            GeneratorMap::TorusMatrix(m) => Space::Torus(m.dim()),
            GeneratorMap::Generic { space, .. } => *space,
        }
    }

    pub fn is_integer(&self) -> bool {
        matches!(self, GeneratorMap::CircleLinear(_) | GeneratorMap::TorusMatrix(_))
    }

    pub fn apply(&self, x: &Point) -> Result<Point> {
        let dim = self.space().dim();
        if x.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: x.dim(),
            });
        }
        let mut out = alloc::vec![0.0; dim];
        self.apply_into(x.coords(), &mut out);
        Ok(Point::from_normalized(out))
    }

    /// Applies the map to raw coordinates; dimensions are the caller's
    /// responsibility.
    #[inline]
    pub(crate) fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        match self {
            GeneratorMap::CircleLinear(l) => out[0] = frac(*l as f64 * x[0]),
            GeneratorMap::CircleRotation(a) => out[0] = frac(x[0] + a),
            GeneratorMap::TorusMatrix(m) => {
                for (o, row) in out.iter_mut().zip(m.rows()) {
                    let s: f64 = row.iter().zip(x).map(|(&a, &v)| a as f64 * v).sum();
                    *o = frac(s);
                }
            }
            GeneratorMap::Generic { map, .. } => {
                let y = map(&Point::new(x.to_vec()));
                out.copy_from_slice(y.coords());
            }
        }
    }

    /// The `m`-fold composition of this map with itself.
    pub fn power(&self, m: u32) -> Result<GeneratorMap> {
        if m == 0 {
            return Err(Error::InvalidArgument("power must be >= 1".into()));
        }
        Ok(match self {
            GeneratorMap::CircleLinear(l) => GeneratorMap::CircleLinear(
                l.checked_pow(m).ok_or(Error::Overflow("circle multiplier power"))?,
            ),
            GeneratorMap::TorusMatrix(a) => GeneratorMap::TorusMatrix(a.checked_pow(m)?),
            _ if m == 1 => self.clone(),
            GeneratorMap::CircleRotation(_) | GeneratorMap::Generic { .. } => {
                let base = self.clone();
                let lipschitz = libm::pow(base.declared_lipschitz(), m as f64);
                GeneratorMap::Generic {
                    space: self.space(),
                    lipschitz,
                    label: format!("({self})^{m}"),
                    map: Arc::new(move |x: &Point| {
                        let mut y = x.clone();
                        for _ in 0..m {
                            y = base.apply(&y).expect("dimension fixed at construction");
                        }
                        y
                    }),
                }
            }
        })
    }

    /// Lipschitz constant for the sup-product metric.
    pub fn declared_lipschitz(&self) -> f64 {
        match self {
            GeneratorMap::CircleLinear(l) => *l as f64,
            GeneratorMap::CircleRotation(_) => 1.0,
            GeneratorMap::TorusMatrix(m) => m.max_abs_row_sum() as f64,
            GeneratorMap::Generic { lipschitz, .. } => *lipschitz,
        }
    }

    /// Structural equality for two integer maps of the same kind, sampled
    /// pointwise equality otherwise.
    pub fn same_map(&self, other: &GeneratorMap) -> bool {
        if self.space() != other.space() {
            return false;
        }
        match (self, other) {
            (GeneratorMap::CircleLinear(a), GeneratorMap::CircleLinear(b)) => a == b,
            (GeneratorMap::TorusMatrix(a), GeneratorMap::TorusMatrix(b)) => a == b,
            _ => sample_grid(self.space().dim())
                .iter()
                .all(|x| match (self.apply(x), other.apply(x)) {
                    (Ok(a), Ok(b)) => flat_dist(a.coords(), b.coords()) <= SAMPLE_TOL,
                    _ => false,
                }),
        }
    }

    fn commutes_with(&self, other: &GeneratorMap) -> bool {
        match (self, other) {
            (GeneratorMap::CircleLinear(_), GeneratorMap::CircleLinear(_))
            | (GeneratorMap::CircleRotation(_), GeneratorMap::CircleRotation(_)) => true,
            (GeneratorMap::TorusMatrix(a), GeneratorMap::TorusMatrix(b)) => {
                matches!((a.checked_mul(b), b.checked_mul(a)), (Ok(ab), Ok(ba)) if ab == ba)
            }
            (GeneratorMap::Generic { .. }, _) | (_, GeneratorMap::Generic { .. }) => false,
            _ => sample_grid(self.space().dim()).iter().all(|x| {
                let ab = self.apply(&other.apply(x).unwrap()).unwrap();
                let ba = other.apply(&self.apply(x).unwrap()).unwrap();
                flat_dist(ab.coords(), ba.coords()) <= SAMPLE_TOL
            }),
        }
    }
}

/// Deterministic sample of the base space: a uniform grid in the first
/// coordinate, golden-ratio offsets in the others.
pub fn sample_grid(dim: usize) -> Vec<Point> {
    const PHI: f64 = 0.618_033_988_749_894_9;
    (0..SAMPLE_GRID)
        .map(|j| {
            let t = j as f64 / SAMPLE_GRID as f64;
            Point::new((0..dim).map(|c| t + c as f64 * PHI * (j as f64 + 0.5)).collect::<Vec<_>>())
        })
        .collect()
}

/// A `Z+^k` action: `k` pairwise distinct generators on one common space.
#[derive(Clone, Debug)]
pub struct Action {
    space: Space,
    generators: Vec<GeneratorMap>,
}

impl Action {
    pub fn new(space: Space, generators: Vec<GeneratorMap>) -> Result<Self> {
        if generators.is_empty() {
            return Err(Error::InvalidAction("an action needs at least one generator".into()));
        }
        if generators.len() > u8::MAX as usize {
            return Err(Error::InvalidAction(format!(
                "at most {} generators supported",
                u8::MAX
            )));
        }
        if let Space::Torus(0) = space {
            return Err(Error::InvalidAction("torus dimension must be positive".into()));
        }
        for (i, g) in generators.iter().enumerate() {
            g.validate()?;
            if g.space() != space {
                return Err(Error::InvalidAction(format!(
                    "generator {} acts on {}, action space is {space}",
                    i + 1,
                    g.space()
                )));
            }
        }
        for i in 0..generators.len() {
            for j in i + 1..generators.len() {
                if generators[i].same_map(&generators[j]) {
                    return Err(Error::InvalidAction(format!(
                        "generators {} and {} coincide",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(Action { space, generators })
    }

    /// Circle action generated by `x -> L_i x mod 1`.
    pub fn circle_linear(multipliers: &[i64]) -> Result<Self> {
        let gens = multipliers
            .iter()
            .map(|&l| GeneratorMap::linear(l))
            .collect::<Result<Vec<_>>>()?;
        Action::new(Space::Circle, gens)
    }

    pub fn circle_rotations(angles: &[f64]) -> Result<Self> {
        let gens = angles
            .iter()
            .map(|&a| GeneratorMap::rotation(a))
            .collect::<Result<Vec<_>>>()?;
        Action::new(Space::Circle, gens)
    }

    pub fn torus(matrices: Vec<IntMatrix>) -> Result<Self> {
        let n = matrices
            .first()
            .map(IntMatrix::dim)
            .ok_or_else(|| Error::InvalidAction("an action needs at least one generator".into()))?;
        let gens = matrices
            .into_iter()
            .map(GeneratorMap::matrix)
            .collect::<Result<Vec<_>>>()?;
        Action::new(Space::Torus(n), gens)
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn k(&self) -> usize {
        self.generators.len()
    }

    pub fn generators(&self) -> &[GeneratorMap] {
        &self.generators
    }

    /// Generator with 1-based index `symbol`.
    pub fn generator(&self, symbol: u8) -> Result<&GeneratorMap> {
        (symbol as usize)
            .checked_sub(1)
            .and_then(|i| self.generators.get(i))
            .ok_or_else(|| Error::InvalidArgument(format!("no generator with index {symbol}")))
    }

    /// Multipliers `L_i` when every generator is `x -> L_i x`.
    pub fn circle_multipliers(&self) -> Option<Vec<i64>> {
        self.generators
            .iter()
            .map(|g| match g {
                GeneratorMap::CircleLinear(l) => Some(*l),
                _ => None,
            })
            .collect()
    }

    pub(crate) fn is_commuting(&self) -> bool {
        (0..self.k()).all(|i| (i + 1..self.k()).all(|j| self.generators[i].commutes_with(&self.generators[j])))
    }
}

/// Action generated by the `m`-th powers of the generators.
pub fn power_action(t: &Action, m: u32) -> Result<Action> {
    if m == 1 {
        return Ok(t.clone());
    }
    let gens = t
        .generators
        .iter()
        .map(|g| g.power(m))
        .collect::<Result<Vec<_>>>()?;
    Action::new(t.space, gens)
}

/// Action generated by the generators with the given 1-based indices, in
/// their original order.
pub fn subaction(t: &Action, indices: &[usize]) -> Result<Action> {
    if indices.is_empty() {
        return Err(Error::InvalidArgument("subaction needs at least one index".into()));
    }
    let mut sorted: Vec<usize> = indices.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let gens = sorted
        .iter()
        .map(|&i| {
            i.checked_sub(1)
                .and_then(|i| t.generators.get(i))
                .cloned()
                .ok_or_else(|| Error::InvalidArgument(format!("index {i} outside 1..={}", t.k())))
        })
        .collect::<Result<Vec<_>>>()?;
    Action::new(t.space, gens)
}

/// A homeomorphism of the base space with its inverse.
#[derive(Clone)]
pub struct Homeomorphism {
    pub forward: PointMap,
    pub inverse: PointMap,
    /// Lipschitz constants of `forward` and `inverse`.
    pub lipschitz: (f64, f64),
    pub label: String,
}

impl Homeomorphism {
    pub fn new(
        label: impl Into<String>,
        forward: impl Fn(&Point) -> Point + Send + Sync + 'static,
        inverse: impl Fn(&Point) -> Point + Send + Sync + 'static,
        lipschitz: (f64, f64),
    ) -> Self {
        Homeomorphism {
            forward: Arc::new(forward),
            inverse: Arc::new(inverse),
            lipschitz,
            label: label.into(),
        }
    }

    pub fn identity() -> Self {
        Homeomorphism::new("id", Point::clone, Point::clone, (1.0, 1.0))
    }

    /// Translation `x -> x + c mod 1` on the circle.
    pub fn circle_translation(c: f64) -> Self {
        Homeomorphism::new(
            format!("x + {c}"),
            move |p: &Point| Point::circle(p.x() + c),
            move |p: &Point| Point::circle(p.x() - c),
            (1.0, 1.0),
        )
    }

    /// `x -> x + a sin(2 pi x) / (2 pi) mod 1`, a smooth circle
    /// diffeomorphism for `|a| < 1`. The inverse is found by Newton's method.
    pub fn circle_sine(a: f64) -> Self {
        use core::f64::consts::TAU;
        let fwd = move |x: f64| x + a * libm::sin(TAU * x) / TAU;
        let inv = move |y: f64| {
            let mut x = y;
            for _ in 0..60 {
                let f = fwd(x) - y;
                let df = 1.0 + a * libm::cos(TAU * x);
                let step = f / df;
                x -= step;
                if abs(step) < 1e-17 {
                    break;
                }
            }
            x
        };
        Homeomorphism::new(
            format!("x + {a} sin(2 pi x)/(2 pi)"),
            move |p: &Point| Point::circle(fwd(p.x())),
            move |p: &Point| Point::circle(inv(p.x())),
            (1.0 + abs(a), 1.0 / (1.0 - abs(a))),
        )
    }

    /// Largest `d(h(h_inv(x)), x)` over the sample grid.
    pub fn inverse_error(&self, space: Space) -> (f64, f64) {
        sample_grid(space.dim())
            .iter()
            .map(|x| {
                let y = (self.forward)(&(self.inverse)(x));
                (flat_dist(y.coords(), x.coords()), x.coords()[0])
            })
            .fold((0.0, 0.0), |acc, e| if e.0 > acc.0 { e } else { acc })
    }
}

/// Conjugate action with generators `h . T_i . h_inv`.
pub fn conjugate_action(t: &Action, h: &Homeomorphism) -> Result<Action> {
    let (err, at) = h.inverse_error(t.space);
    if err > INVERSE_TOL {
        return Err(Error::InverseCheckFailed { error: err, at });
    }
    let gens = t
        .generators
        .iter()
        .map(|g| {
            let g2 = g.clone();
            let h2 = h.clone();
            GeneratorMap::Generic {
                space: t.space,
                lipschitz: h.lipschitz.0 * g.declared_lipschitz() * h.lipschitz.1,
                label: format!("h({g})h^-1"),
                map: Arc::new(move |x: &Point| {
                    let y = g2
                        .apply(&(h2.inverse)(x))
                        .expect("dimension fixed at construction");
                    (h2.forward)(&y)
                }),
            }
        })
        .collect::<Vec<_>>();
    Action::new(t.space, gens)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn apply_examples() {
        let p = GeneratorMap::linear(2).unwrap().apply(&Point::circle(0.75)).unwrap();
        assert_eq!(p.x(), 0.5);
        let m = GeneratorMap::matrix(IntMatrix::diag(&[2, 3])).unwrap();
        let p = m.apply(&Point::new([0.5, 0.5])).unwrap();
        assert_eq!(p.coords(), &[0.0, 0.5]);
        let r = GeneratorMap::rotation(0.25).unwrap().apply(&Point::circle(0.9)).unwrap();
        assert!((r.x() - 0.15).abs() < 1e-15);
        assert!(matches!(m.apply(&Point::circle(0.1)), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn invalid_generators() {
        assert!(GeneratorMap::linear(0).is_err());
        assert!(GeneratorMap::rotation(1.0).is_err());
        assert!(GeneratorMap::matrix(IntMatrix::from_rows(&[vec![1, 2], vec![2, 4]]).unwrap()).is_err());
    }

    #[test]
    fn action_rejects_duplicates_and_mixed_spaces() {
        assert!(Action::circle_linear(&[2, 2]).is_err());
        assert!(Action::circle_linear(&[]).is_err());
        // x -> 1x and the zero rotation are the same map
        let gens = vec![GeneratorMap::linear(1).unwrap(), GeneratorMap::rotation(0.0).unwrap()];
        assert!(Action::new(Space::Circle, gens).is_err());
        let gens = vec![
            GeneratorMap::linear(2).unwrap(),
            GeneratorMap::matrix(IntMatrix::diag(&[2, 2])).unwrap(),
        ];
        assert!(Action::new(Space::Circle, gens).is_err());
    }

    #[test]
    fn power_examples() {
        let t = Action::circle_linear(&[2, 3]).unwrap();
        assert_eq!(power_action(&t, 2).unwrap().circle_multipliers(), Some(vec![4, 9]));
        assert_eq!(power_action(&t, 1).unwrap().circle_multipliers(), Some(vec![2, 3]));
        let tor = Action::torus(vec![IntMatrix::diag(&[2, 2])]).unwrap();
        let p = power_action(&tor, 3).unwrap();
        assert!(matches!(&p.generators()[0], GeneratorMap::TorusMatrix(m) if *m == IntMatrix::diag(&[8, 8])));
        let big = Action::circle_linear(&[1 << 40]).unwrap();
        assert!(matches!(power_action(&big, 2), Err(Error::Overflow(_))));
    }

    #[test]
    fn subaction_examples() {
        let t = Action::circle_linear(&[2, 3, 5]).unwrap();
        assert_eq!(subaction(&t, &[1, 3]).unwrap().circle_multipliers(), Some(vec![2, 5]));
        assert_eq!(subaction(&t, &[3, 1, 2]).unwrap().circle_multipliers(), Some(vec![2, 3, 5]));
        let u = Action::circle_linear(&[2, 3]).unwrap();
        let s = subaction(&u, &[2]).unwrap();
        assert_eq!(s.k(), 1);
        assert_eq!(s.generator(1).unwrap().apply(&Point::circle(0.1)).unwrap().x(), frac(3.0 * 0.1));
        assert!(subaction(&t, &[]).is_err());
        assert!(subaction(&t, &[4]).is_err());
    }

    #[test]
    fn conjugate_by_identity_is_pointwise_unchanged() {
        let t = Action::circle_linear(&[2, 3]).unwrap();
        let c = conjugate_action(&t, &Homeomorphism::identity()).unwrap();
        for x in sample_grid(1).iter().step_by(7) {
            for (g, h) in t.generators().iter().zip(c.generators()) {
                assert_eq!(g.apply(x).unwrap(), h.apply(x).unwrap());
            }
        }
    }

    #[test]
    fn conjugate_by_translation_matches_expansion() {
        // h(x) = x + c: h T h^-1 (x) = L(x - c) + c = L x + c(1 - L)
        let c = 0.137;
        let t = Action::circle_linear(&[2, 3]).unwrap();
        let conj = conjugate_action(&t, &Homeomorphism::circle_translation(c)).unwrap();
        for j in 0..200 {
            let x = Point::circle(j as f64 / 200.0 + 0.0013);
            for (l, g) in [2.0, 3.0].iter().zip(conj.generators()) {
                let expected = Point::circle(l * x.x() + c * (1.0 - l));
                let got = g.apply(&x).unwrap();
                assert!(crate::spaces::circle_dist(&expected, &got) < 1e-12);
            }
        }
    }

    #[test]
    fn conjugate_by_sine_is_definitional() {
        let h = Homeomorphism::circle_sine(0.05);
        let t = Action::circle_linear(&[2, 3]).unwrap();
        let conj = conjugate_action(&t, &h).unwrap();
        for j in 0..100 {
            let x = Point::circle(j as f64 / 100.0);
            for (g, cg) in t.generators().iter().zip(conj.generators()) {
                let expected = (h.forward)(&g.apply(&(h.inverse)(&x)).unwrap());
                assert_eq!(cg.apply(&x).unwrap(), expected);
            }
        }
    }

    #[test]
    fn conjugate_rejects_bad_inverse() {
        let bad = Homeomorphism::new("bad", |p: &Point| Point::circle(p.x() + 0.1), Point::clone, (1.0, 1.0));
        let t = Action::circle_linear(&[2]).unwrap();
        assert!(matches!(conjugate_action(&t, &bad), Err(Error::InverseCheckFailed { .. })));
    }

    #[test]
    fn commuting_detection() {
        assert!(Action::circle_linear(&[2, 3]).unwrap().is_commuting());
        let mixed = Action::new(
            Space::Circle,
            vec![GeneratorMap::linear(2).unwrap(), GeneratorMap::rotation(0.3).unwrap()],
        )
        .unwrap();
        assert!(!mixed.is_commuting());
    }
}
