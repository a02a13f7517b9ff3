//! Randomized checks of the invariants the modules promise.

use alloc::vec::Vec;

use proptest::prelude::*;

use crate::actions::{power_action, subaction, Action, GeneratorMap};
use crate::bounds::{single_endo_entropy, torus_preimage_bound};
use crate::intmat::IntMatrix;
use crate::orbit_space::{
    max_separated, min_spanning, orbit_dist, project_pi, required_depth, skew_apply, CandidateSet, OrbitPoint,
    SkewPoint,
};
use crate::preimage::{apply_exact, preimage_count, preimages_exact};
use crate::rational::RatPoint;
use crate::spaces::{circle_dist, symbol_dist, torus_dist, Point, Space, SymbolWord};

const TOL: f64 = 1e-12;

fn unit() -> impl Strategy<Value = f64> {
    0.0..1.0f64
}

fn torus_point(dim: usize) -> impl Strategy<Value = Point> {
    proptest::collection::vec(unit(), dim).prop_map(Point::new)
}

fn word(k: u8, len: usize) -> impl Strategy<Value = SymbolWord> {
    proptest::collection::vec(1..=k, len).prop_map(move |s| SymbolWord::new(s, k).unwrap())
}

fn multipliers() -> impl Strategy<Value = Vec<i64>> {
    proptest::collection::btree_set(1i64..=6, 1..=3).prop_map(|s| s.into_iter().collect())
}

fn nonsingular(dim: usize) -> impl Strategy<Value = IntMatrix> {
    proptest::collection::vec(proptest::collection::vec(-3i64..=3, dim), dim)
        .prop_map(|rows| IntMatrix::from_rows(&rows).unwrap())
        .prop_filter("nonsingular with small determinant", |m| {
            let d = m.det().unsigned_abs();
            d != 0 && d <= 24
        })
}

fn rat_circle() -> impl Strategy<Value = RatPoint> {
    (1i64..=97).prop_flat_map(|q| (0..q, Just(q))).prop_map(|(p, q)| RatPoint::circle(p, q))
}

/// Largest pairwise-separated subset by exhaustive search.
fn exhaustive_max(sep: &[Vec<bool>]) -> usize {
    let m = sep.len();
    (0u32..1 << m)
        .filter(|&mask| {
            (0..m).all(|i| mask & 1 << i == 0 || (i + 1..m).all(|j| mask & 1 << j == 0 || sep[i][j]))
        })
        .map(|mask| mask.count_ones() as usize)
        .max()
        .unwrap_or(0)
}

fn orbit_points(k: u8, depth: usize, max: usize) -> impl Strategy<Value = Vec<OrbitPoint>> {
    proptest::collection::vec((unit(), word(k, depth - 1)), 2..=max)
        .prop_map(|v| v.into_iter().map(|(x, w)| OrbitPoint::new(Point::circle(x), w)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn circle_and_torus_metrics(x in torus_point(3), y in torus_point(3), z in torus_point(3)) {
        let d = |a: &Point, b: &Point| torus_dist(a, b).unwrap();
        prop_assert_eq!(d(&x, &x), 0.0);
        prop_assert_eq!(d(&x, &y), d(&y, &x));
        prop_assert!(d(&x, &z) <= d(&x, &y) + d(&y, &z) + TOL);
        prop_assert!(d(&x, &y) <= 0.5);
        let c = |p: &Point| Point::circle(p.coords()[0]);
        let (cx, cy, cz) = (c(&x), c(&y), c(&z));
        prop_assert_eq!(circle_dist(&cx, &cy), circle_dist(&cy, &cx));
        prop_assert!(circle_dist(&cx, &cz) <= circle_dist(&cx, &cy) + circle_dist(&cy, &cz) + TOL);
        prop_assert_eq!(Space::Torus(3).distance(&x, &y).unwrap(), d(&x, &y));
    }

    #[test]
    fn symbolic_metric(u in word(3, 10), v in word(3, 10), w in word(3, 10)) {
        let d = |a: &SymbolWord, b: &SymbolWord| symbol_dist(a, b).unwrap();
        prop_assert!(d(&u, &u).value == 0.0 && d(&u, &u).tail_bound >= 0.0);
        prop_assert_eq!(d(&u, &v), d(&v, &u));
        prop_assert!(d(&u, &w).value <= d(&u, &v).upper() + d(&v, &w).upper() + TOL);
    }

    #[test]
    fn orbit_metric(l in multipliers(), x in unit(), y in unit(), z in unit(), seed in any::<u64>()) {
        let t = Action::circle_linear(&l).unwrap();
        let k = t.k() as u8;
        let w = |s: u64| {
            let symbols: Vec<u8> = (0..8).map(|i| ((s >> (3 * i)) % k as u64) as u8 + 1).collect();
            SymbolWord::new(symbols, k).unwrap()
        };
        let p = |x0: f64, s: u64| OrbitPoint::new(Point::circle(x0), w(s));
        let (a, b, c) = (p(x, seed), p(y, seed.rotate_left(7)), p(z, seed.rotate_left(19)));
        let d = |a: &OrbitPoint, b: &OrbitPoint| orbit_dist(&t, a, b).unwrap();
        prop_assert_eq!(d(&a, &a).value, 0.0);
        prop_assert_eq!(d(&a, &b), d(&b, &a));
        prop_assert!(d(&a, &c).value <= d(&a, &b).upper() + d(&b, &c).upper() + TOL);
        // weights 2^-n from n = 0 give the orbit space diameter 2 * 0.5
        prop_assert!(d(&a, &b).value <= 1.0);
        let longer = OrbitPoint::new(a.x0.clone(), SymbolWord::new([a.itinerary.symbols(), &[1]].concat(), k).unwrap());
        let other = OrbitPoint::new(b.x0.clone(), SymbolWord::new([b.itinerary.symbols(), &[1]].concat(), k).unwrap());
        prop_assert_eq!(d(&longer, &other).tail_bound, d(&a, &b).tail_bound / 2.0);
    }

    #[test]
    fn skew_product_factors_onto_the_shift(
        l in multipliers(),
        x in unit(),
        symbols in proptest::collection::vec(0u8..6, 12),
        depth in 1usize..=10,
    ) {
        let t = Action::circle_linear(&l).unwrap();
        let k = t.k() as u8;
        let word = SymbolWord::new(symbols.iter().map(|s| s % k + 1).collect::<Vec<_>>(), k).unwrap();
        let s = SkewPoint { word, x: Point::circle(x) };
        let lhs = project_pi(&t, &skew_apply(&t, &s).unwrap(), depth).unwrap();
        let rhs = project_pi(&t, &s, depth + 1).unwrap().shift(&t).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn powers_are_repeated_application(l in 1i64..=7, m in 1u32..=4, x in rat_circle()) {
        let g = GeneratorMap::linear(l).unwrap();
        let mut y = x.clone();
        for _ in 0..m {
            y = apply_exact(&g, &y).unwrap();
        }
        prop_assert_eq!(apply_exact(&g.power(m).unwrap(), &x).unwrap(), y);
    }

    #[test]
    fn torus_powers_are_repeated_application(a in nonsingular(2), m in 1u32..=3, p in 0i64..31, q in 0i64..37) {
        let g = GeneratorMap::matrix(a).unwrap();
        let x = RatPoint::from_ratios(&[(p, 31), (q, 37)]);
        let mut y = x.clone();
        for _ in 0..m {
            y = apply_exact(&g, &y).unwrap();
        }
        prop_assert_eq!(apply_exact(&g.power(m).unwrap(), &x).unwrap(), y);
    }

    #[test]
    fn generic_powers_are_repeated_application(alpha in 0.0..1.0f64, m in 1u32..=5, x in unit()) {
        let g = GeneratorMap::rotation(alpha).unwrap();
        let p = g.power(m).unwrap();
        let mut y = Point::circle(x);
        for _ in 0..m {
            y = g.apply(&y).unwrap();
        }
        prop_assert!(circle_dist(&p.apply(&Point::circle(x)).unwrap(), &y) <= TOL);
    }

    #[test]
    fn power_actions_raise_every_generator(l in multipliers(), m in 1u32..=3) {
        let t = Action::circle_linear(&l).unwrap();
        let expected: Vec<i64> = l.iter().map(|v| v.pow(m)).collect();
        prop_assert_eq!(power_action(&t, m).unwrap().circle_multipliers(), Some(expected));
    }

    #[test]
    fn nested_subactions(
        l in proptest::collection::btree_set(1i64..=9, 4..=6),
        outer in proptest::collection::btree_set(0usize..6, 1..=6),
        inner in proptest::collection::btree_set(0usize..6, 1..=6),
    ) {
        let l: Vec<i64> = l.into_iter().collect();
        let k = l.len();
        let outer: Vec<usize> = outer.into_iter().filter(|&i| i < k).map(|i| i + 1).collect();
        prop_assume!(!outer.is_empty());
        let inner: Vec<usize> = inner.into_iter().filter(|&i| i < outer.len()).map(|i| i + 1).collect();
        prop_assume!(!inner.is_empty());
        let t = Action::circle_linear(&l).unwrap();
        let nested = subaction(&subaction(&t, &outer).unwrap(), &inner).unwrap();
        let composed: Vec<usize> = inner.iter().map(|&j| outer[j - 1]).collect();
        let direct = subaction(&t, &composed).unwrap();
        prop_assert_eq!(nested.circle_multipliers(), direct.circle_multipliers());
    }

    #[test]
    fn circle_preimages_map_back(l in 1i64..=9, x in rat_circle()) {
        let g = GeneratorMap::linear(l).unwrap();
        let pre = preimages_exact(&g, &x).unwrap();
        prop_assert_eq!(pre.len() as u128, preimage_count(&g).unwrap());
        for p in &pre {
            prop_assert_eq!(&apply_exact(&g, p).unwrap(), &x);
        }
    }

    #[test]
    fn spanning_dominates_double_scale_separation(l in multipliers(), eps in 0.05..0.3f64, n in 1usize..=3) {
        let t = Action::circle_linear(&l).unwrap();
        let depth = required_depth(t.space(), n, eps);
        prop_assume!(crate::orbit_space::candidate_count(t.k(), 1, depth, 1.0 / 32.0) <= 20_000);
        let points = crate::orbit_space::enumerate_candidates(&t, depth, 1.0 / 32.0, 20_000).unwrap();
        let span = min_spanning(&points, n, eps).unwrap().count;
        let sep = max_separated(&points, n, 2.0 * eps).unwrap().count;
        prop_assert!(span >= sep, "span {} < sep {}", span, sep);
    }

    #[test]
    fn greedy_count_is_a_separated_set(points in orbit_points(2, 6, 12), eps in 0.05..0.3f64) {
        let t = Action::circle_linear(&[2, 3]).unwrap();
        let set = CandidateSet::from_points(&t, &points).unwrap();
        let n = 6 - crate::orbit_space::tail_depth(Space::Circle, eps).min(5);
        prop_assume!(n >= 1);
        let kept = set.separated_indices(n, eps).unwrap();
        for (a, &i) in kept.iter().enumerate() {
            for &j in &kept[a + 1..] {
                prop_assert!(set.is_separated(i, j, n, eps).unwrap());
            }
        }
        prop_assert!(kept.len() <= exhaustive_max(&set.separation_matrix(n, eps).unwrap()));
    }

    #[test]
    fn packing_number_monotone_in_n_and_eps(points in orbit_points(2, 9, 12), e1 in 0.1..0.3f64, e2 in 0.1..0.3f64) {
        let t = Action::circle_linear(&[2, 3]).unwrap();
        let set = CandidateSet::from_points(&t, &points).unwrap();
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        let max_n = 9 - crate::orbit_space::tail_depth(Space::Circle, lo);
        let exact = |n: usize, eps: f64| exhaustive_max(&set.separation_matrix(n, eps).unwrap());
        for n in 1..max_n {
            prop_assert!(exact(n, lo) <= exact(n + 1, lo));
            prop_assert!(exact(n, lo) >= exact(n, hi));
        }
    }

    #[test]
    fn subaction_candidates_embed(points in orbit_points(1, 6, 10), extra in orbit_points(2, 6, 6), eps in 0.1..0.3f64) {
        let t = Action::circle_linear(&[2, 3]).unwrap();
        let sub = subaction(&t, &[1]).unwrap();
        let n = 6 - crate::orbit_space::tail_depth(Space::Circle, eps);
        prop_assume!(n >= 1);
        let embedded: Vec<OrbitPoint> = points
            .iter()
            .map(|p| OrbitPoint::new(p.x0.clone(), SymbolWord::new(p.itinerary.symbols().to_vec(), 2).unwrap()))
            .collect();
        let small = CandidateSet::from_points(&sub, &points).unwrap();
        let large = CandidateSet::from_points(&t, &[embedded, extra].concat()).unwrap();
        let exact = |s: &CandidateSet| exhaustive_max(&s.separation_matrix(n, eps).unwrap());
        prop_assert!(exact(&small) <= exact(&large));
    }

    #[test]
    fn torus_preimage_count_is_det(a in nonsingular(2), p in 0i64..13, q in 0i64..17) {
        let g = GeneratorMap::matrix(a.clone()).unwrap();
        let x = RatPoint::from_ratios(&[(p, 13), (q, 17)]);
        let pre = preimages_exact(&g, &x).unwrap();
        prop_assert_eq!(pre.len() as u128, a.det().unsigned_abs());
        for y in &pre {
            prop_assert_eq!(&apply_exact(&g, y).unwrap(), &x);
        }
        // the bound is only defined for expanding matrices
        if let Ok(bound) = torus_preimage_bound(&Action::torus(alloc::vec![a.clone()]).unwrap()) {
            prop_assert!((bound.value - crate::math::ln(a.det().unsigned_abs() as f64)).abs() < 1e-12);
        }
    }

    #[test]
    fn single_endo_is_log_det_when_expanding(a in nonsingular(3)) {
        let report = single_endo_entropy(&a).unwrap();
        let moduli = &report.moduli[0];
        let product: f64 = moduli.iter().product();
        prop_assert!((product - a.det().unsigned_abs() as f64).abs() <= 1e-7 * product.max(1.0));
        if moduli.iter().all(|&m| m > 1.0 + 1e-6) {
            prop_assert!((report.value - crate::math::ln(a.det().unsigned_abs() as f64)).abs() < 1e-9);
        }
    }
}

/// Greedy packing in a fixed order is not monotone in `eps` even though
/// the packing number is: a coarser scale can admit an early candidate that
/// blocks fewer later ones.
#[test]
fn greedy_counts_need_not_shrink_with_eps() {
    let t = Action::circle_linear(&[2, 3]).unwrap();
    let (lo, hi) = (0.2589457888828438, 0.2828182308477212);
    let depth = required_depth(t.space(), 3, lo);
    let points = crate::orbit_space::enumerate_candidates(&t, depth, 1.0 / 32.0, 20_000).unwrap();
    let greedy = |eps: f64| max_separated(&points, 2, eps).unwrap().count;
    assert_eq!((greedy(lo), greedy(hi)), (11, 12));
}
