//! Preimage sets, preimage trees, and the preimage entropies `h_m` and
//! `h_i` of the shift on the orbit space.
//!
//! Preimages are computed in exact rational arithmetic. A tree of depth `l`
//! rooted at `x` is the set of branches `[z_l, ..., z_1, z_0 = x]` with
//! `T_{n_j}(z_j) = z_{j-1}`. Trees over the orbit space carry a forward
//! padding itinerary for the root, so that level `j` of a branch is the
//! orbit point `(z_j, ..., z_1, x_0, x_1, ...)`.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::actions::{Action, GeneratorMap};
use crate::error::{Error, Result};
use crate::intmat::IntMatrix;
use crate::math::abs;
use crate::orbit_space::{self, CandidateSet, EntropyEstimate, OrbitPoint};
use crate::rational::{self, from_f64, RatPoint};
use crate::spaces::{flat_dist, orbit_tail_bound, Point, Space, SymbolWord};

/// Separation scale below which expanding circle trees are isometric to
/// their roots.
pub const ISOMETRY_EPSILON: f64 = 0.1;

/// Roots with large prime denominators, off the exceptional sets of the
/// circle actions used here.
pub fn generic_roots(count: usize) -> Vec<RatPoint> {
    const PRIMES: [(i64, i64); 8] = [(1, 7), (3, 11), (5, 13), (7, 17), (11, 19), (13, 23), (17, 29), (19, 31)];
    PRIMES.iter().cycle().take(count).map(|&(n, d)| RatPoint::circle(n, d)).collect()
}

/// Exact image of a rational point.
pub fn apply_exact(g: &GeneratorMap, x: &RatPoint) -> Result<RatPoint> {
    check_dim(g.space(), x)?;
    match g {
        GeneratorMap::CircleLinear(l) => Ok(x.scale(*l)),
        GeneratorMap::CircleRotation(a) => Ok(x.translate(&[from_f64(*a)?])),
        GeneratorMap::TorusMatrix(a) => x.apply_matrix(a),
        GeneratorMap::Generic { .. } => Err(Error::Unsupported("exact images of generic maps")),
    }
}

fn check_dim(space: Space, x: &RatPoint) -> Result<()> {
    if x.dim() != space.dim() {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            got: x.dim(),
        });
    }
    Ok(())
}

/// Number of preimages of every point: `|L|`, 1, or `|det A|`.
pub fn preimage_count(g: &GeneratorMap) -> Result<u128> {
    match g {
        GeneratorMap::CircleLinear(l) => Ok(l.unsigned_abs() as u128),
        GeneratorMap::CircleRotation(_) => Ok(1),
        GeneratorMap::TorusMatrix(a) => Ok(a.det().unsigned_abs()),
        GeneratorMap::Generic { .. } => Err(Error::Unsupported("preimages of generic maps")),
    }
}

/// Exact preimages, sorted and distinct.
pub fn preimages_exact(g: &GeneratorMap, x: &RatPoint) -> Result<Vec<RatPoint>> {
    check_dim(g.space(), x)?;
    match g {
        GeneratorMap::CircleLinear(l) => {
            let den = BigRational::from_integer(BigInt::from(*l));
            let base = &x.coords()[0];
            let set: BTreeSet<RatPoint> = (0..l.unsigned_abs())
                .map(|j| RatPoint::new([(base + BigRational::from_integer(BigInt::from(j))) / &den]))
                .collect();
            Ok(set.into_iter().collect())
        }
        GeneratorMap::CircleRotation(a) => Ok(vec![x.translate(&[-from_f64(*a)?])]),
        GeneratorMap::TorusMatrix(a) => torus_preimages(a, x),
        GeneratorMap::Generic { .. } => Err(Error::Unsupported("preimages of generic maps")),
    }
}

/// `A^{-1}(x + v) mod 1` over integer shifts `v`. Every preimage `y` in
/// `[0,1)^n` has integer `v = A y - x` with `-row sum - 1 < v_i <= row sum`,
/// so the box `|v_i| <= row sum` covers all cosets; duplicates are removed
/// exactly.
fn torus_preimages(a: &IntMatrix, x: &RatPoint) -> Result<Vec<RatPoint>> {
    let inv = rational::inverse(a)?;
    let n = a.dim();
    let bound = a.max_abs_row_sum();
    let base = rational::mat_vec(&inv, x.coords());
    let mut v = vec![-bound; n];
    let mut set = BTreeSet::new();
    loop {
        let shift: Vec<BigRational> = v.iter().map(|&c| BigRational::from_integer(BigInt::from(c))).collect();
        let y = rational::mat_vec(&inv, &shift);
        set.insert(RatPoint::new(base.iter().zip(y).map(|(b, y)| b + y)));
        let mut i = 0;
        loop {
            if i == n {
                debug_assert_eq!(set.len() as u128, a.det().unsigned_abs());
                return Ok(set.into_iter().collect());
            }
            if v[i] < bound {
                v[i] += 1;
                break;
            }
            v[i] = -bound;
            i += 1;
        }
    }
}

/// Preimages of a base point under one generator.
#[derive(Debug, Clone)]
pub struct PreimageSet {
    pub base: RatPoint,
    pub generator: GeneratorMap,
    pub exact: Vec<RatPoint>,
}

impl PreimageSet {
    pub fn points(&self) -> Vec<Point> {
        self.exact.iter().map(RatPoint::to_point).collect()
    }

    pub fn len(&self) -> usize {
        self.exact.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exact.is_empty()
    }

    /// Every point maps exactly onto the base.
    pub fn verify(&self) -> Result<bool> {
        for p in &self.exact {
            if apply_exact(&self.generator, p)? != self.base {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Preimages of a float point, converted exactly to a rational first.
pub fn preimages(g: &GeneratorMap, x: &Point) -> Result<PreimageSet> {
    preimage_set(g, &RatPoint::from_point(x)?)
}

pub fn preimage_set(g: &GeneratorMap, x: &RatPoint) -> Result<PreimageSet> {
    Ok(PreimageSet {
        exact: preimages_exact(g, x)?,
        base: x.clone(),
        generator: g.clone(),
    })
}

/// Cardinality of `union_i T_i^{-1}(x)` after exact deduplication.
pub fn check_union_cardinality(t: &Action, x: &RatPoint) -> Result<usize> {
    let mut set = BTreeSet::new();
    for g in t.generators() {
        set.extend(preimages_exact(g, x)?);
    }
    Ok(set.len())
}

/// Generator choice per level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TreeChoice {
    /// `seq[j - 1]` is the generator taking level `j` to level `j - 1`.
    Sequence(Vec<u8>),
    AllSequences,
}

/// One backward chain `[z_l, ..., z_0]`; `symbols[m]` maps `points[m]` to
/// `points[m + 1]`, so the chain is a forward orbit segment from `z_l`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Branch {
    pub points: Vec<RatPoint>,
    pub symbols: Vec<u8>,
}

impl Branch {
    pub fn depth(&self) -> usize {
        self.symbols.len()
    }

    /// `z_j`.
    pub fn level(&self, j: usize) -> &RatPoint {
        &self.points[self.points.len() - 1 - j]
    }
}

#[derive(Debug, Clone)]
pub struct PreimageTree {
    pub root: RatPoint,
    pub depth: usize,
    pub choice: TreeChoice,
    pub branches: Vec<Branch>,
    /// Forward itinerary of the root for trees over the orbit space.
    pub padding: Option<SymbolWord>,
    space: Space,
    /// Per branch, the float orbit `z_l, ..., z_0, x_1, ..., x_P`.
    orbits: Vec<f64>,
}

impl PreimageTree {
    pub fn space(&self) -> Space {
        self.space
    }

    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    fn padding_len(&self) -> usize {
        self.padding.as_ref().map_or(0, SymbolWord::len)
    }

    fn orbit_len(&self) -> usize {
        self.depth + 1 + self.padding_len()
    }

    fn orbit(&self, b: usize) -> &[f64] {
        let w = self.orbit_len() * self.space.dim();
        &self.orbits[b * w..(b + 1) * w]
    }

    /// Distinct branch endpoints `z_l`.
    pub fn endpoints(&self) -> BTreeSet<RatPoint> {
        self.branches.iter().map(|b| b.points[0].clone()).collect()
    }

    /// Distinct branches as point sequences, ignoring which generator
    /// produced them: the points of `sigma_T^{-l}` of the root.
    pub fn distinct_branches(&self) -> BTreeSet<Vec<RatPoint>> {
        self.branches.iter().map(|b| b.points.clone()).collect()
    }

    /// The orbit point at level `j` of branch `b` (orbit-space trees).
    pub fn level_point(&self, b: usize, j: usize, k: u8) -> OrbitPoint {
        let br = &self.branches[b];
        let start = self.depth - j;
        let mut symbols = br.symbols[start..].to_vec();
        if let Some(p) = &self.padding {
            symbols.extend_from_slice(p.symbols());
        }
        OrbitPoint::new(br.points[start].to_point(), SymbolWord::new_unchecked(symbols, k))
    }

    /// Indented text, one branch per line with rational coordinates, root
    /// first in each line.
    pub fn write_dump(&self, out: &mut impl fmt::Write) -> fmt::Result {
        write!(out, "tree root={} depth={} branches={}", self.root, self.depth, self.len())?;
        if let Some(p) = &self.padding {
            write!(out, " padding={:?}", p.symbols())?;
        }
        writeln!(out)?;
        for b in &self.branches {
            out.write_str("  ")?;
            for (j, z) in b.points.iter().rev().enumerate() {
                if j > 0 {
                    write!(out, " <-{}- ", b.symbols[b.symbols.len() - j])?;
                }
                write!(out, "{z}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

fn branch_bound(t: &Action, choice: &TreeChoice, depth: usize) -> Result<u128> {
    let counts = t
        .generators()
        .iter()
        .map(preimage_count)
        .collect::<Result<Vec<_>>>()?;
    let mut total: u128 = 1;
    for j in 0..depth {
        let per = match choice {
            TreeChoice::AllSequences => counts.iter().sum(),
            TreeChoice::Sequence(seq) => {
                let s = *seq.get(j).ok_or(Error::InsufficientDepth {
                    required: depth,
                    got: seq.len(),
                })?;
                t.generator(s)?;
                counts[s as usize - 1]
            }
        };
        total = total.saturating_mul(per);
    }
    Ok(total)
}

/// Preimage tree of depth `l` rooted at `x`.
pub fn build_tree(t: &Action, x: &RatPoint, choice: TreeChoice, depth: usize, budget: usize) -> Result<PreimageTree> {
    build(t, x, choice, depth, None, budget)
}

/// Tree of `sigma_T`-preimages of the orbit point with base `x` and forward
/// itinerary `padding`.
pub fn build_orbit_tree(t: &Action, x: &RatPoint, padding: SymbolWord, depth: usize, budget: usize) -> Result<PreimageTree> {
    if padding.alphabet() as usize != t.k() {
        return Err(Error::InvalidArgument("padding alphabet does not match the action".into()));
    }
    build(t, x, TreeChoice::AllSequences, depth, Some(padding), budget)
}

fn build(
    t: &Action,
    x: &RatPoint,
    choice: TreeChoice,
    depth: usize,
    padding: Option<SymbolWord>,
    budget: usize,
) -> Result<PreimageTree> {
    check_dim(t.space(), x)?;
    let bound = branch_bound(t, &choice, depth)?;
    if bound > budget as u128 {
        return Err(Error::BudgetExceeded {
            required: bound,
            budget: budget as u128,
        });
    }
    // built root-first, reversed at the end
    let mut chains: Vec<(Vec<RatPoint>, Vec<u8>)> = vec![(vec![x.clone()], Vec::new())];
    for j in 0..depth {
        let gens: Vec<u8> = match &choice {
            TreeChoice::AllSequences => (1..=t.k() as u8).collect(),
            TreeChoice::Sequence(seq) => vec![seq[j]],
        };
        let mut next = Vec::with_capacity(chains.len() * gens.len());
        for (points, symbols) in &chains {
            let z = points.last().expect("chains are nonempty");
            for &s in &gens {
                for p in preimages_exact(t.generator(s)?, z)? {
                    let mut pts = points.clone();
                    pts.push(p);
                    let mut sy = symbols.clone();
                    sy.push(s);
                    next.push((pts, sy));
                }
            }
        }
        chains = next;
    }
    let branches: Vec<Branch> = chains
        .into_iter()
        .map(|(mut points, mut symbols)| {
            points.reverse();
            symbols.reverse();
            Branch { points, symbols }
        })
        .collect();

    let dim = t.dim();
    let pad: &[u8] = padding.as_ref().map_or(&[], |p| p.symbols());
    let w = (depth + 1 + pad.len()) * dim;
    let mut orbits = vec![0.0; branches.len() * w];
    let root = x.to_point();
    for (b, br) in branches.iter().enumerate() {
        let o = &mut orbits[b * w..(b + 1) * w];
        for (m, z) in br.points.iter().enumerate() {
            o[m * dim..(m + 1) * dim].copy_from_slice(z.to_point().coords());
        }
        o[depth * dim..(depth + 1) * dim].copy_from_slice(root.coords());
        for (m, &s) in pad.iter().enumerate() {
            let (head, tail) = o.split_at_mut((depth + 1 + m) * dim);
            t.generator(s)?.apply_into(&head[(depth + m) * dim..], &mut tail[..dim]);
        }
    }
    Ok(PreimageTree {
        root: x.clone(),
        depth,
        choice,
        branches,
        padding,
        space: t.space(),
        orbits,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceKind {
    Branch,
    Tree,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchDistanceReport {
    pub value: f64,
    pub kind: DistanceKind,
    /// Largest metric tail left out by truncation (0 for base-space trees).
    pub tail_bound: f64,
}

/// `max_j d(z_j, z'_j)` in the base space.
pub fn branch_dist(space: Space, a: &Branch, b: &Branch) -> Result<BranchDistanceReport> {
    if a.depth() != b.depth() {
        return Err(Error::DepthMismatch {
            left: a.depth(),
            right: b.depth(),
        });
    }
    let mut value = 0.0f64;
    for (x, y) in a.points.iter().zip(&b.points) {
        check_dim(space, x)?;
        check_dim(space, y)?;
        value = value.max(flat_dist(x.to_point().coords(), y.to_point().coords()));
    }
    Ok(BranchDistanceReport {
        value,
        kind: DistanceKind::Branch,
        tail_bound: 0.0,
    })
}

/// Per-level distances between branch `i` of `a` and branch `j` of `b`,
/// with the matching tails. Levels of orbit-space trees use the truncated
/// orbit metric.
struct LevelMetric {
    depth: usize,
    padded: bool,
    dim: usize,
    tails: Vec<f64>,
    d: Vec<f64>,
}

impl LevelMetric {
    fn new(a: &PreimageTree, b: &PreimageTree) -> Result<Self> {
        if a.depth != b.depth || a.padding_len() != b.padding_len() || a.padding.is_some() != b.padding.is_some() {
            return Err(Error::DepthMismatch {
                left: a.orbit_len(),
                right: b.orbit_len(),
            });
        }
        if a.space != b.space {
            return Err(Error::DimensionMismatch {
                expected: a.space.dim(),
                got: b.space.dim(),
            });
        }
        let padded = a.padding.is_some();
        let tails = (0..=a.depth)
            .map(|j| {
                if padded {
                    orbit_tail_bound(a.space.diameter(), j + 1 + a.padding_len())
                } else {
                    0.0
                }
            })
            .collect();
        Ok(LevelMetric {
            depth: a.depth,
            padded,
            dim: a.space.dim(),
            tails,
            d: vec![0.0; a.orbit_len()],
        })
    }

    /// Fills `out[j]` for levels `j = 0..=depth`.
    fn levels(&mut self, x: &[f64], y: &[f64], out: &mut [f64]) {
        let dim = self.dim;
        let len = self.d.len();
        for m in 0..len {
            self.d[m] = flat_dist(&x[m * dim..(m + 1) * dim], &y[m * dim..(m + 1) * dim]);
        }
        if !self.padded {
            for j in 0..=self.depth {
                out[j] = self.d[self.depth - j];
            }
            return;
        }
        let mut acc = 0.0;
        for m in (0..len).rev() {
            acc = self.d[m] + 0.5 * acc;
            if m <= self.depth {
                out[self.depth - m] = acc;
            }
        }
    }
}

/// Branch-Hausdorff distance between two trees of equal depth.
pub fn tree_dist(a: &PreimageTree, b: &PreimageTree) -> Result<BranchDistanceReport> {
    let mut metric = LevelMetric::new(a, b)?;
    let mut lv = vec![0.0; a.depth + 1];
    let mut pair = |i: usize, j: usize, swap: bool| {
        let (x, y) = if swap { (b.orbit(i), a.orbit(j)) } else { (a.orbit(i), b.orbit(j)) };
        metric.levels(x, y, &mut lv);
        lv.iter().cloned().fold(0.0, f64::max)
    };
    let mut value = 0.0f64;
    for (n1, n2, swap) in [(a.len(), b.len(), false), (b.len(), a.len(), true)] {
        for i in 0..n1 {
            let nearest = (0..n2).map(|j| pair(i, j, swap)).fold(f64::INFINITY, f64::min);
            value = value.max(nearest);
        }
    }
    Ok(BranchDistanceReport {
        value,
        kind: DistanceKind::Tree,
        tail_bound: metric.tails[0],
    })
}

/// Certainly more than `eps` apart in the branch-Hausdorff metric: some
/// branch of one tree is certainly farther than `eps` from every branch of
/// the other, at some level beyond that level's tail.
pub fn trees_separated(a: &PreimageTree, b: &PreimageTree, eps: f64) -> Result<bool> {
    let mut metric = LevelMetric::new(a, b)?;
    let tails = metric.tails.clone();
    let mut lv = vec![0.0; a.depth + 1];
    for (p, q) in [(a, b), (b, a)] {
        for i in 0..p.len() {
            let far_from_all = (0..q.len()).all(|j| {
                metric.levels(p.orbit(i), q.orbit(j), &mut lv);
                lv.iter().zip(&tails).any(|(v, t)| *v > eps + t)
            });
            if far_from_all {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

fn root_padding(t: &Action, eps: f64) -> Result<SymbolWord> {
    SymbolWord::constant(1, orbit_space::tail_depth(t.space(), eps), t.k() as u8)
}

/// The points of `sigma_T^{-n}(x)` for the orbit point with base `x` and
/// constant forward padding of length `K(eps)`, as truncated orbit points.
pub fn preimage_orbit_points(t: &Action, x: &RatPoint, n: usize, eps: f64, budget: usize) -> Result<Vec<OrbitPoint>> {
    let tree = build_orbit_tree(t, x, root_padding(t, eps)?, n, budget)?;
    Ok((0..tree.len()).map(|b| tree.level_point(b, n, t.k() as u8)).collect())
}

/// Greedy `(n, eps)`-separated subset of `sigma_T^{-n}(x)`.
pub fn separated_preimages(t: &Action, x: &RatPoint, n: usize, eps: f64, budget: usize) -> Result<Vec<OrbitPoint>> {
    let points = preimage_orbit_points(t, x, n, eps, budget)?;
    let set = CandidateSet::from_points(t, &points)?;
    Ok(set.separated_indices(n, eps)?.into_iter().map(|i| set.get(i)).collect())
}

fn check_params(n: usize, eps: f64) -> Result<()> {
    if n == 0 || !(eps > 0.0) {
        return Err(Error::InvalidArgument("need n >= 1 and epsilon > 0".into()));
    }
    Ok(())
}

/// `h_m` at one `(n, eps)`: the largest separated preimage set over the
/// sample roots.
pub fn hm_one(t: &Action, n: usize, eps: f64, samples: &[RatPoint], budget: usize) -> Result<EntropyEstimate> {
    check_params(n, eps)?;
    if samples.is_empty() {
        return Err(Error::InvalidArgument("need at least one sample root".into()));
    }
    let mut best: Option<(usize, usize)> = None;
    for x in samples {
        let points = preimage_orbit_points(t, x, n, eps, budget)?;
        let set = CandidateSet::from_points(t, &points)?;
        let count = set.separated_indices(n, eps)?.len();
        if best.is_none_or(|(c, _)| count > c) {
            best = Some((count, set.len()));
        }
    }
    let (count, candidates) = best.expect("samples are nonempty");
    Ok(EntropyEstimate {
        depth: n + orbit_space::tail_depth(t.space(), eps) + 1,
        candidates,
        ..EntropyEstimate::new(n, eps, count.max(1), n as f64)
    })
}

/// `h_m` table over `n = 1..=n_max` for each `eps`.
pub fn estimate_hm(
    t: &Action,
    n_max: usize,
    epsilons: &[f64],
    samples: &[RatPoint],
    budget: usize,
) -> Vec<Result<EntropyEstimate>> {
    epsilons
        .iter()
        .flat_map(|&eps| (1..=n_max).map(move |n| hm_one(t, n, eps, samples, budget)))
        .collect()
}

/// `h_i` at one `(n, eps)`: greedy `eps`-separated trees of depth `n` over
/// the orbit-space roots with base on the grid and every padding
/// itinerary of length `K(eps)`.
pub fn hi_one(t: &Action, n: usize, eps: f64, grid: f64, budget: usize) -> Result<EntropyEstimate> {
    check_params(n, eps)?;
    let pad = orbit_space::tail_depth(t.space(), eps);
    let roots = orbit_space::enumerate_candidates(t, pad + 1, grid, budget)?;
    let per_tree = branch_bound(t, &TreeChoice::AllSequences, n)?;
    let total = per_tree.saturating_mul(roots.len() as u128);
    if total > budget as u128 {
        return Err(Error::BudgetExceeded {
            required: total,
            budget: budget as u128,
        });
    }
    let mut kept: Vec<PreimageTree> = Vec::new();
    for root in roots.iter() {
        let x = RatPoint::from_point(&root.x0)?;
        let tree = build_orbit_tree(t, &x, root.itinerary.clone(), n, budget)?;
        let mut separated = true;
        for other in &kept {
            if !trees_separated(&tree, other, eps)? {
                separated = false;
                break;
            }
        }
        if separated {
            kept.push(tree);
        }
    }
    Ok(EntropyEstimate {
        grid: Some(grid),
        depth: n + pad + 1,
        candidates: roots.len(),
        ..EntropyEstimate::new(n, eps, kept.len().max(1), n as f64)
    })
}

pub fn estimate_hi(t: &Action, n_max: usize, epsilons: &[f64], grid: f64, budget: usize) -> Vec<Result<EntropyEstimate>> {
    epsilons
        .iter()
        .flat_map(|&eps| (1..=n_max).map(move |n| hi_one(t, n, eps, grid, budget)))
        .collect()
}

/// Parameters for comparing `h_m`, `h` and `h_i` of a single map.
#[derive(Debug, Clone, PartialEq)]
pub struct HurleyParams {
    pub n: usize,
    pub epsilon: f64,
    /// Grid of initial points for `h`.
    pub grid: f64,
    /// Grid of tree roots for `h_i`.
    pub root_grid: f64,
    pub samples: Vec<RatPoint>,
    pub budget: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HurleyReport {
    pub h_m: EntropyEstimate,
    pub h: EntropyEstimate,
    pub h_i: EntropyEstimate,
    /// `h_m <= h <= h_m + h_i` on the reported rates.
    pub holds: bool,
}

/// Finite-scale `h_m`, `h`, `h_i` for one map at matched `(n, eps)`.
///
/// The best separated preimage set is itself `(n, eps)`-separated in the
/// orbit space, so the packing search for `h` is seeded with it and then
/// extended over the grid; `h` reports the larger of that count and the
/// plain grid count.
pub fn hurley_check(g: &GeneratorMap, p: &HurleyParams) -> Result<HurleyReport> {
    check_params(p.n, p.epsilon)?;
    let t = Action::new(g.space(), vec![g.clone()])?;
    let (n, eps) = (p.n, p.epsilon);
    let h_m = hm_one(&t, n, eps, &p.samples, p.budget)?;

    let mut witness = Vec::new();
    for x in &p.samples {
        let w = separated_preimages(&t, x, n, eps, p.budget)?;
        if w.len() > witness.len() {
            witness = w;
        }
    }
    let depth = n + orbit_space::tail_depth(t.space(), eps) + 1;
    let grid = orbit_space::enumerate_candidates(&t, depth, p.grid, p.budget)?;
    let plain = grid.separated_indices(n, eps)?.len();
    witness.extend(grid.iter());
    let seeded = CandidateSet::from_points_ordered(&t, &witness)?
        .separated_indices(n, eps)?
        .len();
    let h = EntropyEstimate {
        grid: Some(p.grid),
        depth,
        candidates: witness.len(),
        ..EntropyEstimate::new(n, eps, plain.max(seeded).max(1), n as f64)
    };

    let h_i = hi_one(&t, n, eps, p.root_grid, p.budget)?;
    const SLACK: f64 = 1e-12;
    let holds = h_m.rate <= h.rate + SLACK && h.rate <= h_m.rate + h_i.rate + SLACK;
    Ok(HurleyReport { h_m, h, h_i, holds })
}

/// Largest `|tree_dist - d(x, y)|` over root pairs of the given points at
/// distance at most `ISOMETRY_EPSILON`, for all-sequences trees of the
/// given depth.
pub fn isometry_defect(t: &Action, roots: &[RatPoint], depth: usize, budget: usize) -> Result<(f64, usize)> {
    let trees = roots
        .iter()
        .map(|x| build_tree(t, x, TreeChoice::AllSequences, depth, budget))
        .collect::<Result<Vec<_>>>()?;
    let mut worst = 0.0f64;
    let mut pairs = 0;
    for i in 0..roots.len() {
        for j in i + 1..roots.len() {
            let d = t.space().distance(&roots[i].to_point(), &roots[j].to_point())?;
            if d > ISOMETRY_EPSILON || d == 0.0 {
                continue;
            }
            pairs += 1;
            worst = worst.max(abs(tree_dist(&trees[i], &trees[j])?.value - d));
        }
    }
    Ok((worst, pairs))
}

/// Rational roots `num / den` for `num in 0..den`.
pub fn rational_grid(den: i64) -> Vec<RatPoint> {
    (0..den).map(|i| RatPoint::circle(i, den)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orbit_space::DEFAULT_BUDGET;
    use crate::rational::ratio;

    fn t23() -> Action {
        Action::circle_linear(&[2, 3]).unwrap()
    }

    fn m(rows: &[&[i64]]) -> IntMatrix {
        IntMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn circle_preimages() {
        let g = GeneratorMap::linear(3).unwrap();
        let p = preimage_set(&g, &RatPoint::circle(0, 1)).unwrap();
        assert_eq!(p.exact, vec![RatPoint::circle(0, 1), RatPoint::circle(1, 3), RatPoint::circle(2, 3)]);
        assert!(p.verify().unwrap());
        let r = GeneratorMap::rotation(0.25).unwrap();
        let q = preimages(&r, &Point::circle(0.125)).unwrap();
        assert_eq!(q.exact, vec![RatPoint::circle(7, 8)]);
        assert!(q.verify().unwrap());
        let gen = GeneratorMap::generic(Space::Circle, 2.0, "double", |x: &Point| Point::circle(2.0 * x.x())).unwrap();
        assert!(matches!(preimages(&gen, &Point::circle(0.1)), Err(Error::Unsupported(_))));
    }

    #[test]
    fn torus_preimages_match_determinant() {
        let d = GeneratorMap::matrix(IntMatrix::diag(&[2, 3])).unwrap();
        let p = preimage_set(&d, &RatPoint::zero(2)).unwrap();
        let expected: Vec<RatPoint> = (0..2)
            .flat_map(|a| (0..3).map(move |b| RatPoint::from_ratios(&[(a, 2), (b, 3)])))
            .collect();
        assert_eq!(p.exact, expected);
        let j = GeneratorMap::matrix(m(&[&[2, 1], &[0, 2]])).unwrap();
        for x in [RatPoint::zero(2), RatPoint::from_ratios(&[(1, 7), (3, 11)])] {
            let p = preimage_set(&j, &x).unwrap();
            assert_eq!(p.len(), 4);
            assert!(p.verify().unwrap());
        }
        let neg = GeneratorMap::matrix(m(&[&[1, 2], &[3, -1]])).unwrap();
        let p = preimage_set(&neg, &RatPoint::from_ratios(&[(2, 5), (1, 3)])).unwrap();
        assert_eq!(p.len(), 7);
        assert!(p.verify().unwrap());
    }

    #[test]
    fn union_cardinality() {
        let t = t23();
        assert_eq!(check_union_cardinality(&t, &RatPoint::circle(1, 7)).unwrap(), 5);
        assert_eq!(check_union_cardinality(&t, &RatPoint::circle(0, 1)).unwrap(), 4);
        let t24 = Action::circle_linear(&[2, 4]).unwrap();
        assert_eq!(check_union_cardinality(&t24, &RatPoint::circle(0, 1)).unwrap(), 4);
    }

    #[test]
    fn tree_shapes() {
        let t = t23();
        let x = RatPoint::circle(1, 7);
        let one = build_tree(&t, &x, TreeChoice::AllSequences, 1, 100).unwrap();
        assert_eq!(one.len(), 5);
        assert_eq!(one.distinct_branches().len(), 5);
        let zero = build_tree(&t, &x, TreeChoice::AllSequences, 0, 100).unwrap();
        assert_eq!(zero.branches, vec![Branch { points: vec![x.clone()], symbols: vec![] }]);
        let at0 = build_tree(&t, &RatPoint::circle(0, 1), TreeChoice::AllSequences, 1, 100).unwrap();
        assert_eq!(at0.len(), 5);
        assert_eq!(at0.endpoints().len(), 4);
        assert_eq!(at0.distinct_branches().len(), 4);
        let three = build_tree(&t, &x, TreeChoice::AllSequences, 3, 1000).unwrap();
        assert_eq!(three.len(), 125);
        assert_eq!(three.distinct_branches().len(), 125);
        // commuting generators: z_3 repeats along different branches
        assert!(three.endpoints().len() < 125);
        let seq = build_tree(&t, &x, TreeChoice::Sequence(vec![2, 1, 1]), 3, 100).unwrap();
        assert_eq!(seq.len(), 12);
        for b in &seq.branches {
            assert_eq!(b.symbols, vec![1, 1, 2]);
            for (w, &s) in b.points.windows(2).zip(&b.symbols) {
                assert_eq!(apply_exact(t.generator(s).unwrap(), &w[0]).unwrap(), w[1]);
            }
        }
        assert!(matches!(
            build_tree(&t, &x, TreeChoice::AllSequences, 5, 1000),
            Err(Error::BudgetExceeded { required: 3125, .. })
        ));
    }

    #[test]
    fn branch_distances() {
        let t = t23();
        let a = build_tree(&t, &RatPoint::circle(1, 7), TreeChoice::AllSequences, 2, 100).unwrap();
        let s = t.space();
        assert_eq!(branch_dist(s, &a.branches[0], &a.branches[0]).unwrap().value, 0.0);
        let shift = |b: &Branch, d: (i64, i64)| Branch {
            points: b.points.iter().map(|p| p.translate(&[ratio(d.0, d.1)])).collect(),
            symbols: b.symbols.clone(),
        };
        let mut only_root = a.branches[0].clone();
        let last = only_root.points.len() - 1;
        only_root.points[last] = only_root.points[last].translate(&[ratio(3, 10)]);
        let d = branch_dist(s, &a.branches[0], &only_root).unwrap().value;
        assert!((d - 0.3).abs() < 1e-15);
        let moved = shift(&a.branches[3], (1, 9));
        let x = branch_dist(s, &a.branches[3], &moved).unwrap().value;
        let y = branch_dist(s, &moved, &a.branches[3]).unwrap().value;
        assert_eq!(x, y);
        let short = build_tree(&t, &RatPoint::circle(1, 7), TreeChoice::AllSequences, 1, 100).unwrap();
        assert!(branch_dist(s, &a.branches[0], &short.branches[0]).is_err());
        assert!(tree_dist(&a, &short).is_err());
    }

    #[test]
    fn tree_isometry() {
        let t = t23();
        let roots: Vec<RatPoint> = generic_roots(8)
            .into_iter()
            .chain([RatPoint::circle(1, 5), RatPoint::circle(2, 9), RatPoint::circle(0, 1)])
            .collect();
        for depth in 0..=3 {
            let (defect, pairs) = isometry_defect(&t, &roots, depth, DEFAULT_BUDGET).unwrap();
            assert!(pairs > 5);
            assert!(defect <= 1e-12, "depth {depth}: {defect}");
        }
        let a = build_tree(&t, &roots[0], TreeChoice::AllSequences, 2, 100).unwrap();
        let b = build_tree(&t, &roots[5], TreeChoice::AllSequences, 2, 100).unwrap();
        assert_eq!(tree_dist(&a, &a).unwrap().value, 0.0);
        assert_eq!(tree_dist(&a, &b).unwrap().value, tree_dist(&b, &a).unwrap().value);
    }

    #[test]
    fn hm_examples() {
        let t = t23();
        let samples = generic_roots(2);
        let e = hm_one(&t, 4, 0.01, &samples, DEFAULT_BUDGET).unwrap();
        assert!(e.count <= 625);
        assert!(e.rate <= 5f64.ln() + 1e-12);
        assert!(e.count >= 590, "{}", e.count);
        let rot = Action::circle_rotations(&[0.3]).unwrap();
        let r = hm_one(&rot, 4, 0.01, &samples, DEFAULT_BUDGET).unwrap();
        assert_eq!((r.count, r.rate), (1, 0.0));
    }

    #[test]
    fn hi_counts_do_not_grow() {
        let one = Action::circle_linear(&[2]).unwrap();
        assert_eq!(hi_one(&one, 3, 0.6, 1.0, DEFAULT_BUDGET).unwrap().count, 1);
        let t = t23();
        let counts: Vec<usize> = (1..=3)
            .map(|n| hi_one(&t, n, 0.25, 0.25, DEFAULT_BUDGET).unwrap().count)
            .collect();
        assert!(counts.windows(2).all(|w| w[0] == w[1]), "{counts:?}");
    }

    #[test]
    fn tree_dump() {
        let t = Action::circle_linear(&[2]).unwrap();
        let tree = build_tree(&t, &RatPoint::circle(0, 1), TreeChoice::AllSequences, 1, 10).unwrap();
        let mut s = alloc::string::String::new();
        tree.write_dump(&mut s).unwrap();
        assert_eq!(s, "tree root=(0) depth=1 branches=2\n  (0) <-1- (0)\n  (0) <-1- (1/2)\n");
    }
}
