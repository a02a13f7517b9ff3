//! The orbit space `X_T` of an action, its shift, the skew product over the
//! full shift on `k` symbols, and separated/spanning-set entropy estimators.
//!
//! An element of `X_T` is a sequence `x_0, x_1, ...` with
//! `x_{n+1} = T_{i_n}(x_n)`. We represent truncated elements by the initial
//! point and the itinerary `i_0, ..., i_{depth-2}`; the orbit itself is
//! realized on demand. Estimates are certified lower bounds for the
//! candidate set they are computed on: two orbits count as separated only
//! when their truncated distance exceeds `eps` by more than the tail bound.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::actions::Action;
use crate::error::{Error, Result};
use crate::math::{ln, log2_ceil_ratio};
use crate::packing::{self, Mode, Orbits};
use crate::spaces::{self, flat_dist, Point, Space, SymbolWord, TruncatedDistance};

/// Default cap on the number of enumerated candidates.
pub const DEFAULT_BUDGET: usize = 300_000;

/// Truncated element of the orbit space.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitPoint {
    pub x0: Point,
    pub itinerary: SymbolWord,
}

impl OrbitPoint {
    pub fn new(x0: Point, itinerary: SymbolWord) -> Self {
        OrbitPoint { x0, itinerary }
    }

    pub fn depth(&self) -> usize {
        self.itinerary.len() + 1
    }

    /// The orbit segment `x_0, ..., x_{depth-1}`.
    pub fn realize(&self, t: &Action) -> Result<Vec<Point>> {
        let mut out = Vec::with_capacity(self.depth());
        let mut x = self.x0.clone();
        for &s in self.itinerary.symbols() {
            let next = t.generator(s)?.apply(&x)?;
            out.push(x);
            x = next;
        }
        out.push(x);
        Ok(out)
    }

    /// The shift on `X_T`: drops `x_0` and the first itinerary symbol.
    pub fn shift(&self, t: &Action) -> Result<OrbitPoint> {
        let Some(&first) = self.itinerary.symbols().first() else {
            return Err(Error::InsufficientDepth {
                required: 2,
                got: self.depth(),
            });
        };
        Ok(OrbitPoint {
            x0: t.generator(first)?.apply(&self.x0)?,
            itinerary: self.itinerary.shifted(),
        })
    }

    fn realize_into(&self, t: &Action, out: &mut [f64]) -> Result<()> {
        let dim = t.dim();
        if self.x0.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: self.x0.dim(),
            });
        }
        out[..dim].copy_from_slice(self.x0.coords());
        for (m, &s) in self.itinerary.symbols().iter().enumerate() {
            let g = t.generator(s)?;
            let (head, tail) = out.split_at_mut((m + 1) * dim);
            g.apply_into(&head[m * dim..], &mut tail[..dim]);
        }
        Ok(())
    }
}

/// Shift of an orbit point; see [`OrbitPoint::shift`].
pub fn shift(t: &Action, p: &OrbitPoint) -> Result<OrbitPoint> {
    p.shift(t)
}

/// Orbit-space distance between two truncated orbits of equal depth.
pub fn orbit_dist(t: &Action, a: &OrbitPoint, b: &OrbitPoint) -> Result<TruncatedDistance> {
    if a.depth() != b.depth() {
        return Err(Error::DepthMismatch {
            left: a.depth(),
            right: b.depth(),
        });
    }
    spaces::orbit_dist(t.space(), &a.realize(t)?, &b.realize(t)?)
}

/// Point of `Sigma_k x X` for the skew product.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewPoint {
    pub word: SymbolWord,
    pub x: Point,
}

/// `(i_0 i_1 ..., x) -> (i_1 i_2 ..., T_{i_0} x)`.
pub fn skew_apply(t: &Action, s: &SkewPoint) -> Result<SkewPoint> {
    let Some(&first) = s.word.symbols().first() else {
        return Err(Error::InvalidArgument("skew product needs a nonempty word".into()));
    };
    check_alphabet(t, &s.word)?;
    Ok(SkewPoint {
        word: s.word.shifted(),
        x: t.generator(first)?.apply(&s.x)?,
    })
}

/// The factor map `(word, x) -> (x, T_{i_0} x, T_{i_1} T_{i_0} x, ...)`,
/// truncated to `depth` orbit points.
pub fn project_pi(t: &Action, s: &SkewPoint, depth: usize) -> Result<OrbitPoint> {
    if depth == 0 {
        return Err(Error::InvalidArgument("depth must be positive".into()));
    }
    if s.word.len() < depth - 1 {
        return Err(Error::InsufficientDepth {
            required: depth - 1,
            got: s.word.len(),
        });
    }
    check_alphabet(t, &s.word)?;
    Ok(OrbitPoint {
        x0: s.x.clone(),
        itinerary: s.word.prefix(depth - 1),
    })
}

fn check_alphabet(t: &Action, w: &SymbolWord) -> Result<()> {
    if w.alphabet() as usize != t.k() {
        return Err(Error::InvalidArgument(alloc::format!(
            "word alphabet {} does not match k = {}",
            w.alphabet(),
            t.k()
        )));
    }
    Ok(())
}

/// `K(eps) = ceil(log2(diam / eps))`: beyond `K` extra terms the metric tail
/// drops below `eps`.
pub fn tail_depth(space: Space, eps: f64) -> usize {
    log2_ceil_ratio(space.diameter(), eps)
}

/// Minimal truncation depth for `(n, eps)` estimates.
pub fn required_depth(space: Space, n: usize, eps: f64) -> usize {
    n + tail_depth(space, eps)
}

/// Finite surrogate of the orbit space: realized orbit segments of common
/// depth, kept in lexicographic `(itinerary, x_0)` order.
#[derive(Debug, Clone)]
pub struct CandidateSet {
    space: Space,
    depth: usize,
    k: u8,
    x0: Vec<f64>,
    itineraries: Vec<u8>,
    orbits: Vec<f64>,
    grid: Option<f64>,
}

impl CandidateSet {
    /// Builds a candidate set from explicit orbit points of equal depth.
    pub fn from_points(t: &Action, points: &[OrbitPoint]) -> Result<Self> {
        let mut sorted: Vec<&OrbitPoint> = points.iter().collect();
        sorted.sort_by(|a, b| {
            a.itinerary
                .symbols()
                .cmp(b.itinerary.symbols())
                .then_with(|| cmp_coords(a.x0.coords(), b.x0.coords()))
        });
        Self::build(t, sorted)
    }

    /// Keeps the given order, which is then the greedy insertion order.
    pub fn from_points_ordered(t: &Action, points: &[OrbitPoint]) -> Result<Self> {
        Self::build(t, points.iter().collect())
    }

    fn build(t: &Action, sorted: Vec<&OrbitPoint>) -> Result<Self> {
        let points = &sorted;
        let depth = points.first().map(|p| p.depth()).unwrap_or(1);
        let dim = t.dim();
        let mut set = CandidateSet {
            space: t.space(),
            depth,
            k: t.k() as u8,
            x0: Vec::with_capacity(points.len() * dim),
            itineraries: Vec::with_capacity(points.len() * (depth - 1)),
            orbits: vec![0.0; points.len() * depth * dim],
            grid: None,
        };
        for (i, p) in sorted.into_iter().enumerate() {
            if p.depth() != depth {
                return Err(Error::DepthMismatch {
                    left: depth,
                    right: p.depth(),
                });
            }
            check_alphabet(t, &p.itinerary)?;
            set.x0.extend_from_slice(p.x0.coords());
            set.itineraries.extend_from_slice(p.itinerary.symbols());
            p.realize_into(t, &mut set.orbits[i * depth * dim..(i + 1) * depth * dim])?;
        }
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.x0.len() / self.space.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.x0.is_empty()
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn grid(&self) -> Option<f64> {
        self.grid
    }

    pub fn get(&self, i: usize) -> OrbitPoint {
        let dim = self.space.dim();
        let w = self.depth - 1;
        OrbitPoint {
            x0: Point::from_normalized(self.x0[i * dim..(i + 1) * dim].to_vec()),
            itinerary: SymbolWord::new_unchecked(self.itineraries[i * w..(i + 1) * w].to_vec(), self.k),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = OrbitPoint> + '_ {
        (0..self.len()).map(|i| self.get(i))
    }

    /// Realized orbit segment of candidate `i`.
    pub fn orbit(&self, i: usize) -> Vec<Point> {
        let dim = self.space.dim();
        let w = self.depth * dim;
        self.orbits[i * w..(i + 1) * w]
            .chunks(dim)
            .map(|c| Point::from_normalized(c.to_vec()))
            .collect()
    }

    fn view(&self) -> Orbits<'_> {
        Orbits {
            data: &self.orbits,
            depth: self.depth,
            dim: self.space.dim(),
            diameter: self.space.diameter(),
        }
    }

    fn check_depth(&self, n: usize, eps: f64) -> Result<()> {
        if n == 0 {
            return Err(Error::InvalidArgument("n must be positive".into()));
        }
        if !(eps > 0.0) {
            return Err(Error::InvalidArgument("epsilon must be positive".into()));
        }
        let required = required_depth(self.space, n, eps);
        if self.depth < required {
            return Err(Error::InsufficientDepth {
                required,
                got: self.depth,
            });
        }
        Ok(())
    }

    fn greedy(&self, n: usize, eps: f64, mode: Mode) -> Result<Vec<usize>> {
        self.check_depth(n, eps)?;
        let order: Vec<usize> = (0..self.len()).collect();
        Ok(packing::greedy(&self.view(), &order, n, eps, mode))
    }

    /// Indices of a greedy `(n, eps)`-separated subset.
    pub fn separated_indices(&self, n: usize, eps: f64) -> Result<Vec<usize>> {
        self.greedy(n, eps, Mode::Separated)
    }

    /// Indices of a greedy `(n, eps)`-spanning subset.
    pub fn spanning_indices(&self, n: usize, eps: f64) -> Result<Vec<usize>> {
        self.greedy(n, eps, Mode::Spanning)
    }

    /// Certain `(n, eps)` separation of candidates `i` and `j`.
    pub fn is_separated(&self, i: usize, j: usize, n: usize, eps: f64) -> Result<bool> {
        self.check_depth(n, eps)?;
        let dim = self.space.dim();
        let w = self.depth * dim;
        let mut eval = packing::BowenEvaluator::new(n, eps, self.depth, self.space.diameter());
        Ok(eval.separated(
            &self.orbits[i * w..(i + 1) * w],
            &self.orbits[j * w..(j + 1) * w],
            dim,
        ))
    }

    /// Pairwise certain-separation relation at `(n, eps)`.
    pub fn separation_matrix(&self, n: usize, eps: f64) -> Result<Vec<Vec<bool>>> {
        self.check_depth(n, eps)?;
        Ok(packing::separation_matrix(&self.view(), n, eps))
    }
}

fn cmp_coords(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Number of candidates `enumerate_candidates` would produce.
pub fn candidate_count(k: usize, dim: usize, depth: usize, grid_spacing: f64) -> u128 {
    let per_axis = grid_points(grid_spacing) as u128;
    (k as u128)
        .saturating_pow(depth.saturating_sub(1) as u32)
        .saturating_mul(per_axis.saturating_pow(dim as u32))
}

fn grid_points(spacing: f64) -> usize {
    libm::ceil(1.0 / spacing - 1e-9) as usize
}

/// Every orbit point with `x_0` on the uniform grid of the given spacing and
/// every itinerary of length `depth - 1`.
pub fn enumerate_candidates(t: &Action, depth: usize, grid_spacing: f64, budget: usize) -> Result<CandidateSet> {
    if depth == 0 {
        return Err(Error::InvalidArgument("depth must be positive".into()));
    }
    if !(grid_spacing > 0.0 && grid_spacing <= 1.0) {
        return Err(Error::InvalidArgument(alloc::format!(
            "grid spacing must lie in (0, 1], got {grid_spacing}"
        )));
    }
    let dim = t.dim();
    let k = t.k();
    let total = candidate_count(k, dim, depth, grid_spacing);
    if total > budget as u128 {
        return Err(Error::BudgetExceeded {
            required: total,
            budget: budget as u128,
        });
    }
    let total = total as usize;
    let per_axis = grid_points(grid_spacing);
    let grid_len = per_axis.pow(dim as u32);
    let grid: Vec<f64> = (0..grid_len)
        .flat_map(|g| {
            // most significant axis first so the grid is in lexicographic order
            (0..dim).rev().map(move |a| {
                let j = (g / per_axis.pow(a as u32)) % per_axis;
                j as f64 * grid_spacing
            })
        })
        .collect();

    let w = depth - 1;
    let mut set = CandidateSet {
        space: t.space(),
        depth,
        k: k as u8,
        x0: Vec::with_capacity(total * dim),
        itineraries: Vec::with_capacity(total * w),
        orbits: vec![0.0; total * depth * dim],
        grid: Some(grid_spacing),
    };
    let mut word = vec![1u8; w];
    let mut idx = 0;
    let gens = t.generators();
    loop {
        for x0 in grid.chunks(dim) {
            set.x0.extend_from_slice(x0);
            set.itineraries.extend_from_slice(&word);
            let orbit = &mut set.orbits[idx * depth * dim..(idx + 1) * depth * dim];
            orbit[..dim].copy_from_slice(x0);
            for (m, &s) in word.iter().enumerate() {
                let (head, tail) = orbit.split_at_mut((m + 1) * dim);
                gens[s as usize - 1].apply_into(&head[m * dim..], &mut tail[..dim]);
            }
            idx += 1;
        }
        // next word in lexicographic order
        let mut pos = w;
        loop {
            if pos == 0 {
                debug_assert_eq!(idx, total);
                return Ok(set);
            }
            pos -= 1;
            if (word[pos] as usize) < k {
                word[pos] += 1;
                for s in &mut word[pos + 1..] {
                    *s = 1;
                }
                break;
            }
        }
    }
}

/// Result of one separated- or spanning-set computation.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyEstimate {
    pub n: usize,
    pub epsilon: f64,
    pub count: usize,
    /// `ln(count) / n` (or `/ n^k` for the cube-based estimate).
    pub rate: f64,
    /// Separation was decided with tail bounds.
    pub conservative: bool,
    pub grid: Option<f64>,
    pub depth: usize,
    pub candidates: usize,
}

impl EntropyEstimate {
    pub(crate) fn new(n: usize, epsilon: f64, count: usize, normalizer: f64) -> Self {
        EntropyEstimate {
            n,
            epsilon,
            count,
            rate: ln(count as f64) / normalizer,
            conservative: true,
            grid: None,
            depth: 0,
            candidates: 0,
        }
    }
}

fn estimate_from(points: &CandidateSet, n: usize, eps: f64, kept: usize) -> EntropyEstimate {
    EntropyEstimate {
        grid: points.grid,
        depth: points.depth,
        candidates: points.len(),
        ..EntropyEstimate::new(n, eps, kept, n as f64)
    }
}

/// Greedy maximal `(n, eps)`-separated subset of the candidates.
pub fn max_separated(points: &CandidateSet, n: usize, eps: f64) -> Result<EntropyEstimate> {
    let kept = points.separated_indices(n, eps)?;
    Ok(estimate_from(points, n, eps, kept.len().max(1)))
}

/// Greedy `(n, eps)`-spanning subset of the candidates.
pub fn min_spanning(points: &CandidateSet, n: usize, eps: f64) -> Result<EntropyEstimate> {
    let kept = points.spanning_indices(n, eps)?;
    Ok(estimate_from(points, n, eps, kept.len().max(1)))
}

/// One `(n, eps, grid)` row of an estimation schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleEntry {
    pub n: usize,
    pub epsilon: f64,
    pub grid: f64,
}

/// Runs `max_separated` over grid candidates of depth `n + K(eps)` for each
/// schedule entry.
pub fn estimate_entropy(t: &Action, schedule: &[ScheduleEntry], budget: usize) -> Vec<Result<EntropyEstimate>> {
    schedule.iter().map(|e| estimate_one(t, e, budget)).collect()
}

pub fn estimate_one(t: &Action, e: &ScheduleEntry, budget: usize) -> Result<EntropyEstimate> {
    if e.n == 0 || !(e.epsilon > 0.0) {
        return Err(Error::InvalidArgument("schedule needs n >= 1 and epsilon > 0".into()));
    }
    let depth = required_depth(t.space(), e.n, e.epsilon);
    let set = enumerate_candidates(t, depth, e.grid, budget)?;
    max_separated(&set, e.n, e.epsilon)
}

/// Separated-set estimate for the classical cube-indexed definition: points
/// are `eps`-separated if `d(T^i x, T^i y) > eps` for some multi-index `i`
/// in `{0..n-1}^k`, and the rate is normalized by `n^k`.
pub fn estimate_traditional_entropy(
    t: &Action,
    n: usize,
    eps: f64,
    grid: f64,
    budget: usize,
) -> Result<EntropyEstimate> {
    if n == 0 || !(eps > 0.0) {
        return Err(Error::InvalidArgument("need n >= 1 and epsilon > 0".into()));
    }
    if !t.is_commuting() {
        return Err(Error::Unsupported(
            "cube orbits of non-commuting or generic generators",
        ));
    }
    let k = t.k();
    let dim = t.dim();
    let cube = (n as u128).checked_pow(k as u32).unwrap_or(u128::MAX);
    let points = grid_points(grid) as u128;
    let evaluations = cube
        .saturating_mul(points.saturating_pow(dim as u32))
        .saturating_mul(k as u128);
    if evaluations > budget as u128 {
        return Err(Error::BudgetExceeded {
            required: evaluations,
            budget: budget as u128,
        });
    }
    let cube = cube as usize;
    let grid_set = enumerate_candidates(t, 1, grid, budget)?;
    let npts = grid_set.len();
    // cube orbit of every grid point, multi-index in mixed radix n
    let mut orbits = vec![0.0; npts * cube * dim];
    for p in 0..npts {
        let o = &mut orbits[p * cube * dim..(p + 1) * cube * dim];
        o[..dim].copy_from_slice(&grid_set.x0[p * dim..(p + 1) * dim]);
        for idx in 1..cube {
            // the lowest nonzero digit j: T^i = T_j T^{i - e_j}
            let mut rem = idx;
            let mut j = 0;
            let mut stride = 1;
            while rem % n == 0 {
                rem /= n;
                j += 1;
                stride *= n;
            }
            let prev = idx - stride;
            let (head, tail) = o.split_at_mut(idx * dim);
            t.generators()[j].apply_into(&head[prev * dim..(prev + 1) * dim], &mut tail[..dim]);
        }
    }
    let mut kept: Vec<usize> = Vec::new();
    for p in 0..npts {
        let a = &orbits[p * cube * dim..(p + 1) * cube * dim];
        let separated_from_all = kept.iter().all(|&q| {
            let b = &orbits[q * cube * dim..(q + 1) * cube * dim];
            a.chunks(dim).zip(b.chunks(dim)).any(|(x, y)| flat_dist(x, y) > eps)
        });
        if separated_from_all {
            kept.push(p);
        }
    }
    Ok(EntropyEstimate {
        conservative: false,
        grid: Some(grid),
        depth: n,
        candidates: npts,
        ..EntropyEstimate::new(n, eps, kept.len().max(1), cube as f64)
    })
}
