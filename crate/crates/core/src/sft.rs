//! Subshift of finite type for an expanding circle action
//! `T_i(x) = L_i x mod 1`.
//!
//! With `M = prod L_i`, the boxes `B_l = [i] x [j/M, (j+1)/M]` cover the skew
//! product, and `A(s, t) = 1` when the image of box `s` covers box `t`. The
//! topological entropy is `log rho(A) = log sum L_i`. The map [`pi_tilde`]
//! sends an admissible box path to the orbit point it codes.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::actions::Action;
use crate::error::{Error, Result};
use crate::math::{abs, ln};
use crate::orbit_space::OrbitPoint;
use crate::rational::to_f64;
use crate::spaces::{circle_dist, Point, SymbolWord};

/// Default cap on the number of states `kM`.
pub const DEFAULT_MAX_STATES: usize = 4096;

const POWER_TOL: f64 = 1e-12;
const POWER_MAX_ITER: usize = 100_000;

/// Box `B_l` with `l = (i - 1) M + j + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BoxLabel {
    /// Generator index, 1-based.
    pub i: usize,
    /// Interval index in `0..M`.
    pub j: usize,
    /// Linear label in `1..=kM`.
    pub l: usize,
}

impl BoxLabel {
    pub fn new(i: usize, j: usize, m: usize) -> Self {
        BoxLabel { i, j, l: (i - 1) * m + j + 1 }
    }

    pub fn from_linear(l: usize, m: usize) -> Self {
        BoxLabel {
            i: (l - 1) / m + 1,
            j: (l - 1) % m,
            l,
        }
    }
}

/// Boolean transition matrix stored as sorted 0-based column lists per row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionMatrix {
    size: usize,
    rows: Vec<Vec<u32>>,
    multipliers: Vec<i64>,
    m: usize,
}

impl TransitionMatrix {
    /// A matrix not tied to a circle action. Column lists are 0-based.
    pub fn from_rows(rows: Vec<Vec<u32>>) -> Result<Self> {
        let size = rows.len();
        let mut rows = rows;
        for r in &mut rows {
            r.sort_unstable();
            r.dedup();
            if r.last().is_some_and(|&c| c as usize >= size) {
                return Err(Error::InvalidArgument("column index out of range".into()));
            }
        }
        Ok(TransitionMatrix {
            size,
            rows,
            multipliers: Vec::new(),
            m: size,
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Columns (0-based) of the ones in row `s` (0-based).
    pub fn row(&self, s: usize) -> &[u32] {
        &self.rows[s]
    }

    pub fn rows(&self) -> &[Vec<u32>] {
        &self.rows
    }

    pub fn get(&self, s: usize, t: usize) -> bool {
        self.rows[s].binary_search(&(t as u32)).is_ok()
    }

    /// Multipliers the matrix was built from; empty for `from_rows`.
    pub fn multipliers(&self) -> &[i64] {
        &self.multipliers
    }

    /// `M = prod L_i`.
    pub fn interval_count(&self) -> usize {
        self.m
    }

    /// Label of the 0-based state `s`.
    pub fn label(&self, s: usize) -> BoxLabel {
        BoxLabel::from_linear(s + 1, self.m)
    }

    pub fn labels(&self) -> Vec<BoxLabel> {
        (0..self.size).map(|s| self.label(s)).collect()
    }

    pub fn ones(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn column_sums(&self) -> Vec<usize> {
        let mut sums = vec![0; self.size];
        for r in &self.rows {
            for &c in r {
                sums[c as usize] += 1;
            }
        }
        sums
    }

    /// Every column sums to `sum L_i`.
    pub fn column_sums_ok(&self) -> bool {
        let target: i64 = self.multipliers.iter().sum();
        !self.multipliers.is_empty() && self.column_sums().iter().all(|&c| c as i64 == target)
    }

    fn transpose(&self) -> Vec<Vec<u32>> {
        let mut t = vec![Vec::new(); self.size];
        for (s, r) in self.rows.iter().enumerate() {
            for &c in r {
                t[c as usize].push(s as u32);
            }
        }
        t
    }

    /// Coordinate-list export: the size on the first line, then one
    /// 1-indexed `row col` pair per line.
    pub fn write_coordinate_list(&self, out: &mut impl fmt::Write) -> fmt::Result {
        writeln!(out, "{}", self.size)?;
        for (s, r) in self.rows.iter().enumerate() {
            for &c in r {
                writeln!(out, "{} {}", s + 1, c + 1)?;
            }
        }
        Ok(())
    }
}

/// Checks the multipliers and returns `M`.
fn validate(l: &[i64], max_states: usize) -> Result<usize> {
    if l.is_empty() {
        return Err(Error::InvalidArgument("need at least one multiplier".into()));
    }
    for (a, &x) in l.iter().enumerate() {
        if x < 2 {
            return Err(Error::InvalidArgument(alloc::format!(
                "multiplier {x} is not expanding (need L >= 2)"
            )));
        }
        if l[..a].contains(&x) {
            return Err(Error::InvalidArgument(alloc::format!("duplicate multiplier {x}")));
        }
    }
    let mut m: u128 = 1;
    for &x in l {
        m = m.checked_mul(x as u128).ok_or(Error::Overflow("interval count M"))?;
    }
    let states = m.saturating_mul(l.len() as u128);
    if states > max_states as u128 {
        return Err(Error::BudgetExceeded {
            required: states,
            budget: max_states as u128,
        });
    }
    Ok(m as usize)
}

/// Block form: row block `s` is `Q_s`, which repeats `P_s` `k` times across
/// and `L_s` times down; row `r` of `P_s` has ones in columns
/// `r L_s .. r L_s + L_s - 1`.
pub fn build_matrix_block(l: &[i64]) -> Result<TransitionMatrix> {
    build_matrix_block_with_budget(l, DEFAULT_MAX_STATES)
}

pub fn build_matrix_block_with_budget(l: &[i64], max_states: usize) -> Result<TransitionMatrix> {
    let m = validate(l, max_states)?;
    let k = l.len();
    let mut rows = Vec::with_capacity(k * m);
    for &ls in l {
        let ls = ls as usize;
        let p_height = m / ls;
        for j in 0..m {
            let r = j % p_height;
            let mut row = Vec::with_capacity(k * ls);
            for block in 0..k {
                row.extend((0..ls).map(|c| (block * m + r * ls + c) as u32));
            }
            rows.push(row);
        }
    }
    Ok(TransitionMatrix {
        size: k * m,
        rows,
        multipliers: l.to_vec(),
        m,
    })
}

/// Geometric form: `A(s, t) = 1` iff `T_i [j/M, (j+1)/M]` contains the
/// interior of `t`'s interval, for targets in every generator block.
pub fn build_matrix_geometric(l: &[i64]) -> Result<TransitionMatrix> {
    build_matrix_geometric_with_budget(l, DEFAULT_MAX_STATES)
}

pub fn build_matrix_geometric_with_budget(l: &[i64], max_states: usize) -> Result<TransitionMatrix> {
    let m = validate(l, max_states)?;
    let k = l.len();
    let mut rows = Vec::with_capacity(k * m);
    for &li in l {
        let li = li as usize;
        for j in 0..m {
            // image in units of 1/M is [li j, li j + li] on the line; a target
            // [t, t + 1] is inside it mod M iff (t - li j) mod M < li
            let start = (li * j) % m;
            let mut row = Vec::with_capacity(k * li);
            for block in 0..k {
                for t in 0..m {
                    if (t + m - start) % m < li {
                        row.push((block * m + t) as u32);
                    }
                }
            }
            rows.push(row);
        }
    }
    Ok(TransitionMatrix {
        size: k * m,
        rows,
        multipliers: l.to_vec(),
        m,
    })
}

fn reaches_all(adj: &[Vec<u32>]) -> bool {
    if adj.is_empty() {
        return false;
    }
    let mut seen = vec![false; adj.len()];
    let mut stack = vec![0usize];
    seen[0] = true;
    let mut count = 1;
    while let Some(s) = stack.pop() {
        for &t in &adj[s] {
            let t = t as usize;
            if !seen[t] {
                seen[t] = true;
                count += 1;
                stack.push(t);
            }
        }
    }
    count == adj.len()
}

/// Strong connectivity of the transition graph.
pub fn is_irreducible(a: &TransitionMatrix) -> bool {
    reaches_all(&a.rows) && reaches_all(&a.transpose())
}

/// Perron root with positive right and left eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct PerronData {
    pub rho: f64,
    /// Normalized to maximum 1.
    pub right_vec: Vec<f64>,
    /// Normalized to maximum 1.
    pub left_vec: Vec<f64>,
    /// `max |(A v)_s - rho v_s|`.
    pub residual: f64,
    pub iterations: usize,
}

fn mat_vec(adj: &[Vec<u32>], v: &[f64], out: &mut [f64]) {
    for (o, r) in out.iter_mut().zip(adj) {
        *o = r.iter().map(|&c| v[c as usize]).sum();
    }
}

fn normalize_max(v: &mut [f64]) -> f64 {
    let m = v.iter().cloned().fold(0.0, f64::max);
    if m > 0.0 {
        v.iter_mut().for_each(|x| *x /= m);
    }
    m
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Power iteration on `A` and `A^T` from the all-ones vector. Stops once
/// both Rayleigh quotients move by less than `1e-12`.
pub fn perron_root(a: &TransitionMatrix) -> Result<PerronData> {
    if !is_irreducible(a) {
        return Err(Error::NotIrreducible);
    }
    let n = a.size;
    let at = a.transpose();
    let mut v = vec![1.0; n];
    let mut u = vec![1.0; n];
    let mut av = vec![0.0; n];
    let mut ua = vec![0.0; n];
    let (mut lr, mut ll) = (f64::NAN, f64::NAN);
    let mut iterations = 0;
    loop {
        iterations += 1;
        mat_vec(&a.rows, &v, &mut av);
        mat_vec(&at, &u, &mut ua);
        let nr = dot(&v, &av) / dot(&v, &v);
        let nl = dot(&u, &ua) / dot(&u, &u);
        core::mem::swap(&mut v, &mut av);
        core::mem::swap(&mut u, &mut ua);
        normalize_max(&mut v);
        normalize_max(&mut u);
        let done = abs(nr - lr) < POWER_TOL && abs(nl - ll) < POWER_TOL;
        lr = nr;
        ll = nl;
        if done || iterations >= POWER_MAX_ITER {
            break;
        }
    }
    mat_vec(&a.rows, &v, &mut av);
    // two-sided quotient u A v / u v: second-order accurate in both vectors
    let rho = dot(&u, &av) / dot(&u, &v);
    let residual = av
        .iter()
        .zip(&v)
        .map(|(x, y)| abs(x - rho * y))
        .fold(0.0, f64::max);
    if iterations >= POWER_MAX_ITER {
        return Err(Error::NotConverged { iterations, residual });
    }
    Ok(PerronData {
        rho,
        right_vec: v,
        left_vec: u,
        residual,
        iterations,
    })
}

/// `log rho(A)` for the block matrix of `L`.
pub fn sft_entropy(l: &[i64]) -> Result<f64> {
    Ok(ln(perron_root(&build_matrix_block(l)?)?.rho))
}

/// Parry measure: the Markov chain of maximal entropy.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovMeasure {
    /// Sparse rows of `P(s, t) = A(s, t) v_t / (rho v_s)`.
    pub transitions: Vec<Vec<(u32, f64)>>,
    pub stationary: Vec<f64>,
    pub rho: f64,
}

impl MarkovMeasure {
    pub fn size(&self) -> usize {
        self.stationary.len()
    }

    /// `max_s |sum_t P(s, t) - 1|`.
    pub fn row_sum_error(&self) -> f64 {
        self.transitions
            .iter()
            .map(|r| abs(r.iter().map(|&(_, p)| p).sum::<f64>() - 1.0))
            .fold(0.0, f64::max)
    }

    /// `max_t |(mu P)_t - mu_t|`.
    pub fn stationary_residual(&self) -> f64 {
        let mut mp = vec![0.0; self.size()];
        for (s, r) in self.transitions.iter().enumerate() {
            for &(t, p) in r {
                mp[t as usize] += self.stationary[s] * p;
            }
        }
        mp.iter()
            .zip(&self.stationary)
            .map(|(a, b)| abs(a - b))
            .fold(0.0, f64::max)
    }

    /// `-sum_s mu_s sum_t P(s, t) log P(s, t)`.
    pub fn entropy_rate(&self) -> f64 {
        -self
            .transitions
            .iter()
            .zip(&self.stationary)
            .map(|(r, mu)| mu * r.iter().map(|&(_, p)| p * ln(p)).sum::<f64>())
            .sum::<f64>()
    }

    pub fn allows(&self, s: usize, t: usize) -> bool {
        self.transitions[s].iter().any(|&(c, _)| c as usize == t)
    }
}

pub fn parry_measure(a: &TransitionMatrix) -> Result<MarkovMeasure> {
    let perron = perron_root(a)?;
    let (u, v, rho) = (&perron.left_vec, &perron.right_vec, perron.rho);
    let transitions = a
        .rows
        .iter()
        .enumerate()
        .map(|(s, r)| r.iter().map(|&t| (t, v[t as usize] / (rho * v[s]))).collect())
        .collect();
    let mut stationary: Vec<f64> = u.iter().zip(v).map(|(x, y)| x * y).collect();
    let total: f64 = stationary.iter().sum();
    stationary.iter_mut().for_each(|x| *x /= total);
    Ok(MarkovMeasure {
        transitions,
        stationary,
        rho,
    })
}

fn draw(rng: &mut ChaCha8Rng, weights: impl Iterator<Item = (usize, f64)> + Clone) -> usize {
    let r: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (s, w) in weights {
        acc += w;
        last = s;
        if r < acc {
            return s;
        }
    }
    last
}

/// Stationary Parry chain path of the given length; states are 1-based box
/// labels. Deterministic for a fixed seed (ChaCha8).
pub fn sample_parry_path(m: &MarkovMeasure, length: usize, seed: u64) -> Result<Vec<usize>> {
    if length == 0 {
        return Err(Error::InvalidArgument("path length must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(sample_with(m, length, &mut rng))
}

fn sample_with(m: &MarkovMeasure, length: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut path = Vec::with_capacity(length);
    let mut s = draw(rng, m.stationary.iter().cloned().enumerate());
    path.push(s + 1);
    for _ in 1..length {
        s = draw(rng, m.transitions[s].iter().map(|&(t, p)| (t as usize, p)));
        path.push(s + 1);
    }
    path
}

/// Image of a finite box path under the coding map.
#[derive(Debug, Clone, PartialEq)]
pub struct PiTilde {
    /// Depth equals the path length.
    pub point: OrbitPoint,
    /// Exact midpoint of `I_m`.
    pub x0: BigRational,
    /// `intervals[n]` contains `x_n` for every `x_0` in `I_m`; the first is `I_m`.
    pub intervals: Vec<(BigRational, BigRational)>,
    /// `M^-1 (min L)^-(m-1)`.
    pub width_bound: BigRational,
}

impl PiTilde {
    pub fn width(&self) -> BigRational {
        let (a, b) = &self.intervals[0];
        b - a
    }
}

fn check_path(path: &[usize], a: &TransitionMatrix) -> Result<()> {
    for (step, &z) in path.iter().enumerate() {
        if z == 0 || z > a.size() {
            return Err(Error::InvalidArgument(alloc::format!(
                "box label {z} outside 1..={}",
                a.size()
            )));
        }
        if step > 0 && !a.get(path[step - 1] - 1, z - 1) {
            return Err(Error::InadmissiblePath {
                step,
                from: path[step - 1],
                to: z,
            });
        }
    }
    Ok(())
}

/// Nested intervals of an admissible path, computed backwards in exact
/// arithmetic: on box `(i, j)` the generator is `x -> L_i x - c` with
/// `c = floor(L_i j / M)`, so the pull-back of `J` is `(J + c) / L_i`.
pub fn pi_tilde(path: &[usize], l: &[i64]) -> Result<PiTilde> {
    let a = build_matrix_block(l)?;
    pi_tilde_with(path, &a)
}

pub fn pi_tilde_with(path: &[usize], a: &TransitionMatrix) -> Result<PiTilde> {
    if path.is_empty() {
        return Err(Error::InvalidArgument("path must be nonempty".into()));
    }
    let l = a.multipliers();
    if l.is_empty() {
        return Err(Error::Unsupported("matrices without multipliers"));
    }
    check_path(path, a)?;
    let m = a.interval_count();
    let big_m = BigInt::from(m);
    let mut intervals = vec![(BigRational::zero(), BigRational::zero()); path.len()];
    let last = a.label(path[path.len() - 1] - 1);
    intervals[path.len() - 1] = (
        BigRational::new(BigInt::from(last.j), big_m.clone()),
        BigRational::new(BigInt::from(last.j + 1), big_m.clone()),
    );
    for n in (0..path.len() - 1).rev() {
        let b = a.label(path[n] - 1);
        let li = l[b.i - 1];
        let c = BigRational::from_integer(BigInt::from((li as usize * b.j) / m));
        let li = BigRational::from_integer(BigInt::from(li));
        let (lo, hi) = &intervals[n + 1];
        intervals[n] = ((lo + &c) / &li, (hi + &c) / &li);
    }
    let (lo, hi) = &intervals[0];
    let x0 = (lo + hi) / BigRational::from_integer(BigInt::from(2));
    let symbols: Vec<u8> = path[..path.len() - 1]
        .iter()
        .map(|&z| a.label(z - 1).i as u8)
        .collect();
    let min_l = *l.iter().min().unwrap_or(&2);
    let width_bound = BigRational::new(
        BigInt::one(),
        big_m * num_traits::pow(BigInt::from(min_l), path.len() - 1),
    );
    Ok(PiTilde {
        point: OrbitPoint::new(
            Point::circle(to_f64(&x0)),
            SymbolWord::new_unchecked(symbols, l.len() as u8),
        ),
        x0,
        intervals,
        width_bound,
    })
}

/// Two coded orbit points agree at every level of the shorter prefix: their
/// nested intervals overlap in more than an endpoint. Touching at an
/// endpoint is the grid case `x_n in {i/M}` and is not counted.
pub fn images_coincide(a: &PiTilde, b: &PiTilde) -> bool {
    a.point.itinerary.symbols() == b.point.itinerary.symbols()
        && a.intervals
            .iter()
            .zip(&b.intervals)
            .all(|((a0, a1), (b0, b1))| a0.max(b0) < a1.min(b1))
}

/// Fraction of pairs among `samples` sampled paths whose coded points
/// coincide.
pub fn injectivity_probe(m: &MarkovMeasure, l: &[i64], samples: usize, length: usize, seed: u64) -> Result<f64> {
    if samples < 2 {
        return Err(Error::InvalidArgument("need at least two samples".into()));
    }
    if length == 0 {
        return Err(Error::InvalidArgument("path length must be positive".into()));
    }
    let a = build_matrix_block(l)?;
    if a.size() != m.size() {
        return Err(Error::DimensionMismatch {
            expected: a.size(),
            got: m.size(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let images = (0..samples)
        .map(|_| pi_tilde_with(&sample_with(m, length, &mut rng), &a))
        .collect::<Result<Vec<_>>>()?;
    let mut hits = 0usize;
    for i in 0..samples {
        for j in i + 1..samples {
            if images_coincide(&images[i], &images[j]) {
                hits += 1;
            }
        }
    }
    Ok(hits as f64 / (samples * (samples - 1) / 2) as f64)
}

/// Comparison of `sigma_T(pi~(z))` with `pi~(shift z)` for one path.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftCheck {
    /// The intervals of the shifted path are exactly the tail of the original ones.
    pub exact: bool,
    pub itinerary_match: bool,
    /// Circle distance between the two coded base points.
    pub distance: f64,
    /// Width of the first interval of the shifted path.
    pub tolerance: f64,
}

impl ShiftCheck {
    pub fn holds(&self) -> bool {
        self.exact && self.itinerary_match && self.distance <= self.tolerance
    }
}

/// Checks `sigma_T . pi~ = pi~ . sigma` on an admissible path of length at least 2.
pub fn shift_check(path: &[usize], a: &TransitionMatrix) -> Result<ShiftCheck> {
    if path.len() < 2 {
        return Err(Error::InvalidArgument("shift check needs a path of length >= 2".into()));
    }
    let t = Action::circle_linear(a.multipliers())?;
    let p = pi_tilde_with(path, a)?;
    let q = pi_tilde_with(&path[1..], a)?;
    let shifted = p.point.shift(&t)?;
    let (lo, hi) = &q.intervals[0];
    Ok(ShiftCheck {
        exact: p.intervals[1..] == q.intervals[..],
        itinerary_match: shifted.itinerary == q.point.itinerary,
        distance: circle_dist(&shifted.x0, &q.point.x0),
        tolerance: to_f64(&(hi - lo)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    const SETS: [&[i64]; 5] = [&[2], &[2, 3], &[2, 5], &[3, 4], &[2, 3, 5]];

    #[test]
    fn block_shape_and_column_sums() {
        let a = build_matrix_block(&[2, 3]).unwrap();
        assert_eq!(a.size(), 12);
        assert_eq!(a.ones(), 60);
        assert!(a.column_sums().iter().all(|&c| c == 5));
        let b = build_matrix_block(&[2, 3, 5]).unwrap();
        assert_eq!(b.size(), 90);
        assert!(b.column_sums_ok());
        let one = build_matrix_block(&[2]).unwrap();
        assert_eq!(one.rows(), &[vec![0, 1], vec![0, 1]]);
    }

    #[test]
    fn rows_carry_k_times_l_ones() {
        for l in SETS {
            let a = build_matrix_block(l).unwrap();
            for s in 0..a.size() {
                let li = l[a.label(s).i - 1] as usize;
                assert_eq!(a.row(s).len(), l.len() * li);
            }
        }
    }

    #[test]
    fn constructions_agree() {
        for l in SETS {
            assert_eq!(build_matrix_block(l).unwrap(), build_matrix_geometric(l).unwrap());
        }
        let g = build_matrix_geometric(&[2]).unwrap();
        assert_eq!(g.row(0), &[0, 1]);
    }

    #[test]
    fn rejects_bad_multipliers() {
        assert!(build_matrix_block(&[2, 2]).is_err());
        assert!(build_matrix_block(&[1, 3]).is_err());
        assert!(build_matrix_block(&[]).is_err());
        assert!(matches!(
            build_matrix_block_with_budget(&[2, 3, 5, 7], 100),
            Err(Error::BudgetExceeded { required: 840, .. })
        ));
    }

    #[test]
    fn labels_are_a_bijection() {
        let a = build_matrix_block(&[2, 3]).unwrap();
        for (s, b) in a.labels().into_iter().enumerate() {
            assert_eq!(b.l, s + 1);
            assert_eq!(BoxLabel::new(b.i, b.j, 6), b);
        }
    }

    #[test]
    fn irreducibility() {
        assert!(is_irreducible(&build_matrix_block(&[2, 3]).unwrap()));
        let id = TransitionMatrix::from_rows(vec![vec![0], vec![1]]).unwrap();
        assert!(!is_irreducible(&id));
        assert!(matches!(perron_root(&id), Err(Error::NotIrreducible)));
        let full = TransitionMatrix::from_rows(vec![vec![0, 1], vec![0, 1]]).unwrap();
        assert!(is_irreducible(&full));
        assert!((perron_root(&full).unwrap().rho - 2.0).abs() < 1e-12);
    }

    #[test]
    fn perron_root_is_sum_of_multipliers() {
        for l in SETS {
            let p = perron_root(&build_matrix_block(l).unwrap()).unwrap();
            let target: i64 = l.iter().sum();
            assert!((p.rho - target as f64).abs() < 1e-9, "{l:?}: {}", p.rho);
            assert!(p.residual < 1e-9);
            assert!(p.right_vec.iter().chain(&p.left_vec).all(|&x| x > 0.0));
            assert!((sft_entropy(l).unwrap() - (target as f64).ln()).abs() < 1e-9);
        }
    }

    #[test]
    fn parry_invariants() {
        let full = TransitionMatrix::from_rows(vec![vec![0, 1], vec![0, 1]]).unwrap();
        let p = parry_measure(&full).unwrap();
        assert!(p.transitions.iter().flatten().all(|&(_, x)| (x - 0.5).abs() < 1e-12));
        assert!(p.stationary.iter().all(|&x| (x - 0.5).abs() < 1e-12));
        for l in SETS {
            let mu = parry_measure(&build_matrix_block(l).unwrap()).unwrap();
            let target = (l.iter().sum::<i64>() as f64).ln();
            assert!(mu.row_sum_error() < 1e-12);
            assert!(mu.stationary_residual() < 1e-10);
            assert!((mu.entropy_rate() - target).abs() < 1e-9);
        }
    }

    #[test]
    fn sampled_paths() {
        let a = build_matrix_block(&[2, 3]).unwrap();
        let mu = parry_measure(&a).unwrap();
        let len = 10_000;
        let path = sample_parry_path(&mu, len, 7).unwrap();
        assert!(path.windows(2).all(|w| a.get(w[0] - 1, w[1] - 1)));
        assert_eq!(path, sample_parry_path(&mu, len, 7).unwrap());
        let mut freq = vec![0usize; a.size()];
        path.iter().for_each(|&z| freq[z - 1] += 1);
        let tol = 3.0 / (len as f64).sqrt();
        for (f, m) in freq.iter().zip(&mu.stationary) {
            assert!((*f as f64 / len as f64 - m).abs() < tol);
        }
    }

    #[test]
    fn pi_tilde_constant_path_is_zero() {
        for m in [1, 5, 20] {
            let p = pi_tilde(&vec![1; m], &[2, 3]).unwrap();
            assert_eq!(p.intervals[0].0, ratio(0, 1));
            assert_eq!(p.width(), p.width_bound);
            assert!(p.point.x0.x() <= to_f64(&p.width_bound));
        }
    }

    #[test]
    fn pi_tilde_shrinks_and_commutes_with_shift() {
        let l = [2, 3];
        let a = build_matrix_block(&l).unwrap();
        let t = Action::circle_linear(&l).unwrap();
        let mu = parry_measure(&a).unwrap();
        for seed in 0..20 {
            let path = sample_parry_path(&mu, 25, seed).unwrap();
            let p = pi_tilde(&path, &l).unwrap();
            assert!(p.width() <= p.width_bound);
            for w in p.intervals.windows(2) {
                assert!((&w[1].1 - &w[1].0) >= (&w[0].1 - &w[0].0) * ratio(2, 1));
            }
            let q = pi_tilde(&path[1..], &l).unwrap();
            // exact: T_{i_0}(I_m(z)) = I_{m-1}(shifted z)
            assert_eq!(p.intervals[1..], q.intervals[..]);
            let shifted = p.point.shift(&t).unwrap();
            assert_eq!(shifted.itinerary, q.point.itinerary);
            let c = shift_check(&path, &a).unwrap();
            assert!(c.holds(), "{c:?}");
            assert!(c.distance < 1e-12);
        }
    }

    #[test]
    fn pi_tilde_rejects_inadmissible() {
        // box (1, 0) maps onto [0, 1/3]: boxes with j in {0, 1}
        assert!(pi_tilde(&[1, 2], &[2, 3]).is_ok());
        assert!(matches!(
            pi_tilde(&[1, 4], &[2, 3]),
            Err(Error::InadmissiblePath { step: 1, from: 1, to: 4 })
        ));
    }

    #[test]
    fn injectivity() {
        let l = [2, 3];
        let mu = parry_measure(&build_matrix_block(&l).unwrap()).unwrap();
        assert_eq!(injectivity_probe(&mu, &l, 200, 30, 1).unwrap(), 0.0);
        let path = sample_parry_path(&mu, 30, 3).unwrap();
        let p = pi_tilde(&path, &l).unwrap();
        assert!(images_coincide(&p, &p.clone()));
    }

    #[test]
    fn coordinate_list_export() {
        let a = build_matrix_block(&[2]).unwrap();
        let mut s = alloc::string::String::new();
        a.write_coordinate_list(&mut s).unwrap();
        assert_eq!(s, "2\n1 1\n1 2\n2 1\n2 2\n");
    }
}
