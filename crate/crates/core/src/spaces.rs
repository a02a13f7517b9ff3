//! Metric spaces: the circle, the n-torus, the symbolic space over `k`
//! letters, and the orbit-space metric on truncated orbits.
//!
//! Every distance computed from truncated data carries an explicit bound on
//! the omitted tail, so callers can decide separation conservatively.

use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::math::{abs, frac, pow2i};

/// Diameter of the circle and of the torus under the sup-product metric.
pub const DIAMETER: f64 = 0.5;

/// The compact base space an action lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Space {
    Circle,
    Torus(usize),
}

impl Space {
    pub fn dim(self) -> usize {
        match self {
            Space::Circle => 1,
            Space::Torus(n) => n,
        }
    }

    pub fn diameter(self) -> f64 {
        DIAMETER
    }

    /// Ball dimension, known analytically for these spaces.
    pub fn ball_dimension(self) -> f64 {
        self.dim() as f64
    }

    pub fn distance(self, x: &Point, y: &Point) -> Result<f64> {
        match self {
            Space::Circle => {
                check_dim(1, x)?;
                check_dim(1, y)?;
                Ok(circle_dist(x, y))
            }
            Space::Torus(n) => {
                check_dim(n, x)?;
                torus_dist(x, y)
            }
        }
    }
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Space::Circle => f.write_str("circle"),
            Space::Torus(n) => write!(f, "torus({n})"),
        }
    }
}

fn check_dim(expected: usize, p: &Point) -> Result<()> {
    if p.dim() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: p.dim(),
        });
    }
    Ok(())
}

/// A point of the circle or a torus; every coordinate lies in `[0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    coords: Vec<f64>,
}

impl Point {
    /// Builds a point, reducing every coordinate mod 1.
    pub fn new(coords: impl Into<Vec<f64>>) -> Self {
        let mut coords = coords.into();
        for c in coords.iter_mut() {
            *c = frac(*c);
        }
        Point { coords }
    }

    pub fn circle(x: f64) -> Self {
        Point::new([x])
    }

    pub fn zero(dim: usize) -> Self {
        Point {
            coords: alloc::vec![0.0; dim],
        }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// The single coordinate of a circle point.
    pub fn x(&self) -> f64 {
        self.coords[0]
    }

    pub(crate) fn from_normalized(coords: Vec<f64>) -> Self {
        debug_assert!(coords.iter().all(|c| (0.0..1.0).contains(c)));
        Point { coords }
    }
}

/// Finite word over the alphabet `1..=k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SymbolWord {
    symbols: Vec<u8>,
    k: u8,
}

impl SymbolWord {
    pub fn new(symbols: impl Into<Vec<u8>>, k: u8) -> Result<Self> {
        let symbols = symbols.into();
        if k == 0 {
            return Err(Error::InvalidArgument("alphabet size must be positive".into()));
        }
        if let Some(bad) = symbols.iter().find(|&&s| s == 0 || s > k) {
            return Err(Error::InvalidArgument(alloc::format!(
                "symbol {bad} outside alphabet 1..={k}"
            )));
        }
        Ok(SymbolWord { symbols, k })
    }

    pub(crate) fn new_unchecked(symbols: Vec<u8>, k: u8) -> Self {
        SymbolWord { symbols, k }
    }

    pub fn constant(symbol: u8, len: usize, k: u8) -> Result<Self> {
        SymbolWord::new(alloc::vec![symbol; len], k)
    }

    pub fn symbols(&self) -> &[u8] {
        &self.symbols
    }

    pub fn alphabet(&self) -> u8 {
        self.k
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn shifted(&self) -> SymbolWord {
        SymbolWord {
            symbols: self.symbols.get(1..).unwrap_or(&[]).to_vec(),
            k: self.k,
        }
    }

    pub fn prefix(&self, len: usize) -> SymbolWord {
        SymbolWord {
            symbols: self.symbols[..len.min(self.symbols.len())].to_vec(),
            k: self.k,
        }
    }
}

/// Distance computed from finitely many terms of a convergent series.
///
/// The true distance lies in `[value, value + tail_bound]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedDistance {
    pub value: f64,
    pub tail_bound: f64,
}

impl TruncatedDistance {
    pub fn upper(&self) -> f64 {
        self.value + self.tail_bound
    }

    /// True only if the distance certainly exceeds `eps`.
    pub fn certainly_exceeds(&self, eps: f64) -> bool {
        self.value > eps + self.tail_bound
    }
}

/// Geodesic distance on the circle: the length of the shorter arc.
pub fn circle_dist(x: &Point, y: &Point) -> f64 {
    circle_gap(x.x(), y.x())
}

#[inline]
pub(crate) fn circle_gap(x: f64, y: f64) -> f64 {
    let d = abs(x - y);
    if d > 0.5 {
        1.0 - d
    } else {
        d
    }
}

/// Sup over coordinates of the circle distance.
pub fn torus_dist(x: &Point, y: &Point) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            got: y.dim(),
        });
    }
    Ok(flat_dist(x.coords(), y.coords()))
}

#[inline]
pub(crate) fn flat_dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(&a, &b)| circle_gap(a, b))
        .fold(0.0, f64::max)
}

/// `sum_n [u_n != v_n] / 2^n` over the common prefix of the two words.
pub fn symbol_dist(u: &SymbolWord, v: &SymbolWord) -> Result<TruncatedDistance> {
    if u.k != v.k {
        return Err(Error::InvalidArgument(alloc::format!(
            "alphabet mismatch: {} vs {}",
            u.k,
            v.k
        )));
    }
    let depth = u.len().min(v.len());
    let value = u
        .symbols
        .iter()
        .zip(&v.symbols)
        .enumerate()
        .filter(|(_, (a, b))| a != b)
        .map(|(n, _)| pow2i(-(n as i32)))
        .sum();
    Ok(TruncatedDistance {
        value,
        tail_bound: pow2i(1 - depth as i32),
    })
}

/// Orbit-space distance `sum_n d(x_n, y_n) / 2^n` between two realized orbit
/// segments of equal length.
pub fn orbit_dist(space: Space, a: &[Point], b: &[Point]) -> Result<TruncatedDistance> {
    if a.len() != b.len() {
        return Err(Error::DepthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let mut value = 0.0;
    let mut weight = 1.0;
    for (x, y) in a.iter().zip(b) {
        value += space.distance(x, y)? * weight;
        weight *= 0.5;
    }
    Ok(TruncatedDistance {
        value,
        tail_bound: orbit_tail_bound(space.diameter(), a.len()),
    })
}

#[inline]
pub(crate) fn orbit_tail_bound(diameter: f64, depth: usize) -> f64 {
    diameter * pow2i(1 - depth as i32)
}
