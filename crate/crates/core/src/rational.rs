//! Exact rational points of the circle and torus.
//!
//! Preimages under integer dynamics of rational points are rational, so
//! deduplication and membership tests can be done exactly.

use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::intmat::IntMatrix;
use crate::spaces::Point;

/// Reduces a rational into `[0, 1)`.
pub fn frac(r: &BigRational) -> BigRational {
    r - r.floor()
}

pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Exact conversion of a finite float (every finite `f64` is dyadic).
pub fn from_f64(x: f64) -> Result<BigRational> {
    BigRational::from_float(x).ok_or_else(|| Error::InvalidArgument(alloc::format!("non-finite value {x}")))
}

pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// A point of the circle or torus with exact rational coordinates in `[0, 1)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RatPoint {
    coords: Vec<BigRational>,
}

impl RatPoint {
    pub fn new(coords: impl IntoIterator<Item = BigRational>) -> Self {
        RatPoint {
            coords: coords.into_iter().map(|c| frac(&c)).collect(),
        }
    }

    pub fn from_ratios(pairs: &[(i64, i64)]) -> Self {
        RatPoint::new(pairs.iter().map(|&(n, d)| ratio(n, d)))
    }

    pub fn circle(num: i64, den: i64) -> Self {
        RatPoint::from_ratios(&[(num, den)])
    }

    pub fn zero(dim: usize) -> Self {
        RatPoint {
            coords: (0..dim).map(|_| BigRational::zero()).collect(),
        }
    }

    pub fn from_point(p: &Point) -> Result<Self> {
        Ok(RatPoint {
            coords: p.coords().iter().map(|&c| from_f64(c)).collect::<Result<_>>()?,
        })
    }

    pub fn coords(&self) -> &[BigRational] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn to_point(&self) -> Point {
        Point::new(self.coords.iter().map(to_f64).collect::<Vec<_>>())
    }

    /// `x -> L x mod 1` on the circle, or coordinatewise scaling.
    pub fn scale(&self, l: i64) -> RatPoint {
        let l = BigRational::from_integer(BigInt::from(l));
        RatPoint::new(self.coords.iter().map(|c| c * &l))
    }

    pub fn translate(&self, alpha: &[BigRational]) -> RatPoint {
        RatPoint::new(self.coords.iter().zip(alpha).map(|(c, a)| c + a))
    }

    pub fn apply_matrix(&self, a: &IntMatrix) -> Result<RatPoint> {
        if a.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: a.dim(),
                got: self.dim(),
            });
        }
        Ok(RatPoint::new(a.rows().map(|row| {
            row.iter()
                .zip(&self.coords)
                .map(|(&m, c)| c * BigRational::from_integer(BigInt::from(m)))
                .fold(BigRational::zero(), |acc, t| acc + t)
        })))
    }

    /// Least common denominator of the coordinates.
    pub fn denominator(&self) -> BigInt {
        self.coords
            .iter()
            .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()))
    }
}

impl fmt::Display for RatPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str(")")
    }
}

/// Exact inverse of a nonsingular integer matrix, row-major.
pub fn inverse(a: &IntMatrix) -> Result<Vec<Vec<BigRational>>> {
    let n = a.dim();
    let mut m: Vec<Vec<BigRational>> = a
        .rows()
        .enumerate()
        .map(|(i, row)| {
            let mut r: Vec<BigRational> = row
                .iter()
                .map(|&v| BigRational::from_integer(BigInt::from(v)))
                .collect();
            r.extend((0..n).map(|j| if i == j { BigRational::one() } else { BigRational::zero() }));
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !m[r][col].is_zero()).ok_or(Error::Singular)?;
        m.swap(col, pivot);
        let p = m[col][col].clone();
        for v in m[col].iter_mut() {
            *v = &*v / &p;
        }
        for r in 0..n {
            if r != col && !m[r][col].is_zero() {
                let factor = m[r][col].clone();
                let pivot_row = m[col].clone();
                for (v, pv) in m[r].iter_mut().zip(&pivot_row) {
                    *v = &*v - &factor * pv;
                }
            }
        }
    }
    Ok(m.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// `M v` for a rational matrix and rational vector.
pub fn mat_vec(m: &[Vec<BigRational>], v: &[BigRational]) -> Vec<BigRational> {
    m.iter()
        .map(|row| {
            row.iter()
                .zip(v)
                .fold(BigRational::zero(), |acc, (a, b)| acc + a * b)
        })
        .collect()
}
