//! Small square integer matrices: the data of torus endomorphisms.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

/// Square matrix with `i64` entries, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IntMatrix {
    n: usize,
    entries: Vec<i64>,
}

impl IntMatrix {
    pub fn from_rows(rows: &[Vec<i64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidArgument("matrix must be non-empty".into()));
        }
        let mut entries = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: row.len(),
                });
            }
            entries.extend_from_slice(row);
        }
        Ok(IntMatrix { n, entries })
    }

    pub fn identity(n: usize) -> Self {
        Self::diag(&vec![1; n])
    }

    pub fn diag(d: &[i64]) -> Self {
        let n = d.len();
        let mut entries = vec![0; n * n];
        for (i, &v) in d.iter().enumerate() {
            entries[i * n + i] = v;
        }
        IntMatrix { n, entries }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.entries[i * self.n + j]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[i64]> {
        self.entries.chunks(self.n)
    }

    pub fn to_rows(&self) -> Vec<Vec<i64>> {
        self.rows().map(<[i64]>::to_vec).collect()
    }

    pub fn checked_mul(&self, other: &IntMatrix) -> Result<IntMatrix> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        let n = self.n;
        let mut entries = vec![0i64; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut acc: i64 = 0;
                for t in 0..n {
                    let p = self
                        .get(i, t)
                        .checked_mul(other.get(t, j))
                        .ok_or(Error::Overflow("matrix product"))?;
                    acc = acc.checked_add(p).ok_or(Error::Overflow("matrix product"))?;
                }
                entries[i * n + j] = acc;
            }
        }
        Ok(IntMatrix { n, entries })
    }

    pub fn checked_pow(&self, m: u32) -> Result<IntMatrix> {
        let mut acc = IntMatrix::identity(self.n);
        for _ in 0..m {
            acc = acc.checked_mul(self)?;
        }
        Ok(acc)
    }

    /// Determinant by fraction-free Bareiss elimination.
    pub fn det(&self) -> i128 {
        let n = self.n;
        let mut a: Vec<i128> = self.entries.iter().map(|&v| v as i128).collect();
        let mut sign = 1i128;
        let mut prev = 1i128;
        for k in 0..n.saturating_sub(1) {
            if a[k * n + k] == 0 {
                match (k + 1..n).find(|&r| a[r * n + k] != 0) {
                    Some(r) => {
                        for c in 0..n {
                            a.swap(k * n + c, r * n + c);
                        }
                        sign = -sign;
                    }
                    None => return 0,
                }
            }
            let pivot = a[k * n + k];
            for i in k + 1..n {
                for j in k + 1..n {
                    a[i * n + j] = (a[i * n + j] * pivot - a[i * n + k] * a[k * n + j]) / prev;
                }
                a[i * n + k] = 0;
            }
            prev = pivot;
        }
        sign * a[n * n - 1]
    }

    pub fn trace(&self) -> i64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// Largest absolute row sum: the operator norm for the sup metric.
    pub fn max_abs_row_sum(&self) -> i64 {
        self.rows()
            .map(|r| r.iter().map(|v| v.abs()).sum::<i64>())
            .max()
            .unwrap_or(0)
    }

    /// Characteristic polynomial `det(xI - A)` as coefficients
    /// `[c_0, c_1, ..., c_n = 1]`, via Faddeev-LeVerrier.
    pub fn char_poly(&self) -> Result<Vec<i128>> {
        let n = self.n;
        let a: Vec<i128> = self.entries.iter().map(|&v| v as i128).collect();
        let mut coeffs = vec![0i128; n + 1];
        coeffs[n] = 1;
        let mut m = vec![0i128; n * n];
        for k in 1..=n {
            // M_k = A M_{k-1} + c_{n-k+1} I
            let mut next = vec![0i128; n * n];
            for i in 0..n {
                for j in 0..n {
                    let mut acc = 0i128;
                    for t in 0..n {
                        acc = a[i * n + t]
                            .checked_mul(m[t * n + j])
                            .and_then(|p| acc.checked_add(p))
                            .ok_or(Error::Overflow("characteristic polynomial"))?;
                    }
                    next[i * n + j] = acc;
                }
                next[i * n + i] += coeffs[n - k + 1];
            }
            m = next;
            let mut tr = 0i128;
            for i in 0..n {
                for t in 0..n {
                    tr = a[i * n + t]
                        .checked_mul(m[t * n + i])
                        .and_then(|p| tr.checked_add(p))
                        .ok_or(Error::Overflow("characteristic polynomial"))?;
                }
            }
            coeffs[n - k] = -tr / k as i128;
        }
        Ok(coeffs)
    }
}

impl fmt::Display for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, row) in self.rows().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str("[")?;
            for (j, v) in row.iter().enumerate() {
                if j > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{v}")?;
            }
            f.write_str("]")?;
        }
        f.write_str("]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[i64]]) -> IntMatrix {
        IntMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn det_small() {
        assert_eq!(m(&[&[2, 1], &[0, 2]]).det(), 4);
        assert_eq!(m(&[&[0, -1], &[1, 0]]).det(), 1);
        assert_eq!(m(&[&[0, 1, 0], &[0, 0, 1], &[1, 0, 0]]).det(), 1);
        assert_eq!(m(&[&[1, 2], &[2, 4]]).det(), 0);
        assert_eq!(m(&[&[2, 3, 1], &[4, 1, 5], &[0, 2, 7]]).det(), -82);
    }

    #[test]
    fn det_matches_cofactor_expansion() {
        fn cofactor(a: &[Vec<i64>]) -> i128 {
            let n = a.len();
            if n == 1 {
                return a[0][0] as i128;
            }
            (0..n)
                .map(|c| {
                    let minor: Vec<Vec<i64>> = a[1..]
                        .iter()
                        .map(|r| r.iter().enumerate().filter(|(j, _)| *j != c).map(|(_, &v)| v).collect())
                        .collect();
                    let s = if c % 2 == 0 { 1 } else { -1 };
                    s * a[0][c] as i128 * cofactor(&minor)
                })
                .sum()
        }
        let mut seed = 7u64;
        for _ in 0..200 {
            let n = 1 + (seed % 4) as usize;
            let rows: Vec<Vec<i64>> = (0..n)
                .map(|_| {
                    (0..n)
                        .map(|_| {
                            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                            ((seed >> 33) % 11) as i64 - 5
                        })
                        .collect()
                })
                .collect();
            let a = IntMatrix::from_rows(&rows).unwrap();
            assert_eq!(a.det(), cofactor(&rows), "{a}");
        }
    }

    #[test]
    fn char_poly_2x2() {
        // x^2 - x - 1
        assert_eq!(m(&[&[1, 1], &[1, 0]]).char_poly().unwrap(), vec![-1, -1, 1]);
        // (x-2)(x-3)
        assert_eq!(IntMatrix::diag(&[2, 3]).char_poly().unwrap(), vec![6, -5, 1]);
    }

    #[test]
    fn pow_and_row_sum() {
        let d = IntMatrix::diag(&[2, 2]);
        assert_eq!(d.checked_pow(3).unwrap(), IntMatrix::diag(&[8, 8]));
        assert_eq!(m(&[&[2, -1], &[0, 3]]).max_abs_row_sum(), 3);
        let big = IntMatrix::diag(&[1 << 40, 1]);
        assert!(matches!(big.checked_pow(2), Err(Error::Overflow(_))));
    }
}
