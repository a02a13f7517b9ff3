//! Greedy packing and covering of truncated orbits under the `n`-step
//! Bowen metric built from the orbit-space metric.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::pow2i;
use crate::spaces::flat_dist;

/// Realized orbit segments of equal depth stored contiguously.
pub(crate) struct Orbits<'a> {
    pub data: &'a [f64],
    pub depth: usize,
    pub dim: usize,
    pub diameter: f64,
}

impl Orbits<'_> {
    #[inline]
    pub fn len(&self) -> usize {
        self.data.len() / (self.depth * self.dim)
    }

    #[inline]
    fn orbit(&self, i: usize) -> &[f64] {
        let w = self.depth * self.dim;
        &self.data[i * w..(i + 1) * w]
    }

    #[inline]
    fn coord(&self, i: usize, m: usize) -> f64 {
        self.orbit(i)[m * self.dim]
    }
}

/// Shifted distances `value_s = sum_{m >= s} d_m 2^{s - m}` for `s < n`,
/// together with their tail bounds.
pub(crate) struct BowenEvaluator {
    n: usize,
    eps: f64,
    tails: Vec<f64>,
    d: Vec<f64>,
    v: Vec<f64>,
}

impl BowenEvaluator {
    pub fn new(n: usize, eps: f64, depth: usize, diameter: f64) -> Self {
        let tails = (0..n)
            .map(|s| diameter * pow2i(1 - (depth - s) as i32))
            .collect();
        BowenEvaluator {
            n,
            eps,
            tails,
            d: vec![0.0; depth],
            v: vec![0.0; n],
        }
    }

    pub fn max_tail(&self) -> f64 {
        self.tails.last().copied().unwrap_or(0.0)
    }

    fn fill(&mut self, a: &[f64], b: &[f64], dim: usize) {
        let depth = self.d.len();
        for m in 0..depth {
            self.d[m] = flat_dist(&a[m * dim..(m + 1) * dim], &b[m * dim..(m + 1) * dim]);
        }
        let mut acc = 0.0;
        for m in (0..depth).rev() {
            acc = self.d[m] + 0.5 * acc;
            if m < self.n {
                self.v[m] = acc;
            }
        }
    }

    /// Certainly more than `eps` apart at some time `s < n`.
    pub fn separated(&mut self, a: &[f64], b: &[f64], dim: usize) -> bool {
        self.fill(a, b, dim);
        (0..self.n).any(|s| self.v[s] > self.eps + self.tails[s])
    }

    /// Certainly within `eps` at every time `s < n`.
    pub fn covers(&mut self, a: &[f64], b: &[f64], dim: usize) -> bool {
        self.fill(a, b, dim);
        (0..self.n).all(|s| self.v[s] + self.tails[s] <= self.eps)
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
pub(crate) enum Mode {
    Separated,
    Spanning,
}

const MAX_CELLS_PER_AXIS: usize = 64;

/// Uniform bucket grid over the first coordinate of the first few orbit
/// points. Cell width is at least the search radius, so two orbits within
/// the radius at those times sit in adjacent cells.
struct Buckets {
    axes: usize,
    per_axis: usize,
    cells: Vec<Vec<u32>>,
    neighbor_offsets: Vec<usize>,
}

impl Buckets {
    fn new(axes: usize, radius: f64) -> Self {
        let per_axis = if radius > 0.0 {
            ((1.0 / radius) as usize).clamp(1, MAX_CELLS_PER_AXIS)
        } else {
            MAX_CELLS_PER_AXIS
        };
        let mut offsets: Vec<usize> = if per_axis >= 3 {
            vec![per_axis - 1, 0, 1]
        } else {
            (0..per_axis).collect()
        };
        offsets.sort_unstable();
        offsets.dedup();
        Buckets {
            axes,
            per_axis,
            cells: vec![Vec::new(); per_axis.pow(axes as u32)],
            neighbor_offsets: offsets,
        }
    }

    fn cell_of(&self, orbits: &Orbits, i: usize) -> Vec<usize> {
        (0..self.axes)
            .map(|m| ((orbits.coord(i, m) * self.per_axis as f64) as usize).min(self.per_axis - 1))
            .collect()
    }

    fn flat(&self, cell: &[usize]) -> usize {
        cell.iter().fold(0, |acc, &c| acc * self.per_axis + c)
    }

    fn insert(&mut self, orbits: &Orbits, i: usize) {
        let key = self.flat(&self.cell_of(orbits, i));
        self.cells[key].push(i as u32);
    }

    /// Calls `f` on every stored index in the neighborhood of orbit `i`
    /// until it returns `true`.
    fn any_near(&self, orbits: &Orbits, i: usize, mut f: impl FnMut(usize) -> bool) -> bool {
        let base = self.cell_of(orbits, i);
        let mut cursor = vec![0usize; self.axes];
        let mut cell = vec![0usize; self.axes];
        loop {
            for a in 0..self.axes {
                cell[a] = (base[a] + self.neighbor_offsets[cursor[a]]) % self.per_axis;
            }
            if self.cells[self.flat(&cell)].iter().any(|&j| f(j as usize)) {
                return true;
            }
            let mut a = 0;
            loop {
                if a == self.axes {
                    return false;
                }
                cursor[a] += 1;
                if cursor[a] < self.neighbor_offsets.len() {
                    break;
                }
                cursor[a] = 0;
                a += 1;
            }
        }
    }
}

/// Greedy pass over `order`. In separated mode a candidate is kept unless
/// some kept orbit is not certainly separated from it; in spanning mode it
/// becomes a new center unless some center certainly covers it. Returns the
/// kept indices.
pub(crate) fn greedy(orbits: &Orbits, order: &[usize], n: usize, eps: f64, mode: Mode) -> Vec<usize> {
    let mut eval = BowenEvaluator::new(n, eps, orbits.depth, orbits.diameter);
    // Not separated (or covered) forces d_m <= eps + tail_m for every m < n.
    let radius = eps + eval.max_tail();
    let axes = n.min(3).min(orbits.depth);
    let mut buckets = Buckets::new(axes, radius);
    let mut kept = Vec::new();
    for &i in order {
        let a = orbits.orbit(i);
        let blocked = buckets.any_near(orbits, i, |j| {
            let b = orbits.orbit(j);
            match mode {
                Mode::Separated => !eval.separated(a, b, orbits.dim),
                Mode::Spanning => eval.covers(b, a, orbits.dim),
            }
        });
        if !blocked {
            buckets.insert(orbits, i);
            kept.push(i);
        }
    }
    kept
}

/// All-pairs version without bucketing.
#[cfg(test)]
pub(crate) fn greedy_naive(orbits: &Orbits, order: &[usize], n: usize, eps: f64, mode: Mode) -> Vec<usize> {
    let mut eval = BowenEvaluator::new(n, eps, orbits.depth, orbits.diameter);
    let mut kept: Vec<usize> = Vec::new();
    for &i in order {
        let a = orbits.orbit(i);
        let blocked = kept.iter().any(|&j| {
            let b = orbits.orbit(j);
            match mode {
                Mode::Separated => !eval.separated(a, b, orbits.dim),
                Mode::Spanning => eval.covers(b, a, orbits.dim),
            }
        });
        if !blocked {
            kept.push(i);
        }
    }
    kept
}

/// Pairwise separation relation, for exhaustive checks.
pub(crate) fn separation_matrix(orbits: &Orbits, n: usize, eps: f64) -> Vec<Vec<bool>> {
    let mut eval = BowenEvaluator::new(n, eps, orbits.depth, orbits.diameter);
    let len = orbits.len();
    (0..len)
        .map(|i| {
            (0..len)
                .map(|j| i != j && eval.separated(orbits.orbit(i), orbits.orbit(j), orbits.dim))
                .collect()
        })
        .collect()
}
