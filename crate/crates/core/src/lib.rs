//! Entropy of `Z+^k` actions generated by finitely many self-maps of the
//! circle or a torus.
//!
//! The entropy of an action is the topological entropy of the shift on its
//! orbit space: the space of sequences `x_0, x_1, ...` where each step applies
//! one of the generators. This crate computes it exactly for expanding circle
//! actions `x -> L_i x mod 1` through a subshift of finite type, estimates it
//! from separated and spanning sets of truncated orbits, and provides
//! closed-form upper bounds plus preimage-entropy estimators for expanding
//! torus endomorphisms.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the experiment
//! runner and the command-line tool live in the `orbit-entropy` crate.
//!
//! ```
//! use orbit_entropy_core::sft;
//!
//! let h = sft::sft_entropy(&[2, 3]).unwrap();
//! assert!((h - 5f64.ln()).abs() < 1e-9);
//! ```

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod actions;
pub mod bounds;
mod error;
pub mod intmat;
pub(crate) mod math;
pub mod orbit_space;
mod packing;
pub mod preimage;
#[cfg(test)]
mod proptests;
pub mod rational;
pub mod sft;
pub mod spaces;

pub use actions::{Action, GeneratorMap, Space};
pub use error::{Error, Result};
pub use intmat::IntMatrix;
pub use orbit_space::{EntropyEstimate, OrbitPoint, SkewPoint};
pub use spaces::{Point, SymbolWord, TruncatedDistance};
