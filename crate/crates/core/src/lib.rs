//! Martingale decompositions with certified explicit constants on finite
//! atomic filtrations.
//!
//! The crate takes a finite filtration given as a tree of atoms, a terminal
//! function on its leaves, and produces the Gundy–Stein decomposition
//! `f = g + h + k` (with `k` further split into a stopped part and a
//! predictable part) together with a [`report::Certification`]: every
//! explicit constant in the construction is re-verified on the instance,
//! exactly over rationals or to fixed tolerances over floats.
//!
//! On top of the decomposition sit three certified applications:
//! sharpness oracles on the two-point space ([`sharpness`]), the
//! weak-type (1,1) bound for truncated martingale multipliers
//! ([`multipliers`]), and the John–Nirenberg inequality with explicit
//! constants on regular filtrations ([`john_nirenberg`]).

pub mod decomposition;
pub mod filtration;
pub mod generator;
pub mod john_nirenberg;
pub mod multipliers;
pub mod report;
pub mod scalar;
pub mod sharpness;

pub use filtration::{AtomSpec, Filtration, StoppingTime, TerminalFunction};
pub use report::{Certification, CheckRecord, CheckStatus};
pub use scalar::{Rational, Scalar};
