//! Persistent local systems of constructible bisheaves over triangulated
//! manifolds, computed entirely in exact field arithmetic.
//!
//! The core is generic over the scalar field: arbitrary-precision rationals
//! (the default) or a prime field F_p. Concrete aliases for the rational
//! instantiation live at the crate root.

pub mod bisheaf;
pub mod cellsheaf;
pub mod dilation;
pub mod etale;
pub mod exactlin;
pub mod field;
pub mod fixtures;
pub mod io;
pub mod leray;
pub mod simplicial;

pub use field::{Field, Fp, Rational};

/// Rational-coefficient aliases for the common instantiation.
pub type QMatrix = exactlin::Matrix<Rational>;
pub type QSubspace = exactlin::Subspace<Rational>;
