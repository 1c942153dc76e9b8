//! Cup-product obstructions to fillability of odd-dimensional manifolds.
//!
//! The crate works with finitely presented graded-commutative cohomology
//! rings and decides whether multi-fold cup-product maps vanish, which
//! rules out Stein, Milnor or holomorphic fillings and bounds the
//! homotopical dimension of any filling. Circle bundles are handled through
//! the Euler class on the base.

pub mod abelian;
pub mod bundle;
pub mod catalog;
pub mod gradedring;
pub mod obstruct;
