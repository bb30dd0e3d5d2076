//! Numerical library for maximal output p-norms of linear maps on matrix
//! algebras.
//!
//! The crate computes Schatten norms and maximal output p-norms, canonical
//! forms of qubit maps in the Bloch affine representation, the closed-form
//! qubit maximum, block-matrix norm inequalities and their proof-step
//! diagnostics, multiplicativity experiments for tensor product maps, and
//! decomposition of unit-ball affine maps into Gorini-Sudarshan extreme
//! points.

pub mod error;
pub mod matcore;
pub mod real3;

pub mod blockineq;
pub mod channels;
pub mod experiments;
pub mod extremes;
pub mod pnorm;

pub use error::{Error, Result};
