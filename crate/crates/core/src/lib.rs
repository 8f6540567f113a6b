//! Truncated operator-valued multishifts: moment systems, similarity
//! certificates, unitary equivalence and growth diagnostics.
//!
//! A multishift with invertible matrix weights is modelled by its moment
//! family `α ↦ G_α = B_α* B_α` on a total-degree truncation of `ℕᵈ`. Two
//! multishifts are similar exactly when some invertible `C` and constants
//! `0 < m₁ ≤ m₂` satisfy `m₁ C* G_α C ≤ G̃_α ≤ m₂ C* G_α C` for every `α`;
//! the [`equivalence`] module verifies, searches for and diagnoses such
//! certificates.
//!
//! Numerical routines are generic over the [`Real`] scalar; the aliases
//! below fix the double precision instantiation used by the CLI.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod equivalence;
pub mod error;
pub mod kernelgen;
pub mod lattice;
pub mod numerics;
pub mod random;
pub mod scalar;
pub mod shiftcore;

pub use error::{Error, Result};
pub use scalar::{Cx, Real};

/// Double precision complex matrix.
pub type CMatrix = numerics::Matrix<f64>;
/// Single precision complex matrix.
pub type CMatrix32 = numerics::Matrix<f32>;
/// Double precision log-scaled Hermitian positive definite matrix.
pub type HermPd = numerics::LogPd<f64>;
/// Single precision log-scaled Hermitian positive definite matrix.
pub type HermPd32 = numerics::LogPd<f32>;
pub type WeightSystem = shiftcore::Weights<f64>;
pub type MomentSystem = shiftcore::Moments<f64>;
pub type MomentSystem32 = shiftcore::Moments<f32>;
pub type TruncatedMz = shiftcore::MzBlocks<f64>;
pub type KernelSpec = kernelgen::Kernel<f64>;
pub type SimilarityCertificate = equivalence::Certificate<f64>;
pub type IntertwinerMatrix = equivalence::Intertwiner<f64>;
