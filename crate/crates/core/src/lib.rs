//! Computational companion for optimal higher-order Sobolev inequalities on
//! compact manifolds: exact polyharmonic bubble identities, sharp constants,
//! fundamental solutions of `Δ^k + α^{2k}`, test-function quotients on model
//! manifolds, blow-up regime quantities and Giraud-type convolution bounds.
//!
//! The Laplacian is the geometer's one, `Δ = -div ∇`.

pub mod cli;
pub mod constants;
pub mod cutoff;
pub mod error;
pub mod ext;
pub mod fit;
pub mod geometry;
pub mod giraud;
pub mod green;
pub mod jet;
pub mod minimize;
pub mod quad;
pub mod quotient;
pub mod radial;
pub mod regimes;

pub use constants::{DimensionPair, SymbolicConstant};
pub use error::{Error, Result};
