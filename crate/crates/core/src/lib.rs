//! Steklov eigenvalues of planar domains with one hole.
//!
//! The crate covers P1 finite elements condensed to the boundary, the
//! closed-form spectrum of the concentric annulus, shape-derivative matrices
//! and the experiments built on top of them.

pub mod geometry;
pub mod linalg;
pub mod mesher;
pub mod annulus;
pub mod fem;
pub mod shape_deriv;
pub mod experiments;
