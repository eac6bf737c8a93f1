//! Complex hyperbolic geometry in PU(2,1): log-scaled 3x3 linear algebra
//! over the Hermitian form of signature (2,1), boundary geometry and isometry
//! classification, Z-invariants of adjacent real ideal triangles, ideal
//! triangulations of punctured surfaces, and T-bent surface-group
//! representations with their domination checks.

// indexed loops over fixed 3x3 matrices read better than iterator chains here
#![allow(clippy::needless_range_loop)]

pub mod chgeom;
pub mod cli;
pub mod cx3;
pub mod repdom;
pub mod surface;
pub mod zgeom;
