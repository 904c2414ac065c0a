//! Controlled invariant sets for linear hybrid control systems.

// BLAS/LAPACK for the PSD cones of the interior-point backend.
use openblas_src as _;

pub mod conic;
pub mod linalg;
pub mod model;
pub mod reduction;
pub mod geometry;
pub mod polysos;
pub mod synthesis;
pub mod verify;
