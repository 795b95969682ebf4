//! Nonlocal diffusion operators on Euclidean-ball and polygonal interaction
//! neighborhoods in two dimensions.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`] builds and measures polygonal approximations of disks.
//! * [`kernels`] holds the compactly supported radial kernel catalogue.
//! * [`fields`] has the scalar test functions used throughout.
//! * [`quadrature`] provides Gauss–Legendre and adaptive Gauss–Kronrod rules.
//! * [`operator`] evaluates the nonlocal operator pointwise, the second-moment
//!   coefficients of truncated kernels and the energy seminorms.
//! * [`solver`] discretizes the volume-constrained problem on a uniform grid
//!   and solves it with matrix-free conjugate gradients.
//! * [`study`] drives convergence paths and diagnostic sweeps and writes CSV.

pub mod error;
pub mod fields;
pub mod geometry;
pub mod kernels;
pub mod operator;
pub mod quadrature;
pub mod solver;
pub mod study;

pub use error::{Error, Result};
pub use geometry::{NeighborhoodSpec, Point2, Polygon, Strategy};
pub use kernels::{Kernel, KernelFamily};
