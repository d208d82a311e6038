//! Monte Carlo tools for the spatially homogeneous Boltzmann equation with
//! Maxwellian molecules, built on the probabilistic representation of the
//! solution through random McKean trees.
//!
//! The solution `μ(·, t)` started from `μ_0` is the law of
//! `Σ_j π_j ψ_j(u)·V_j` summed over the leaves of a random tree, where the
//! weights `π_j` and rotations `O_j` are products of collision angles along
//! each root-to-leaf path and `V_j` are independent draws from `μ_0`.
//!
//! * [`kernel`]: collision kernels, spectral functionals, angular sampling.
//! * [`tree`]: trees, germination and exact tree probabilities.
//! * [`weights`]: leaf weights, expected-sum recursions and bounds.
//! * [`geometry`]: rotation arrays and the spherical atlas.
//! * [`sampler`]: tree draws, initial data, the Wild cascade and
//!   characteristic-function estimators.
//! * [`diagnostics`]: identity suites, decay fits and cross-checks.

pub mod diagnostics;
mod error;
pub mod exec;
pub mod geometry;
pub mod kernel;
pub mod quadrature;
pub mod sampler;
pub mod tree;
pub mod weights;

pub use error::{Error, Result};
pub use exec::{Execution, MonteCarlo};
