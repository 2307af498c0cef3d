//! Approximate component mode synthesis (ACMS) for the two-dimensional
//! heterogeneous Helmholtz equation with impedance boundary conditions.
//!
//! The crate is layered bottom-up:
//!
//! * [`linalg`] dense, compressed-sparse and banded kernels plus a dense
//!   symmetric-definite generalized eigensolver,
//! * [`geometry`] rectangular multi-cell domains, their decompositions and
//!   conforming triangulations,
//! * [`problem`] coefficients and boundary data,
//! * [`femcore`] hierarchical order-`p` triangle elements and assembly,
//! * [`acms_basis`] edge modes, vertex traces and local Helmholtz-harmonic
//!   extensions,
//! * [`acms_system`] dof numbering, assembly and solution of the reduced system,
//! * [`reference`] direct finite element solvers and dense oracles,
//! * [`postprocess`] error measures, line energies, exports and slope fits.

pub mod acms_basis;
pub mod acms_system;
pub mod error;
pub mod femcore;
pub mod geometry;
pub mod linalg;
pub mod postprocess;
pub mod problem;
pub mod reference;

pub use error::{Error, Result};
pub use num_complex::Complex64;
