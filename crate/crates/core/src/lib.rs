//! Randomized low-rank solvers for multiscale PDEs.
//!
//! The crate learns compressed local solution spaces and boundary-to-boundary
//! maps of elliptic equations with oscillatory media and of the slab radiative
//! transfer equation, then reuses them to solve new boundary-value problems
//! cheaply. The building blocks are:
//!
//! * [`linalg`]: dense kernels, banded factorizations, randomized SVD and
//!   rank diagnostics behind a matrix-free [`linalg::LinearOperator`] trait.
//! * [`partition`]: uniform grids, overlapping box partitions and
//!   partition-of-unity weights.
//! * [`elliptic`] and [`rte`]: fine-grid local solvers with exact discrete
//!   adjoints.
//! * [`basis`]: random local bases and least-squares global assembly.
//! * [`schwarz`]: vanilla and reduced (compressed) Schwarz iteration.
//! * [`manifold`]: nearest-neighbour tangent interpolation of nonlinear
//!   solution maps.

pub mod basis;
pub mod elliptic;
pub mod error;
pub mod io;
pub mod linalg;
pub mod local;
pub mod manifold;
pub mod partition;
pub mod rte;
pub mod schwarz;

pub use error::{Error, Result};
