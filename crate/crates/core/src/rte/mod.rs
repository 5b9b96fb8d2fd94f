//! The slab radiative transfer equation with discrete ordinates.

mod kernel;
mod ordinates;
mod solver;

pub use kernel::{henyey_greenstein_matrix, CollisionKernel};
pub use ordinates::Ordinates;
pub use solver::RteSolver;
