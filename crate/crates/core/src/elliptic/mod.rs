//! The elliptic model problem `−∇·(a(x, x/ε) ∇u) = f` with Dirichlet data.

mod media;
mod solver;

pub use media::{in_channel, Media, PRESETS};
pub use solver::EllipticSolver;
