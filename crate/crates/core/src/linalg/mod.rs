//! Dense and banded linear algebra, randomized range finding and rank
//! diagnostics.
//!
//! Dense matrices are plain [`nalgebra::DMatrix<f64>`] values (column-major).
//! Operators that are only available through their action, such as local PDE
//! solution maps, implement [`LinearOperator`].

mod banded;
mod decomp;
mod lstsq;
mod operator;
mod rng;
mod rsvd;

pub use banded::{BandCholesky, BandLu, BandMatrix};
pub use decomp::{
    numerical_rank, orthonormal_basis, qr_orthonormalize, spectral_norm, subspace_angle,
    thin_svd, SvdTriple,
};
pub use lstsq::{least_squares, LeastSquares};
pub use operator::{adjoint_mismatch, CountingOperator, DenseOperator, LinearOperator};
pub use rng::{derive_seed, gaussian_matrix, gaussian_vector, seeded_rng};
pub use rsvd::{randomized_svd, DEFAULT_OVERSAMPLING};

/// Dense real matrix, column-major.
pub type DenseMatrix = nalgebra::DMatrix<f64>;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `‖a − b‖₂ / ‖b‖₂` (absolute when `b` vanishes).
pub fn relative_l2(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let scale = norm2(b);
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}
