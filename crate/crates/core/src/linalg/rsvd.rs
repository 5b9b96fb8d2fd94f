use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::decomp::{orthonormal_basis, thin_svd, SvdTriple};
use super::operator::LinearOperator;
use super::rng::gaussian_matrix;
use crate::error::{Error, Result};

/// Oversampling used when callers do not choose one.
pub const DEFAULT_OVERSAMPLING: usize = 5;

/// Randomized SVD of a matrix-free operator.
///
/// Sketches the range with `k = r + p` Gaussian test vectors
/// (`Y = AΩ`, `Y = QR`), then forms `B = AᵀQ` from `k` adjoint applications
/// and returns `U = QŨ`, `Σ`, `V` from the SVD `Bᵀ = ŨΣVᵀ`. Exactly `k`
/// forward and `k` adjoint applications are issued; the forward ones run in
/// parallel.
pub fn randomized_svd<O: LinearOperator + ?Sized>(
    op: &O,
    r: usize,
    p: usize,
    seed: u64,
) -> Result<SvdTriple> {
    if r == 0 || p == 0 {
        return Err(Error::InvalidParameter(format!(
            "randomized SVD needs r >= 1 and p >= 1 (got r = {r}, p = {p})"
        )));
    }
    let (m, n) = (op.range_dim(), op.domain_dim());
    let k = r + p;
    if k > m.min(n) {
        return Err(Error::OversampledBeyondRank {
            requested: k,
            available: m.min(n),
        });
    }

    let omega = gaussian_matrix(n, k, seed)?;
    let samples: Vec<DVector<f64>> = (0..k)
        .into_par_iter()
        .map(|j| op.apply(&omega.column(j).into_owned()))
        .collect();
    let q = orthonormal_basis(&DMatrix::from_columns(&samples));

    let projected: Vec<DVector<f64>> = (0..k)
        .into_par_iter()
        .map(|j| op.apply_adjoint(&q.column(j).into_owned()))
        .collect();
    let b = DMatrix::from_columns(&projected);

    let small = thin_svd(&b.transpose());
    Ok(SvdTriple {
        u: q * small.u,
        s: small.s,
        v: small.v,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{
        qr_orthonormalize, spectral_norm, CountingOperator, DenseOperator,
    };

    #[test]
    fn identity_is_recovered() {
        let op = DenseOperator(DMatrix::identity(5, 5));
        let svd = randomized_svd(&op, 4, 1, 3).unwrap();
        assert!(svd.s.iter().all(|s| (s - 1.0).abs() < 1e-10));
        assert!(spectral_norm(&(svd.reconstruct() - DMatrix::identity(5, 5))) < 1e-10);
    }

    #[test]
    fn rank_one_is_exact() {
        let u = qr_orthonormalize(&gaussian_matrix(30, 1, 1).unwrap());
        let v = qr_orthonormalize(&gaussian_matrix(20, 1, 2).unwrap());
        let op = DenseOperator(&u * v.transpose());
        let svd = randomized_svd(&op, 1, 2, 5).unwrap();
        assert!((svd.s[0] - 1.0).abs() < 1e-10);
        assert!(svd.s.iter().skip(1).all(|&s| s <= 1e-10));
    }

    #[test]
    fn counts_applications() {
        let op = CountingOperator::new(DenseOperator(gaussian_matrix(40, 30, 1).unwrap()));
        randomized_svd(&op, 6, 4, 2).unwrap();
        assert_eq!(op.forward_count(), 10);
        assert_eq!(op.adjoint_count(), 10);
    }

    #[test]
    fn deterministic_per_seed() {
        let op = DenseOperator(gaussian_matrix(25, 15, 8).unwrap());
        let a = randomized_svd(&op, 3, 2, 77).unwrap();
        let b = randomized_svd(&op, 3, 2, 77).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn oversampling_beyond_dimensions_is_rejected() {
        let op = DenseOperator(gaussian_matrix(6, 4, 1).unwrap());
        assert!(matches!(
            randomized_svd(&op, 3, 2, 0),
            Err(Error::OversampledBeyondRank { requested: 5, available: 4 })
        ));
        assert!(randomized_svd(&op, 0, 2, 0).is_err());
        assert!(randomized_svd(&op, 2, 0, 0).is_err());
    }
}
