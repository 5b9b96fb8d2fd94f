use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Thin singular value decomposition `M ≈ U diag(s) Vᵀ`.
///
/// `s` is sorted nonincreasing; `u` and `v` have orthonormal columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdTriple {
    pub u: DMatrix<f64>,
    pub s: DVector<f64>,
    pub v: DMatrix<f64>,
}

impl SvdTriple {
    pub fn rank(&self) -> usize {
        self.s.len()
    }

    /// Dense `U diag(s) Vᵀ`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut us = self.u.clone();
        for (j, sigma) in self.s.iter().enumerate() {
            us.column_mut(j).scale_mut(*sigma);
        }
        us * self.v.transpose()
    }

    /// `U diag(s) Vᵀ x` without forming the product.
    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        let coeffs = self.v.tr_mul(x).component_mul(&self.s);
        &self.u * coeffs
    }

    /// Keeps the leading `k` singular triplets.
    pub fn truncate(&self, k: usize) -> SvdTriple {
        let k = k.min(self.rank());
        SvdTriple {
            u: self.u.columns(0, k).into_owned(),
            s: self.s.rows(0, k).into_owned(),
            v: self.v.columns(0, k).into_owned(),
        }
    }
}

/// Convergence thresholds tried in turn by [`thin_svd`].
///
/// nalgebra's bidiagonal QR occasionally stops on an inaccurate factorization
/// at its default threshold (seen on triangular factors of a few hundred
/// columns); a slightly looser threshold then converges properly.
const SVD_THRESHOLDS: [f64; 4] = [f64::EPSILON, 1e-15, 4e-15, 1e-14];

fn sorted_svd(m: &DMatrix<f64>, eps: f64) -> Option<SvdTriple> {
    let (rows, cols) = m.shape();
    let k = rows.min(cols);
    let svd = m.clone().try_svd(true, true, eps, 0)?;
    let u = svd.u?;
    let v_t = svd.v_t?;
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    Some(SvdTriple {
        u: DMatrix::from_fn(rows, k, |i, j| u[(i, order[j])]),
        s: DVector::from_fn(k, |j, _| svd.singular_values[order[j]]),
        v: DMatrix::from_fn(cols, k, |i, j| v_t[(order[j], i)]),
    })
}

/// Thin SVD with singular values sorted nonincreasing.
///
/// Each factorization is checked against `m`; if the reconstruction error
/// exceeds `√k · 1e-13 · max|m|`, the next threshold in `SVD_THRESHOLDS` is
/// tried and the most accurate attempt is kept.
pub fn thin_svd(m: &DMatrix<f64>) -> SvdTriple {
    let (rows, cols) = m.shape();
    let k = rows.min(cols);
    if k == 0 {
        return SvdTriple {
            u: DMatrix::zeros(rows, 0),
            s: DVector::zeros(0),
            v: DMatrix::zeros(cols, 0),
        };
    }
    let scale = m.amax();
    let accept = (k as f64).sqrt() * 1e-13 * scale;
    let mut best: Option<(f64, SvdTriple)> = None;
    for eps in SVD_THRESHOLDS {
        let Some(svd) = sorted_svd(m, eps) else { continue };
        let err = (svd.reconstruct() - m).amax();
        if err <= accept {
            return svd;
        }
        if best.as_ref().is_none_or(|(e, _)| err < *e) {
            best = Some((err, svd));
        }
    }
    best.expect("SVD iteration did not converge").1
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    thin_svd(m).s[0]
}

/// Relative pivot threshold below which a column counts as dependent.
const PIVOT_TOLERANCE: f64 = 1e-12;

/// Orthonormal basis of `range(M)` by Gram-Schmidt with one
/// reorthogonalization pass.
///
/// Columns whose residual norm falls below `1e-12 ×` the largest column norm
/// are dropped, so a rank-deficient input yields fewer columns than it has.
pub fn qr_orthonormalize(m: &DMatrix<f64>) -> DMatrix<f64> {
    let rows = m.nrows();
    let largest = m
        .column_iter()
        .map(|c| c.norm())
        .fold(0.0_f64, f64::max);
    if largest == 0.0 {
        return DMatrix::zeros(rows, 0);
    }
    let threshold = PIVOT_TOLERANCE * largest;
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(m.ncols());
    for col in m.column_iter() {
        let mut w = col.into_owned();
        for _ in 0..2 {
            for q in &basis {
                let proj = q.dot(&w);
                w.axpy(-proj, q, 1.0);
            }
        }
        let norm = w.norm();
        if norm > threshold {
            basis.push(w / norm);
        }
    }
    if basis.is_empty() {
        DMatrix::zeros(rows, 0)
    } else {
        DMatrix::from_columns(&basis)
    }
}

/// Householder `Q` factor with exactly `min(rows, cols)` orthonormal columns,
/// whether or not `m` has full column rank.
pub fn orthonormal_basis(m: &DMatrix<f64>) -> DMatrix<f64> {
    m.clone().qr().q()
}

/// Numerical τ-rank: the number of singular values strictly above `tau`.
pub fn numerical_rank(s: &[f64], tau: f64) -> usize {
    s.iter().filter(|&&sigma| sigma > tau).count()
}

/// Largest principal angle between `range(a)` and `range(b)`, in radians.
///
/// Angles are measured from the lower-dimensional subspace into the larger
/// one. Small angles are taken from the sine (projection residual) and large
/// ones from the cosine (smallest singular value of `Q_aᵀ Q_b`) to stay
/// accurate across `[0, π/2]`.
pub fn subspace_angle(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    if a.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch {
            what: "subspace row count",
            expected: a.nrows(),
            got: b.nrows(),
        });
    }
    let qa = qr_orthonormalize(a);
    let qb = qr_orthonormalize(b);
    if qa.ncols() == 0 || qb.ncols() == 0 {
        return Err(Error::DegenerateSubspace("zero matrix has no range"));
    }
    let (small, large) = if qa.ncols() <= qb.ncols() {
        (&qa, &qb)
    } else {
        (&qb, &qa)
    };
    let cross = large.tr_mul(small);
    let residual = small - large * &cross;
    let sine = spectral_norm(&residual).min(1.0);
    if sine <= std::f64::consts::FRAC_1_SQRT_2 {
        Ok(sine.asin())
    } else {
        let cosine = thin_svd(&cross).s.min().clamp(0.0, 1.0);
        Ok(cosine.acos())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::gaussian_matrix;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn max_abs(m: &DMatrix<f64>) -> f64 {
        m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
    }

    #[test]
    fn orthonormalizing_identity_is_identity() {
        let q = qr_orthonormalize(&DMatrix::identity(3, 3));
        for j in 0..3 {
            assert!((q[(j, j)].abs() - 1.0).abs() < 1e-15);
        }
        assert!(max_abs(&(q.abs() - DMatrix::identity(3, 3))) < 1e-15);
    }

    #[test]
    fn dependent_column_is_dropped() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 1.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
        assert_eq!(qr_orthonormalize(&m).ncols(), 2);
    }

    #[test]
    fn random_columns_are_orthonormal() {
        let m = gaussian_matrix(50, 10, 4).unwrap();
        let q = qr_orthonormalize(&m);
        assert_eq!(q.ncols(), 10);
        let defect = q.tr_mul(&q) - DMatrix::identity(10, 10);
        assert!(max_abs(&defect) <= 1e-12);
    }

    #[test]
    fn svd_of_diagonal() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 3.0, 2.0]));
        let svd = thin_svd(&m);
        assert_eq!(svd.s.as_slice(), &[3.0, 2.0, 1.0]);
    }

    #[test]
    fn svd_of_zero_matrix() {
        let svd = thin_svd(&DMatrix::zeros(4, 3));
        assert_eq!(svd.s.len(), 3);
        assert!(svd.s.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn svd_reconstructs_random_matrix() {
        for (r, c, seed) in [(20, 8, 1), (8, 20, 2)] {
            let m = gaussian_matrix(r, c, seed).unwrap();
            let svd = thin_svd(&m);
            let err = spectral_norm(&(&m - svd.reconstruct()));
            assert!(err <= 1e-10 * svd.s[0], "error {err}");
            assert!(svd.s.as_slice().windows(2).all(|w| w[0] >= w[1]));
            let k = svd.rank();
            assert!(max_abs(&(svd.u.tr_mul(&svd.u) - DMatrix::identity(k, k))) < 1e-10);
            assert!(max_abs(&(svd.v.tr_mul(&svd.v) - DMatrix::identity(k, k))) < 1e-10);
        }
    }

    #[test]
    fn numerical_rank_counts() {
        assert_eq!(numerical_rank(&[3.0, 2.0, 1.0], 1.5), 2);
        assert_eq!(numerical_rank(&[1.0, 1.0, 1.0], 0.0), 3);
        assert_eq!(numerical_rank(&[1.0, 1e-3, 1e-6], 1e-4), 2);
        assert_eq!(numerical_rank(&[1.0, 0.0], 0.0), 1);
    }

    #[test]
    fn angle_between_identical_subspaces_is_zero() {
        let a = gaussian_matrix(10, 3, 9).unwrap();
        assert!(subspace_angle(&a, &a).unwrap().abs() <= 1e-8);
    }

    #[test]
    fn orthogonal_lines_are_perpendicular() {
        let e1 = DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]);
        let e2 = DMatrix::from_column_slice(3, 1, &[0.0, 1.0, 0.0]);
        assert!((subspace_angle(&e1, &e2).unwrap() - FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn tilted_plane_is_at_quarter_turn() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let a = DMatrix::from_column_slice(3, 2, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let b = DMatrix::from_column_slice(3, 2, &[1.0, 0.0, 0.0, 0.0, s, s]);
        assert!((subspace_angle(&a, &b).unwrap() - FRAC_PI_4).abs() < 1e-12);
    }

    #[test]
    fn zero_input_is_degenerate() {
        let a = DMatrix::zeros(4, 2);
        let b = gaussian_matrix(4, 2, 1).unwrap();
        assert!(matches!(
            subspace_angle(&a, &b),
            Err(Error::DegenerateSubspace(_))
        ));
    }
}
