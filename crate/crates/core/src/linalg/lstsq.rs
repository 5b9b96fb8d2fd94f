//! Minimum-norm least squares through a QR reduction followed by an SVD.

use nalgebra::{DMatrix, DVector};

use super::decomp::thin_svd;
use crate::error::{check_len, Error, Result};

#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub solution: DVector<f64>,
    pub rank: usize,
    /// True when the system has fewer independent equations than unknowns,
    /// in which case `solution` is the minimum-norm minimizer.
    pub underdetermined: bool,
    pub residual_norm: f64,
    pub singular_values: Vec<f64>,
}

/// Solves `min ‖Ax − b‖₂` with the minimum-norm convention. Singular values
/// below `rcond · σ₁` are treated as zero; pass `None` for the default
/// `max(m, n) · ε`.
pub fn least_squares(a: &DMatrix<f64>, b: &DVector<f64>, rcond: Option<f64>) -> Result<LeastSquares> {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return Err(Error::EmptyMatrix { rows: m, cols: n });
    }
    check_len("right-hand side", m, b.len())?;
    let rcond = rcond.unwrap_or(m.max(n) as f64 * f64::EPSILON);

    // Tall systems are first reduced to the square triangular factor.
    let (reduced, rhs) = if m > n {
        let qr = a.clone().qr();
        let q = qr.q();
        (qr.r(), q.transpose() * b)
    } else {
        (a.clone(), b.clone())
    };
    let svd = thin_svd(&reduced);
    let s1 = svd.s.get(0).copied().unwrap_or(0.0);
    let cutoff = rcond * s1;
    let rank = svd.s.iter().filter(|&&s| s > cutoff && s > 0.0).count();

    let mut x = DVector::zeros(n);
    for i in 0..rank {
        let coef = svd.u.column(i).dot(&rhs) / svd.s[i];
        x.axpy(coef, &svd.v.column(i), 1.0);
    }
    let residual_norm = (a * &x - b).norm();
    Ok(LeastSquares {
        solution: x,
        rank,
        underdetermined: rank < n,
        residual_norm,
        singular_values: svd.s.iter().copied().collect(),
    })
}
