use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::{DMatrix, DVector};

use super::rng::gaussian_vector;
use crate::error::Result;

/// A linear map known through its action and the action of its transpose.
///
/// Implementations must be safe to call concurrently: the randomized SVD
/// issues its sketching applications in parallel. Both methods panic when the
/// argument length does not match the corresponding dimension.
pub trait LinearOperator: Sync {
    fn domain_dim(&self) -> usize;
    fn range_dim(&self) -> usize;
    fn apply(&self, x: &DVector<f64>) -> DVector<f64>;
    /// Euclidean transpose: `<apply(x), y> = <x, apply_adjoint(y)>`.
    fn apply_adjoint(&self, y: &DVector<f64>) -> DVector<f64>;
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn domain_dim(&self) -> usize {
        (**self).domain_dim()
    }
    fn range_dim(&self) -> usize {
        (**self).range_dim()
    }
    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        (**self).apply(x)
    }
    fn apply_adjoint(&self, y: &DVector<f64>) -> DVector<f64> {
        (**self).apply_adjoint(y)
    }
}

/// An explicit matrix viewed as an operator.
#[derive(Debug, Clone)]
pub struct DenseOperator(pub DMatrix<f64>);

impl LinearOperator for DenseOperator {
    fn domain_dim(&self) -> usize {
        self.0.ncols()
    }
    fn range_dim(&self) -> usize {
        self.0.nrows()
    }
    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.0 * x
    }
    fn apply_adjoint(&self, y: &DVector<f64>) -> DVector<f64> {
        self.0.tr_mul(y)
    }
}

/// Wraps an operator and counts forward and adjoint applications.
pub struct CountingOperator<O> {
    inner: O,
    forward: AtomicUsize,
    adjoint: AtomicUsize,
}

impl<O: LinearOperator> CountingOperator<O> {
    pub fn new(inner: O) -> Self {
        Self {
            inner,
            forward: AtomicUsize::new(0),
            adjoint: AtomicUsize::new(0),
        }
    }

    pub fn forward_count(&self) -> usize {
        self.forward.load(Ordering::SeqCst)
    }

    pub fn adjoint_count(&self) -> usize {
        self.adjoint.load(Ordering::SeqCst)
    }

    pub fn into_inner(self) -> O {
        self.inner
    }
}

impl<O: LinearOperator> LinearOperator for CountingOperator<O> {
    fn domain_dim(&self) -> usize {
        self.inner.domain_dim()
    }
    fn range_dim(&self) -> usize {
        self.inner.range_dim()
    }
    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        self.forward.fetch_add(1, Ordering::SeqCst);
        self.inner.apply(x)
    }
    fn apply_adjoint(&self, y: &DVector<f64>) -> DVector<f64> {
        self.adjoint.fetch_add(1, Ordering::SeqCst);
        self.inner.apply_adjoint(y)
    }
}

/// Largest relative violation of `<Ax, y> = <x, A^T y>` over `pairs` random
/// Gaussian pairs, each measured against `‖Ax‖‖y‖`.
pub fn adjoint_mismatch<O: LinearOperator + ?Sized>(op: &O, pairs: usize, seed: u64) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for t in 0..pairs as u64 {
        let x = gaussian_vector(op.domain_dim(), seed.wrapping_add(2 * t))?;
        let y = gaussian_vector(op.range_dim(), seed.wrapping_add(2 * t + 1))?;
        let ax = op.apply(&x);
        let aty = op.apply_adjoint(&y);
        let lhs = ax.dot(&y);
        let rhs = x.dot(&aty);
        let scale = (ax.norm() * y.norm()).max(x.norm() * aty.norm());
        if scale > 0.0 {
            worst = worst.max((lhs - rhs).abs() / scale);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::gaussian_matrix;

    #[test]
    fn dense_operator_is_its_own_transpose_pair() {
        let a = gaussian_matrix(7, 4, 3).unwrap();
        let op = DenseOperator(a);
        assert!(adjoint_mismatch(&op, 20, 11).unwrap() <= 1e-12);
    }

    #[test]
    fn counting_wrapper_counts() {
        let op = CountingOperator::new(DenseOperator(DMatrix::identity(3, 3)));
        let x = DVector::from_element(3, 1.0);
        op.apply(&x);
        op.apply(&x);
        op.apply_adjoint(&x);
        assert_eq!(op.forward_count(), 2);
        assert_eq!(op.adjoint_count(), 1);
    }
}
