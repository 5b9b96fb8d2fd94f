//! Collision kernels on the discrete ordinates.
//!
//! A kernel is represented at each position by a matrix `K` with
//! `K[j][l] = k(x, v_j, v_l)`; the gain term is `Σ_l K[j][l] w_l u_l` and the
//! loss rate of ordinate `j` is `Σ_l K[l][j] w_l`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use super::ordinates::Ordinates;
use crate::error::{Error, Result};

type Sigma = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Kind {
    /// `k = σ(x)/ε`.
    Isotropic { sigma: Sigma, epsilon: f64 },
    /// `k = (1/ε₁)(1.1 + cos 4πx)/(1.1 + sin(2πx/ε₂))`.
    Heterogeneous { eps1: f64, eps2: f64 },
    /// Henyey–Greenstein phase function scaled by `1/ε`.
    HenyeyGreenstein { g: f64, epsilon: f64 },
}

#[derive(Clone)]
pub struct CollisionKernel {
    label: String,
    kind: Kind,
}

impl fmt::Debug for CollisionKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CollisionKernel").field("label", &self.label).finish()
    }
}

fn check_epsilon(e: f64) -> Result<()> {
    if e > 0.0 && e.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("epsilon {e} must be positive")))
    }
}

impl CollisionKernel {
    /// Isotropic scattering with constant cross-section.
    pub fn isotropic(sigma: f64, epsilon: f64) -> Result<Self> {
        if !(sigma >= 0.0) {
            return Err(Error::InvalidParameter(format!("sigma {sigma} must be nonnegative")));
        }
        check_epsilon(epsilon)?;
        Ok(Self {
            label: "isotropic".into(),
            kind: Kind::Isotropic {
                sigma: Arc::new(move |_| sigma),
                epsilon,
            },
        })
    }

    /// Isotropic scattering with a position-dependent cross-section.
    pub fn isotropic_with(label: &str, epsilon: f64, sigma: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        check_epsilon(epsilon)?;
        Ok(Self {
            label: label.into(),
            kind: Kind::Isotropic {
                sigma: Arc::new(sigma),
                epsilon,
            },
        })
    }

    pub fn heterogeneous(eps1: f64, eps2: f64) -> Result<Self> {
        check_epsilon(eps1)?;
        check_epsilon(eps2)?;
        Ok(Self {
            label: "fig7".into(),
            kind: Kind::Heterogeneous { eps1, eps2 },
        })
    }

    pub fn henyey_greenstein(g: f64, epsilon: f64) -> Result<Self> {
        if !(g.abs() < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "Henyey-Greenstein anisotropy |g| = {} must be below 1",
                g.abs()
            )));
        }
        check_epsilon(epsilon)?;
        Ok(Self {
            label: "henyey_greenstein".into(),
            kind: Kind::HenyeyGreenstein { g, epsilon },
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// True when the kernel matrix does not depend on position.
    pub fn is_uniform(&self) -> bool {
        matches!(self.kind, Kind::HenyeyGreenstein { .. })
    }

    /// Scalar cross-section for kernels independent of velocity.
    pub fn sigma(&self, x: f64) -> Option<f64> {
        match &self.kind {
            Kind::Isotropic { sigma, epsilon } => Some(sigma(x) / epsilon),
            Kind::Heterogeneous { eps1, eps2 } => {
                Some((1.1 + (4.0 * PI * x).cos()) / (1.1 + (2.0 * PI * x / eps2).sin()) / eps1)
            }
            Kind::HenyeyGreenstein { .. } => None,
        }
    }

    /// Kernel matrix at position `x`.
    pub fn matrix(&self, x: f64, ords: &Ordinates) -> Result<DMatrix<f64>> {
        let n = ords.len();
        match &self.kind {
            Kind::HenyeyGreenstein { g, epsilon } => {
                Ok(henyey_greenstein_matrix(*g, ords) / *epsilon)
            }
            _ => {
                let s = self.sigma(x).expect("velocity-independent kernel");
                if !(s >= 0.0) || !s.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "scattering cross-section {s} at x = {x}"
                    )));
                }
                Ok(DMatrix::from_element(n, n, s))
            }
        }
    }
}

/// Henyey–Greenstein phase matrix `p(v_j, v_l) = (1 − g²)/(1 + g² − 2g v_j v_l)^{3/2}`
/// scaled symmetrically, `K = D p D`, so that every row and column
/// integrates to one under the ordinate quadrature.
pub fn henyey_greenstein_matrix(g: f64, ords: &Ordinates) -> DMatrix<f64> {
    let n = ords.len();
    let v = &ords.nodes;
    let w = &ords.weights;
    let p = DMatrix::from_fn(n, n, |j, l| {
        (1.0 - g * g) / (1.0 + g * g - 2.0 * g * v[j] * v[l]).powf(1.5)
    });
    let mut d = vec![1.0; n];
    for _ in 0..10_000 {
        let mut change = 0.0_f64;
        for j in 0..n {
            let s: f64 = (0..n).map(|l| p[(j, l)] * w[l] * d[l]).sum();
            let next = (d[j] / s).sqrt();
            change = change.max((next - d[j]).abs() / next);
            d[j] = next;
        }
        if change < 1e-16 {
            break;
        }
    }
    DMatrix::from_fn(n, n, |j, l| d[j] * p[(j, l)] * d[l])
}
