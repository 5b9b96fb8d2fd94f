//! Upwind discrete-ordinates solver for the slab transport equation
//! `v ∂ₓu − S[u] = −f` on an interval, with incoming data at both ends.
//!
//! Lattice entry `i·n_v + j` holds `u(x_i, v_j)`. Rows belonging to incoming
//! pairs (left end with `v > 0`, right end with `v < 0`) are identity rows.

use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::DMatrix;

use super::kernel::CollisionKernel;
use super::ordinates::Ordinates;
use crate::error::{check_len, Error, Result};
use crate::linalg::{BandLu, BandMatrix};
use crate::local::LocalProblem;
use crate::partition::{Axis, Partition};

#[derive(Debug)]
pub struct RteSolver {
    x: Vec<f64>,
    dx: f64,
    ords: Ordinates,
    /// Kernel matrix per node (a single shared matrix when uniform).
    kernels: Vec<DMatrix<f64>>,
    matrix: BandMatrix,
    lu: BandLu,
    sites: Vec<(usize, usize)>,
    is_incoming: Vec<bool>,
    support: Vec<bool>,
    forward: AtomicUsize,
    transpose: AtomicUsize,
}

impl RteSolver {
    /// Solver on the whole interval.
    pub fn new(axis: Axis, ords: &Ordinates, kernel: &CollisionKernel) -> Result<Self> {
        Self::build(axis, ords, kernel, vec![true; axis.nodes()])
    }

    /// Solver on patch `m` of a 1D partition; adjoint sources are restricted
    /// to the patch's owned nodes.
    pub fn for_patch(partition: &Partition, m: usize, ords: &Ordinates, kernel: &CollisionKernel) -> Result<Self> {
        if partition.grid.dim() != 1 {
            return Err(Error::InvalidParameter("transport runs on 1D grids".into()));
        }
        let patch = &partition.patches[m];
        let axis = patch.local_grid(&partition.grid).axes[0];
        let mut support = vec![false; patch.node_count()];
        for &l in &patch.interior {
            support[l] = true;
        }
        Self::build(axis, ords, kernel, support)
    }

    fn build(axis: Axis, ords: &Ordinates, kernel: &CollisionKernel, support: Vec<bool>) -> Result<Self> {
        let nodes = axis.nodes();
        let nv = ords.len();
        let dx = axis.h();
        let x: Vec<f64> = (0..nodes).map(|i| axis.coord(i)).collect();
        let kernels = if kernel.is_uniform() {
            vec![kernel.matrix(x[0], ords)?]
        } else {
            x.iter().map(|&xi| kernel.matrix(xi, ords)).collect::<Result<_>>()?
        };

        let mut sites = Vec::new();
        for j in 0..nv {
            if ords.nodes[j] > 0.0 {
                sites.push((0, j));
            }
        }
        for j in 0..nv {
            if ords.nodes[j] < 0.0 {
                sites.push((nodes - 1, j));
            }
        }
        let mut is_incoming = vec![false; nodes * nv];
        for &(i, j) in &sites {
            is_incoming[i * nv + j] = true;
        }

        let w = &ords.weights;
        let mut matrix = BandMatrix::zeros(nodes * nv, nv, nv);
        for i in 0..nodes {
            let k = &kernels[if kernels.len() == 1 { 0 } else { i }];
            for j in 0..nv {
                let e = i * nv + j;
                if is_incoming[e] {
                    matrix.add(e, e, 1.0);
                    continue;
                }
                let v = ords.nodes[j];
                if v > 0.0 {
                    matrix.add(e, e, v / dx);
                    matrix.add(e, e - nv, -v / dx);
                } else {
                    matrix.add(e, e, -v / dx);
                    matrix.add(e, e + nv, v / dx);
                }
                let loss: f64 = (0..nv).map(|l| k[(l, j)] * w[l]).sum();
                matrix.add(e, e, loss);
                for l in 0..nv {
                    matrix.add(e, i * nv + l, -k[(j, l)] * w[l]);
                }
            }
        }
        let lu = matrix.factor_lu().map_err(|e| match e {
            Error::SingularMatrix { row } => Error::TransportSingular { row },
            other => other,
        })?;
        Ok(Self {
            x,
            dx,
            ords: ords.clone(),
            kernels,
            matrix,
            lu,
            sites,
            is_incoming,
            support,
            forward: AtomicUsize::new(0),
            transpose: AtomicUsize::new(0),
        })
    }

    pub fn positions(&self) -> &[f64] {
        &self.x
    }

    pub fn ordinates(&self) -> &Ordinates {
        &self.ords
    }

    /// Incoming pairs `(node, ordinate)` in datum order.
    pub fn incoming_sites(&self) -> &[(usize, usize)] {
        &self.sites
    }

    pub fn matrix(&self) -> &BandMatrix {
        &self.matrix
    }

    fn kernel_at(&self, i: usize) -> &DMatrix<f64> {
        &self.kernels[if self.kernels.len() == 1 { 0 } else { i }]
    }

    /// Collision term `S[u](x_i, ·)` for one node's ordinate values.
    pub fn collision(&self, i: usize, u: &[f64]) -> Vec<f64> {
        let k = self.kernel_at(i);
        let w = &self.ords.weights;
        let nv = w.len();
        (0..nv)
            .map(|j| {
                let gain: f64 = (0..nv).map(|l| k[(j, l)] * w[l] * u[l]).sum();
                let loss: f64 = (0..nv).map(|l| k[(l, j)] * w[l]).sum();
                gain - loss * u[j]
            })
            .collect()
    }

    fn rhs(&self, incoming: &[f64], source: &[f64]) -> Vec<f64> {
        let mut rhs: Vec<f64> = source.iter().map(|f| -f).collect();
        let nv = self.ords.len();
        for (&(i, j), &b) in self.sites.iter().zip(incoming) {
            rhs[i * nv + j] = b;
        }
        rhs
    }

    /// Solves with incoming data and a source on the lattice (source values
    /// at incoming pairs are ignored).
    pub fn solve_rte(&self, incoming: &[f64], source: &[f64]) -> Result<Vec<f64>> {
        check_len("incoming values", self.sites.len(), incoming.len())?;
        check_len("source", self.is_incoming.len(), source.len())?;
        self.forward.fetch_add(1, Ordering::Relaxed);
        let mut u = self.rhs(incoming, source);
        self.lu.solve_in_place(&mut u);
        Ok(u)
    }

    /// Relative residual of the discrete system for a lattice field.
    pub fn residual(&self, u: &[f64], incoming: &[f64], source: &[f64]) -> f64 {
        let au = self.matrix.matvec(u);
        let rhs = self.rhs(incoming, source);
        let mut num = 0.0_f64;
        let mut den = 0.0_f64;
        for (a, b) in au.iter().zip(&rhs) {
            num = num.max((a - b).abs());
            den = den.max(a.abs()).max(b.abs());
        }
        if den == 0.0 {
            num
        } else {
            num / den
        }
    }

    /// Quadrature weight `Δx·w_j` of each lattice entry.
    pub fn lattice_weights(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.is_incoming.len());
        for _ in 0..self.x.len() {
            out.extend(self.ords.weights.iter().map(|w| w * self.dx));
        }
        out
    }

    /// Boundary flux weight `|v_j| w_j` of each incoming pair.
    pub fn boundary_weights(&self) -> Vec<f64> {
        self.sites
            .iter()
            .map(|&(_, j)| self.ords.nodes[j].abs() * self.ords.weights[j])
            .collect()
    }

    /// Adjoint of the incoming-data-to-lattice map in the weighted pairings
    /// ([`lattice_weights`](Self::lattice_weights) and
    /// [`boundary_weights`](Self::boundary_weights)): the incoming trace of
    /// the adjoint transport solution with source `g` and zero outgoing data.
    pub fn solve_adjoint_rte(&self, g: &[f64]) -> Result<Vec<f64>> {
        check_len("adjoint source", self.is_incoming.len(), g.len())?;
        let nv = self.ords.len();
        for (e, &v) in g.iter().enumerate() {
            if v != 0.0 && !self.support[e / nv] {
                return Err(Error::SourceOutsideInterior { index: e });
            }
        }
        self.transpose.fetch_add(1, Ordering::Relaxed);
        let mut y: Vec<f64> = g.iter().zip(self.lattice_weights()).map(|(a, w)| a * w).collect();
        self.lu.solve_transpose_in_place(&mut y);
        Ok(self
            .sites
            .iter()
            .zip(self.boundary_weights())
            .map(|(&(i, j), d)| y[i * nv + j] / d)
            .collect())
    }

    /// Velocity average `½ Σ_j w_j u(x_i, v_j)` at every node.
    pub fn velocity_average(&self, u: &[f64]) -> Vec<f64> {
        let nv = self.ords.len();
        u.chunks(nv)
            .map(|c| 0.5 * c.iter().zip(&self.ords.weights).map(|(a, w)| a * w).sum::<f64>())
            .collect()
    }
}

impl LocalProblem for RteSolver {
    fn node_count(&self) -> usize {
        self.x.len()
    }

    fn components(&self) -> usize {
        self.ords.len()
    }

    fn boundary_sites(&self) -> &[(usize, usize)] {
        &self.sites
    }

    fn solve(&self, boundary: &[f64]) -> Result<Vec<f64>> {
        check_len("incoming values", self.sites.len(), boundary.len())?;
        self.forward.fetch_add(1, Ordering::Relaxed);
        let nv = self.ords.len();
        let mut u = vec![0.0; self.is_incoming.len()];
        for (&(i, j), &b) in self.sites.iter().zip(boundary) {
            u[i * nv + j] = b;
        }
        self.lu.solve_in_place(&mut u);
        Ok(u)
    }

    fn solve_transpose(&self, lattice: &[f64]) -> Result<Vec<f64>> {
        check_len("lattice values", self.is_incoming.len(), lattice.len())?;
        self.transpose.fetch_add(1, Ordering::Relaxed);
        let nv = self.ords.len();
        let mut y = lattice.to_vec();
        self.lu.solve_transpose_in_place(&mut y);
        Ok(self.sites.iter().map(|&(i, j)| y[i * nv + j]).collect())
    }

    fn solve_counts(&self) -> (usize, usize) {
        (
            self.forward.load(Ordering::Relaxed),
            self.transpose.load(Ordering::Relaxed),
        )
    }
}
