//! Vertex-centred five-point discretization of `−∇·(a ∇u) = f` on a box with
//! Dirichlet data on the box boundary.

use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::DMatrix;

use super::media::Media;
use crate::error::{check_len, Error, Result};
use crate::linalg::{BandCholesky, BandMatrix};
use crate::local::LocalProblem;
use crate::partition::{Grid, Partition};

/// Factorized local elliptic solver on a box of lattice nodes.
#[derive(Debug)]
pub struct EllipticSolver {
    grid: Grid,
    ring: Vec<usize>,
    inner: Vec<usize>,
    /// Unknown index of each local node, `usize::MAX` on the ring.
    unknown: Vec<usize>,
    /// Owned-node mask used to validate adjoint sources.
    support: Vec<bool>,
    a: Vec<f64>,
    a_min: f64,
    matrix: BandMatrix,
    factor: BandCholesky,
    /// Per unknown: (ring position, coupling coefficient).
    coupling: Vec<Vec<(usize, f64)>>,
    sites: Vec<(usize, usize)>,
    forward: AtomicUsize,
    transpose: AtomicUsize,
}

fn harmonic(a: f64, b: f64) -> f64 {
    2.0 / (1.0 / a + 1.0 / b)
}

impl EllipticSolver {
    /// Solver on the whole grid; the ring is the global boundary.
    pub fn new(grid: &Grid, media: &Media) -> Result<Self> {
        let support = vec![true; grid.node_count()];
        Self::build(grid.clone(), media, support)
    }

    /// Solver on patch `m`, with sources for the adjoint restricted to the
    /// patch's owned nodes.
    pub fn for_patch(partition: &Partition, m: usize, media: &Media) -> Result<Self> {
        let patch = &partition.patches[m];
        let grid = patch.local_grid(&partition.grid);
        let mut support = vec![false; patch.node_count()];
        for &l in &patch.interior {
            support[l] = true;
        }
        Self::build(grid, media, support)
    }

    fn build(grid: Grid, media: &Media, support: Vec<bool>) -> Result<Self> {
        let n = grid.node_count();
        let shape = grid.shape();
        if shape.iter().any(|&s| s < 3) {
            return Err(Error::InvalidParameter(format!(
                "local box {shape:?} has no interior nodes"
            )));
        }
        let ring = grid.boundary_nodes();
        let mut ring_pos = vec![usize::MAX; n];
        for (k, &r) in ring.iter().enumerate() {
            ring_pos[r] = k;
        }
        let inner: Vec<usize> = (0..n).filter(|&l| ring_pos[l] == usize::MAX).collect();
        let mut unknown = vec![usize::MAX; n];
        for (k, &l) in inner.iter().enumerate() {
            unknown[l] = k;
        }

        let mut a = Vec::with_capacity(n);
        let mut a_min = f64::INFINITY;
        for l in 0..n {
            let p = grid.coords(l);
            let v = media.value(&p);
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::MediaNotPositive {
                    value: v,
                    x: p[0],
                    y: p.get(1).copied().unwrap_or(0.0),
                });
            }
            a_min = a_min.min(v);
            a.push(v);
        }

        let bandwidth = if grid.dim() == 1 { 1 } else { shape[0] - 2 };
        let mut matrix = BandMatrix::zeros(inner.len(), bandwidth, bandwidth);
        let mut coupling = vec![Vec::new(); inner.len()];
        for (k, &l) in inner.iter().enumerate() {
            for (q, h) in neighbours(&grid, l) {
                let c = harmonic(a[l], a[q]) / (h * h);
                matrix.add(k, k, c);
                if unknown[q] != usize::MAX {
                    matrix.add(k, unknown[q], -c);
                } else {
                    coupling[k].push((ring_pos[q], c));
                }
            }
        }
        let factor = matrix.factor_cholesky()?;
        let sites = ring.iter().map(|&r| (r, 0)).collect();
        Ok(Self {
            grid,
            ring,
            inner,
            unknown,
            support,
            a,
            a_min,
            matrix,
            factor,
            coupling,
            sites,
            forward: AtomicUsize::new(0),
            transpose: AtomicUsize::new(0),
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Local indices of the boundary ring, in boundary-datum order.
    pub fn ring(&self) -> &[usize] {
        &self.ring
    }

    /// Local indices of the unknowns, in unknown order.
    pub fn inner(&self) -> &[usize] {
        &self.inner
    }

    pub fn a_min(&self) -> f64 {
        self.a_min
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.a
    }

    /// The assembled operator on the unknowns.
    pub fn matrix(&self) -> &BandMatrix {
        &self.matrix
    }

    /// Right-hand-side contribution of boundary data to each unknown.
    pub fn boundary_load(&self, boundary: &[f64]) -> Vec<f64> {
        self.coupling
            .iter()
            .map(|row| row.iter().map(|&(r, c)| c * boundary[r]).sum())
            .collect()
    }

    /// Solves with Dirichlet data on the ring and a source on the unknowns;
    /// returns values on every local node.
    pub fn solve_dirichlet(&self, boundary: &[f64], source: &[f64]) -> Result<Vec<f64>> {
        check_len("boundary values", self.ring.len(), boundary.len())?;
        check_len("source", self.inner.len(), source.len())?;
        self.forward.fetch_add(1, Ordering::Relaxed);
        let mut rhs = self.boundary_load(boundary);
        for (r, f) in rhs.iter_mut().zip(source) {
            *r += f;
        }
        self.factor.solve_in_place(&mut rhs);
        let mut u = vec![0.0; self.grid.node_count()];
        for (&l, v) in self.inner.iter().zip(rhs) {
            u[l] = v;
        }
        for (&l, &b) in self.ring.iter().zip(boundary) {
            u[l] = b;
        }
        Ok(u)
    }

    /// Relative residual of the discrete equations for a full local field.
    pub fn residual(&self, u: &[f64], source: &[f64]) -> f64 {
        let boundary: Vec<f64> = self.ring.iter().map(|&l| u[l]).collect();
        let interior: Vec<f64> = self.inner.iter().map(|&l| u[l]).collect();
        let au = self.matrix.matvec(&interior);
        let load = self.boundary_load(&boundary);
        let mut num = 0.0_f64;
        let mut den = 0.0_f64;
        for k in 0..au.len() {
            num = num.max((au[k] - load[k] - source[k]).abs());
            den = den.max(au[k].abs()).max(load[k].abs()).max(source[k].abs());
        }
        if den == 0.0 {
            num
        } else {
            num / den
        }
    }

    /// Quadrature weight of an interior node (cell area, or length in 1D).
    pub fn interior_weight(&self) -> f64 {
        self.grid.axes.iter().map(|a| a.h()).product()
    }

    /// Arc-length weight of each boundary node in datum order.
    pub fn boundary_weights(&self) -> Vec<f64> {
        if self.grid.dim() == 1 {
            return vec![1.0; 2];
        }
        let (hx, hy) = (self.grid.axes[0].h(), self.grid.axes[1].h());
        let cells = [self.grid.axes[0].cells, self.grid.axes[1].cells];
        self.ring
            .iter()
            .map(|&l| {
                let ij = self.grid.multi_index(l);
                let on_x = ij[0] == 0 || ij[0] == cells[0];
                let on_y = ij[1] == 0 || ij[1] == cells[1];
                match (on_x, on_y) {
                    (true, true) => 0.5 * (hx + hy),
                    (true, false) => hy,
                    _ => hx,
                }
            })
            .collect()
    }

    /// Adjoint of the boundary-to-interior solution map in the weighted
    /// pairing (interior: [`interior_weight`](Self::interior_weight),
    /// boundary: [`boundary_weights`](Self::boundary_weights)). Solves
    /// `∇·(a∇h) = g` with zero boundary values and returns the outward flux
    /// `a ∂h/∂n` at every boundary node.
    pub fn solve_adjoint_flux(&self, g: &[f64]) -> Result<Vec<f64>> {
        check_len("adjoint source", self.inner.len(), g.len())?;
        for (&l, &v) in self.inner.iter().zip(g) {
            if v != 0.0 && !self.support[l] {
                return Err(Error::SourceOutsideInterior { index: l });
            }
        }
        self.transpose.fetch_add(1, Ordering::Relaxed);
        // h = −A⁻¹ g solves the sourced problem.
        let mut h: Vec<f64> = g.iter().map(|v| -v).collect();
        self.factor.solve_in_place(&mut h);
        let weights = self.boundary_weights();
        let mut flux = vec![0.0; self.ring.len()];
        for (k, row) in self.coupling.iter().enumerate() {
            for &(r, c) in row {
                flux[r] -= c * h[k];
            }
        }
        let w = self.interior_weight();
        for (f, ds) in flux.iter_mut().zip(&weights) {
            *f *= w / ds;
        }
        Ok(flux)
    }

    /// Interior-node × boundary-node matrix whose column `n` is the local
    /// solution for a unit value at boundary node `n`.
    pub fn greens_matrix(&self) -> Result<DMatrix<f64>> {
        let nb = self.ring.len();
        let zero = vec![0.0; self.inner.len()];
        let mut g = DMatrix::zeros(self.inner.len(), nb);
        let mut e = vec![0.0; nb];
        for n in 0..nb {
            e[n] = 1.0;
            let u = self.solve_dirichlet(&e, &zero)?;
            e[n] = 0.0;
            for (k, &l) in self.inner.iter().enumerate() {
                g[(k, n)] = u[l];
            }
        }
        Ok(g)
    }

    /// Position of local node `l` among the unknowns.
    pub fn unknown_index(&self, l: usize) -> Option<usize> {
        let k = self.unknown[l];
        (k != usize::MAX).then_some(k)
    }
}

/// Neighbours of a node with the spacing to each.
fn neighbours(grid: &Grid, l: usize) -> Vec<(usize, f64)> {
    let ij = grid.multi_index(l);
    let mut out = Vec::with_capacity(4);
    for (d, ax) in grid.axes.iter().enumerate() {
        let h = ax.h();
        if ij[d] > 0 {
            let mut q = ij.clone();
            q[d] -= 1;
            out.push((grid.index(&q), h));
        }
        if ij[d] < ax.cells {
            let mut q = ij.clone();
            q[d] += 1;
            out.push((grid.index(&q), h));
        }
    }
    out
}

impl LocalProblem for EllipticSolver {
    fn node_count(&self) -> usize {
        self.grid.node_count()
    }

    fn components(&self) -> usize {
        1
    }

    fn boundary_sites(&self) -> &[(usize, usize)] {
        &self.sites
    }

    fn solve(&self, boundary: &[f64]) -> Result<Vec<f64>> {
        let zero = vec![0.0; self.inner.len()];
        self.solve_dirichlet(boundary, &zero)
    }

    fn solve_transpose(&self, lattice: &[f64]) -> Result<Vec<f64>> {
        check_len("lattice values", self.grid.node_count(), lattice.len())?;
        self.transpose.fetch_add(1, Ordering::Relaxed);
        let mut y: Vec<f64> = self.inner.iter().map(|&l| lattice[l]).collect();
        self.factor.solve_in_place(&mut y);
        let mut out: Vec<f64> = self.ring.iter().map(|&l| lattice[l]).collect();
        for (k, row) in self.coupling.iter().enumerate() {
            for &(r, c) in row {
                out[r] += c * y[k];
            }
        }
        Ok(out)
    }

    fn solve_counts(&self) -> (usize, usize) {
        (
            self.forward.load(Ordering::Relaxed),
            self.transpose.load(Ordering::Relaxed),
        )
    }
}
