//! Common interface of the fine-grid local solvers.
//!
//! A local problem maps boundary data (Dirichlet traces for the elliptic
//! equation, incoming traces for transport) to lattice values on its patch.
//! Lattice vectors are node-major with `components()` values per node.

use std::collections::{HashMap, HashSet};

use nalgebra::DVector;

use crate::error::Result;
use crate::linalg::LinearOperator;
use crate::partition::Grid;
use crate::rte::Ordinates;

pub trait LocalProblem: Sync {
    fn node_count(&self) -> usize;

    /// Values per lattice node.
    fn components(&self) -> usize;

    /// `(local node, component)` of each boundary datum, in datum order.
    fn boundary_sites(&self) -> &[(usize, usize)];

    fn boundary_len(&self) -> usize {
        self.boundary_sites().len()
    }

    fn lattice_len(&self) -> usize {
        self.node_count() * self.components()
    }

    /// Solves the homogeneous local problem with the given boundary data and
    /// returns every lattice value.
    fn solve(&self, boundary: &[f64]) -> Result<Vec<f64>>;

    /// Euclidean transpose of [`LocalProblem::solve`].
    fn solve_transpose(&self, lattice: &[f64]) -> Result<Vec<f64>>;

    /// Number of (forward, transpose) fine solves performed so far.
    fn solve_counts(&self) -> (usize, usize);
}

impl<P: LocalProblem + ?Sized> LocalProblem for &P {
    fn node_count(&self) -> usize {
        (**self).node_count()
    }
    fn components(&self) -> usize {
        (**self).components()
    }
    fn boundary_sites(&self) -> &[(usize, usize)] {
        (**self).boundary_sites()
    }
    fn solve(&self, boundary: &[f64]) -> Result<Vec<f64>> {
        (**self).solve(boundary)
    }
    fn solve_transpose(&self, lattice: &[f64]) -> Result<Vec<f64>> {
        (**self).solve_transpose(lattice)
    }
    fn solve_counts(&self) -> (usize, usize) {
        (**self).solve_counts()
    }
}

/// Lattice entries on the given nodes that are not boundary data.
pub fn confined_targets<P: LocalProblem + ?Sized>(problem: &P, nodes: &[usize]) -> Vec<usize> {
    let c = problem.components();
    let sites: HashSet<(usize, usize)> = problem.boundary_sites().iter().copied().collect();
    let mut out = Vec::new();
    for &l in nodes {
        for k in 0..c {
            if !sites.contains(&(l, k)) {
                out.push(l * c + k);
            }
        }
    }
    out
}

/// The local solution operator confined to a set of lattice entries: boundary
/// data in, solution values on `targets` out.
pub struct ConfinedOperator<P> {
    problem: P,
    targets: Vec<usize>,
}

impl<P: LocalProblem> ConfinedOperator<P> {
    pub fn new(problem: P, targets: Vec<usize>) -> Self {
        Self { problem, targets }
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn problem(&self) -> &P {
        &self.problem
    }
}

impl<P: LocalProblem> LinearOperator for ConfinedOperator<P> {
    fn domain_dim(&self) -> usize {
        self.problem.boundary_len()
    }

    fn range_dim(&self) -> usize {
        self.targets.len()
    }

    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        let u = self
            .problem
            .solve(x.as_slice())
            .expect("local solve on a factorized problem");
        DVector::from_iterator(self.targets.len(), self.targets.iter().map(|&t| u[t]))
    }

    fn apply_adjoint(&self, y: &DVector<f64>) -> DVector<f64> {
        assert_eq!(y.len(), self.targets.len());
        let mut lattice = vec![0.0; self.problem.lattice_len()];
        for (&t, &v) in self.targets.iter().zip(y.iter()) {
            lattice[t] = v;
        }
        let b = self
            .problem
            .solve_transpose(&lattice)
            .expect("transpose solve on a factorized problem");
        DVector::from_vec(b)
    }
}

/// Prescribed values on the global boundary, as global lattice entries
/// (`node · components + component`).
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryData {
    pub components: usize,
    pub entries: Vec<usize>,
    pub values: Vec<f64>,
}

impl BoundaryData {
    /// Dirichlet data sampled from `f` on the grid boundary, in
    /// [`Grid::boundary_nodes`] order.
    pub fn dirichlet(grid: &Grid, f: impl Fn(&[f64]) -> f64) -> Self {
        let entries = grid.boundary_nodes();
        let values = entries.iter().map(|&n| f(&grid.coords(n))).collect();
        Self { components: 1, entries, values }
    }

    pub fn dirichlet_values(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        let entries = grid.boundary_nodes();
        crate::error::check_len("boundary values", entries.len(), values.len())?;
        Ok(Self { components: 1, entries, values })
    }

    /// Incoming transport data on a 1D grid: `left(v)` for `v > 0` at the
    /// left end, then `right(v)` for `v < 0` at the right end.
    pub fn incoming(grid: &Grid, ords: &Ordinates, left: impl Fn(f64) -> f64, right: impl Fn(f64) -> f64) -> Self {
        let nv = ords.len();
        let last = grid.node_count() - 1;
        let mut entries = Vec::new();
        let mut values = Vec::new();
        for (j, &v) in ords.nodes.iter().enumerate() {
            if v > 0.0 {
                entries.push(j);
                values.push(left(v));
            }
        }
        for (j, &v) in ords.nodes.iter().enumerate() {
            if v < 0.0 {
                entries.push(last * nv + j);
                values.push(right(v));
            }
        }
        Self { components: nv, entries, values }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn lookup(&self) -> HashMap<usize, usize> {
        self.entries.iter().enumerate().map(|(k, &e)| (e, k)).collect()
    }

    pub fn scaled_sum(&self, a: f64, other: &Self, b: f64) -> Self {
        let values = self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect();
        Self { values, ..self.clone() }
    }
}
