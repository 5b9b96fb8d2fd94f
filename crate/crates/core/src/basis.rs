//! Random local bases and their global least-squares assembly.
//!
//! Offline, each patch solves its local problem for a handful of Gaussian
//! boundary data. Online, one coefficient vector per patch is chosen so that
//! local fields agree on overlaps and match the global boundary data; the
//! fields are then blended with the partition of unity.
//!
//! Two assemblies are provided. [`online_assemble`] treats every boundary
//! datum of every patch alike and fits the global data by weighted rows.
//! [`online_assemble_lifted`] pairs with [`offline_interface_basis`]: random
//! data is drawn only on interface sites (patch boundary inside the domain),
//! the known global data is carried by one local solve per patch, and
//! continuity rows are weighted by `χ_m χ_n`.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::linalg::{gaussian_matrix, least_squares};
use crate::local::{BoundaryData, LocalProblem};
use crate::partition::Partition;

/// Weight of boundary-data rows relative to continuity rows.
pub const BOUNDARY_WEIGHT: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisKind {
    Random,
    Full,
    /// Random data on interface sites only, zero on the global boundary.
    Interface,
}

#[derive(Debug, Clone)]
pub struct LocalBasis {
    pub patch: usize,
    /// Local solutions, one lattice vector per column.
    pub columns: DMatrix<f64>,
    /// Boundary data that produced each column.
    pub boundary_samples: DMatrix<f64>,
    pub kind: BasisKind,
    pub seed: Option<u64>,
}

impl LocalBasis {
    pub fn len(&self) -> usize {
        self.columns.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.ncols() == 0
    }
}

fn solve_columns<P: LocalProblem>(problem: &P, data: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let cols: Vec<Vec<f64>> = (0..data.ncols())
        .into_par_iter()
        .map(|i| problem.solve(data.column(i).as_slice()))
        .collect::<Result<_>>()?;
    let rows = problem.lattice_len();
    Ok(DMatrix::from_fn(rows, cols.len(), |r, c| cols[c][r]))
}

/// `k_m` local solutions with i.i.d. standard normal boundary data.
pub fn offline_random_basis<P: LocalProblem>(problem: &P, patch: usize, k_m: usize, seed: u64) -> Result<LocalBasis> {
    if k_m == 0 {
        return Err(Error::InvalidParameter("basis size must be at least 1".into()));
    }
    let omega = gaussian_matrix(problem.boundary_len(), k_m, seed)?;
    let columns = solve_columns(problem, &omega)?;
    Ok(LocalBasis {
        patch,
        columns,
        boundary_samples: omega,
        kind: BasisKind::Random,
        seed: Some(seed),
    })
}

/// One local solution per boundary datum (delta boundary data).
pub fn offline_full_basis<P: LocalProblem>(problem: &P, patch: usize) -> Result<LocalBasis> {
    let n = problem.boundary_len();
    let identity = DMatrix::identity(n, n);
    let columns = solve_columns(problem, &identity)?;
    Ok(LocalBasis {
        patch,
        columns,
        boundary_samples: identity,
        kind: BasisKind::Full,
        seed: None,
    })
}

/// Boundary-datum indices of patch `m` whose node lies inside the domain.
pub fn interface_sites<P: LocalProblem + ?Sized>(partition: &Partition, problem: &P, m: usize) -> Vec<usize> {
    let patch = &partition.patches[m];
    problem
        .boundary_sites()
        .iter()
        .enumerate()
        .filter(|(_, &(l, _))| !partition.grid.is_boundary(patch.nodes[l]))
        .map(|(i, _)| i)
        .collect()
}

/// `k_m` local solutions with i.i.d. standard normal data on the interface
/// sites of patch `m` and zero data on its global-boundary sites.
pub fn offline_interface_basis<P: LocalProblem>(
    partition: &Partition,
    problem: &P,
    m: usize,
    k_m: usize,
    seed: u64,
) -> Result<LocalBasis> {
    if k_m == 0 {
        return Err(Error::InvalidParameter("basis size must be at least 1".into()));
    }
    check_patch(partition, problem, m)?;
    let sites = interface_sites(partition, problem, m);
    let draws = gaussian_matrix(sites.len().max(1), k_m, seed)?;
    let mut omega = DMatrix::zeros(problem.boundary_len(), k_m);
    for (r, &i) in sites.iter().enumerate() {
        omega.row_mut(i).copy_from(&draws.row(r));
    }
    let columns = solve_columns(problem, &omega)?;
    Ok(LocalBasis {
        patch: m,
        columns,
        boundary_samples: omega,
        kind: BasisKind::Interface,
        seed: Some(seed),
    })
}

fn check_patch<P: LocalProblem + ?Sized>(partition: &Partition, problem: &P, m: usize) -> Result<()> {
    let expected = partition
        .patches
        .get(m)
        .ok_or_else(|| Error::InvalidParameter(format!("patch {m} out of range")))?
        .node_count();
    check_len("patch nodes", expected, problem.node_count())
}

#[derive(Debug, Clone)]
pub struct GlobalAssembly {
    pub coefficients: Vec<DVector<f64>>,
    /// `G_m c_m` for every patch.
    pub local_fields: Vec<Vec<f64>>,
    /// Blended global field.
    pub solution: Vec<f64>,
    /// Set when the stacked system is rank deficient and the minimum-norm
    /// coefficients were taken.
    pub underdetermined: bool,
    pub rank: usize,
    pub residual_norm: f64,
    /// Local fine solves performed online (lifting solves).
    pub online_solves: usize,
}

/// Stacked least-squares system: continuity rows on every pairwise overlap,
/// then weighted boundary rows.
fn assembly_system(partition: &Partition, bases: &[LocalBasis], data: &BoundaryData) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let c = data.components;
    let offsets: Vec<usize> = bases
        .iter()
        .scan(0, |acc, b| {
            let o = *acc;
            *acc += b.len();
            Some(o)
        })
        .collect();
    let unknowns: usize = bases.iter().map(LocalBasis::len).sum();

    let mut rows: Vec<(Vec<(usize, usize, f64)>, f64)> = Vec::new();
    for m in 0..partition.len() {
        for &n in &partition.patches[m].neighbors {
            if n <= m {
                continue;
            }
            for (_, lm, ln) in partition.shared_nodes(m, n) {
                for k in 0..c {
                    rows.push((vec![(m, lm * c + k, 1.0), (n, ln * c + k, -1.0)], 0.0));
                }
            }
        }
    }
    for (&e, &v) in data.entries.iter().zip(&data.values) {
        let (g, k) = (e / c, e % c);
        for (m, patch) in partition.patches.iter().enumerate() {
            if let Some(l) = patch.local_index(&partition.grid, g) {
                rows.push((vec![(m, l * c + k, BOUNDARY_WEIGHT)], BOUNDARY_WEIGHT * v));
            }
        }
    }

    let mut a = DMatrix::zeros(rows.len(), unknowns);
    let mut b = DVector::zeros(rows.len());
    for (r, (terms, rhs)) in rows.iter().enumerate() {
        for &(m, entry, w) in terms {
            for i in 0..bases[m].len() {
                a[(r, offsets[m] + i)] += w * bases[m].columns[(entry, i)];
            }
        }
        b[r] = *rhs;
    }
    Ok((a, b))
}

/// Chooses per-patch coefficients by least squares and blends the fields.
pub fn online_assemble(partition: &Partition, bases: &[LocalBasis], data: &BoundaryData) -> Result<GlobalAssembly> {
    if bases.len() != partition.len() {
        return Err(Error::DimensionMismatch {
            what: "local bases",
            expected: partition.len(),
            got: bases.len(),
        });
    }
    for (m, b) in bases.iter().enumerate() {
        let expected = partition.patches[m].node_count() * data.components;
        if b.patch != m || b.columns.nrows() != expected {
            return Err(Error::DimensionMismatch {
                what: "basis rows",
                expected,
                got: b.columns.nrows(),
            });
        }
    }
    let (a, rhs) = assembly_system(partition, bases, data)?;
    let ls = least_squares(&a, &rhs, Some(1e-12))?;
    let mut coefficients = Vec::with_capacity(bases.len());
    let mut offset = 0;
    for b in bases {
        coefficients.push(ls.solution.rows(offset, b.len()).into_owned());
        offset += b.len();
    }
    let local_fields: Vec<Vec<f64>> = bases
        .iter()
        .zip(&coefficients)
        .map(|(b, c)| (&b.columns * c).as_slice().to_vec())
        .collect();
    let solution = partition.pou_blend(&local_fields)?;
    Ok(GlobalAssembly {
        coefficients,
        local_fields,
        solution,
        underdetermined: ls.underdetermined,
        rank: ls.rank,
        residual_norm: ls.residual_norm,
        online_solves: 0,
    })
}

/// Global data on the global-boundary sites of patch `m`, zero elsewhere.
fn lifting_data<P: LocalProblem + ?Sized>(
    partition: &Partition,
    problem: &P,
    m: usize,
    data: &BoundaryData,
    lookup: &HashMap<usize, usize>,
) -> Result<Option<Vec<f64>>> {
    let patch = &partition.patches[m];
    let c = data.components;
    let mut out = vec![0.0; problem.boundary_len()];
    let mut any = false;
    for (i, &(l, k)) in problem.boundary_sites().iter().enumerate() {
        let g = patch.nodes[l];
        if !partition.grid.is_boundary(g) {
            continue;
        }
        let pos = lookup
            .get(&(g * c + k))
            .ok_or_else(|| Error::Malformed(format!("no global datum for node {g}, component {k}")))?;
        out[i] = data.values[*pos];
        any = true;
    }
    Ok(any.then_some(out))
}

/// Assembly for interface bases: `u_m = ℓ_m + G_m c_m`, where the lifting
/// `ℓ_m` solves the local problem with the global data on the patch's
/// global-boundary sites. Coefficients minimize `Σ χ_m χ_n |u_m − u_n|²`
/// over all pairwise overlaps.
pub fn online_assemble_lifted<P: LocalProblem>(
    partition: &Partition,
    problems: &[P],
    bases: &[LocalBasis],
    data: &BoundaryData,
) -> Result<GlobalAssembly> {
    check_len("local problems", partition.len(), problems.len())?;
    check_len("local bases", partition.len(), bases.len())?;
    let c = data.components;
    for (m, (b, p)) in bases.iter().zip(problems).enumerate() {
        check_patch(partition, p, m)?;
        let expected = p.lattice_len();
        if b.patch != m || b.columns.nrows() != expected || p.components() != c {
            return Err(Error::DimensionMismatch {
                what: "basis rows",
                expected,
                got: b.columns.nrows(),
            });
        }
    }
    let lookup = data.lookup();
    let lifts: Vec<Option<Vec<f64>>> = problems
        .par_iter()
        .enumerate()
        .map(|(m, p)| match lifting_data(partition, p, m, data, &lookup)? {
            Some(d) => p.solve(&d).map(Some),
            None => Ok(None),
        })
        .collect::<Result<_>>()?;
    let lift_at = |m: usize, e: usize| lifts[m].as_ref().map_or(0.0, |l| l[e]);

    let offsets: Vec<usize> = bases
        .iter()
        .scan(0, |acc, b| {
            let o = *acc;
            *acc += b.len();
            Some(o)
        })
        .collect();
    let unknowns: usize = bases.iter().map(LocalBasis::len).sum();
    let mut rows: Vec<(usize, usize, usize, usize, f64)> = Vec::new();
    for m in 0..partition.len() {
        for &n in &partition.patches[m].neighbors {
            if n <= m {
                continue;
            }
            for (_, lm, ln) in partition.shared_nodes(m, n) {
                let w = partition.chi[m][lm] * partition.chi[n][ln];
                if w > 0.0 {
                    for k in 0..c {
                        rows.push((m, lm * c + k, n, ln * c + k, w));
                    }
                }
            }
        }
    }
    let mut a = DMatrix::zeros(rows.len().max(1), unknowns);
    let mut rhs = DVector::zeros(rows.len().max(1));
    for (r, &(m, em, n, en, w)) in rows.iter().enumerate() {
        for i in 0..bases[m].len() {
            a[(r, offsets[m] + i)] += w * bases[m].columns[(em, i)];
        }
        for i in 0..bases[n].len() {
            a[(r, offsets[n] + i)] -= w * bases[n].columns[(en, i)];
        }
        rhs[r] = w * (lift_at(n, en) - lift_at(m, em));
    }
    let ls = least_squares(&a, &rhs, Some(1e-12))?;
    let mut coefficients = Vec::with_capacity(bases.len());
    let mut local_fields = Vec::with_capacity(bases.len());
    for (m, b) in bases.iter().enumerate() {
        let coef = ls.solution.rows(offsets[m], b.len()).into_owned();
        let mut field = (&b.columns * &coef).as_slice().to_vec();
        if let Some(l) = &lifts[m] {
            field.iter_mut().zip(l).for_each(|(f, v)| *f += v);
        }
        coefficients.push(coef);
        local_fields.push(field);
    }
    let solution = partition.pou_blend(&local_fields)?;
    Ok(GlobalAssembly {
        coefficients,
        local_fields,
        solution,
        underdetermined: ls.underdetermined,
        rank: ls.rank,
        residual_norm: ls.residual_norm,
        online_solves: lifts.iter().filter(|l| l.is_some()).count(),
    })
}
