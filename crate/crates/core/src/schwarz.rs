//! Overlapping Schwarz iteration and its compressed (reduced) variant.
//!
//! Every patch owns a set of lattice entries (`K̃_m` minus its own boundary
//! data). One iteration solves all patches simultaneously from their current
//! boundary data, then refreshes each boundary datum from the patch that owns
//! the corresponding node; data on the global boundary are held fixed.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{randomized_svd, SvdTriple};
use crate::local::{confined_targets, BoundaryData, ConfinedOperator, LocalProblem};
use crate::partition::Partition;

/// Where a boundary datum of a patch comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DatumSource {
    /// Index into the global boundary data.
    Global(usize),
    /// Position in the owning patch's target list.
    Patch { patch: usize, target: usize },
}

/// Routing of interface data between patches.
#[derive(Debug, Clone)]
pub struct ExchangePlan {
    pub targets: Vec<Vec<usize>>,
    pub sources: Vec<Vec<DatumSource>>,
}

impl ExchangePlan {
    pub fn new<P: LocalProblem>(partition: &Partition, problems: &[P], data: &BoundaryData) -> Result<Self> {
        if problems.len() != partition.len() {
            return Err(Error::DimensionMismatch {
                what: "local problems",
                expected: partition.len(),
                got: problems.len(),
            });
        }
        let c = data.components;
        let targets: Vec<Vec<usize>> = problems
            .iter()
            .zip(&partition.patches)
            .map(|(p, patch)| confined_targets(p, &patch.interior))
            .collect();
        let positions: Vec<HashMap<usize, usize>> = targets
            .iter()
            .map(|t| t.iter().enumerate().map(|(i, &e)| (e, i)).collect())
            .collect();
        let global = data.lookup();
        let mut sources = Vec::with_capacity(problems.len());
        for (n, (p, patch)) in problems.iter().zip(&partition.patches).enumerate() {
            if p.components() != c || p.node_count() != patch.node_count() {
                return Err(Error::DimensionMismatch {
                    what: "local lattice",
                    expected: patch.node_count() * c,
                    got: p.lattice_len(),
                });
            }
            let mut row = Vec::with_capacity(p.boundary_len());
            for &(l, k) in p.boundary_sites() {
                let g = patch.nodes[l];
                if let Some(&i) = global.get(&(g * c + k)) {
                    row.push(DatumSource::Global(i));
                    continue;
                }
                let owner = partition.owner[g];
                let lo = partition.patches[owner]
                    .local_index(&partition.grid, g)
                    .expect("owner contains node");
                let target = positions[owner].get(&(lo * c + k)).copied().ok_or_else(|| {
                    Error::DegenerateOverlap(format!(
                        "boundary node {g} of patch {n} is not an interior node of its owner {owner}"
                    ))
                })?;
                if owner == n {
                    return Err(Error::DegenerateOverlap(format!("patch {n} owns its own boundary node {g}")));
                }
                row.push(DatumSource::Patch { patch: owner, target });
            }
            sources.push(row);
        }
        Ok(Self { targets, sources })
    }

    /// Initial data: global values where prescribed, zero on interfaces.
    pub fn initial(&self, data: &BoundaryData) -> Vec<Vec<f64>> {
        self.sources
            .iter()
            .map(|row| {
                row.iter()
                    .map(|s| match s {
                        DatumSource::Global(i) => data.values[*i],
                        DatumSource::Patch { .. } => 0.0,
                    })
                    .collect()
            })
            .collect()
    }

    /// New boundary data from the patches' target values.
    pub fn exchange(&self, data: &BoundaryData, outputs: &[Vec<f64>]) -> Vec<Vec<f64>> {
        self.sources
            .iter()
            .map(|row| {
                row.iter()
                    .map(|s| match *s {
                        DatumSource::Global(i) => data.values[i],
                        DatumSource::Patch { patch, target } => outputs[patch][target],
                    })
                    .collect()
            })
            .collect()
    }
}

/// The boundary-to-boundary map of patch `m`: the updates its solution
/// induces on each neighbour's boundary data, as `(neighbour, [(datum, value)])`.
pub fn btb_apply<P: LocalProblem>(plan: &ExchangePlan, problem: &P, m: usize, f_m: &[f64]) -> Result<Vec<(usize, Vec<(usize, f64)>)>> {
    let u = problem.solve(f_m)?;
    let mut out = Vec::new();
    for (n, row) in plan.sources.iter().enumerate() {
        let updates: Vec<(usize, f64)> = row
            .iter()
            .enumerate()
            .filter_map(|(d, s)| match *s {
                DatumSource::Patch { patch, target } if patch == m => Some((d, u[plan.targets[m][target]])),
                _ => None,
            })
            .collect();
        if !updates.is_empty() {
            out.push((n, updates));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy)]
pub struct SchwarzOptions {
    pub tol: f64,
    pub t_max: usize,
}

impl Default for SchwarzOptions {
    fn default() -> Self {
        Self { tol: 1e-8, t_max: 500 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryRow {
    pub t: usize,
    pub max_interface_change: f64,
    /// Relative L2 error of the owned values against a reference field.
    pub relative_error: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SchwarzOutcome {
    pub solution: Vec<f64>,
    pub local_fields: Vec<Vec<f64>>,
    pub boundary_data: Vec<Vec<f64>>,
    pub history: Vec<HistoryRow>,
    pub converged: bool,
    /// Fine forward solves issued inside the iteration loop.
    pub loop_fine_solves: usize,
    /// Fine forward solves issued by the final assembly.
    pub final_fine_solves: usize,
}

/// Rank-k factorization of a confined local solution operator.
#[derive(Debug, Clone)]
pub struct ReducedMap {
    pub patch: usize,
    pub svd: SvdTriple,
    pub targets: Vec<usize>,
    pub r: usize,
    pub p: usize,
    pub seed: u64,
}

impl ReducedMap {
    pub fn rank(&self) -> usize {
        self.svd.rank()
    }

    /// `U Σ Vᵀ f` on the target entries.
    pub fn evaluate(&self, f: &[f64]) -> Vec<f64> {
        self.svd.apply(&DVector::from_column_slice(f)).as_slice().to_vec()
    }

    /// Boundary size divided by `r`.
    pub fn compression_ratio(&self) -> f64 {
        self.svd.v.nrows() as f64 / self.r as f64
    }
}

/// Randomized compression of the operator taking patch boundary data to the
/// solution on the patch's owned entries, using `r + p` forward and `r + p`
/// transpose local solves.
pub fn compress_local_operator<P: LocalProblem>(problem: &P, targets: Vec<usize>, patch: usize, r: usize, p: usize, seed: u64) -> Result<ReducedMap> {
    let op = ConfinedOperator::new(problem, targets);
    let svd = randomized_svd(&op, r, p, seed)?;
    Ok(ReducedMap {
        patch,
        svd,
        targets: op.targets().to_vec(),
        r,
        p,
        seed,
    })
}

/// Densely assembled confined operator (one solve per boundary datum).
pub fn dense_confined_operator<P: LocalProblem>(problem: &P, targets: &[usize]) -> Result<DMatrix<f64>> {
    let n = problem.boundary_len();
    let cols: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            problem.solve(&e).map(|u| targets.iter().map(|&t| u[t]).collect())
        })
        .collect::<Result<_>>()?;
    Ok(DMatrix::from_fn(targets.len(), n, |r, c| cols[c][r]))
}

fn relative_error(plan: &ExchangePlan, partition: &Partition, outputs: &[Vec<f64>], reference: &[f64], c: usize) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (m, (targets, out)) in plan.targets.iter().zip(outputs).enumerate() {
        let nodes = &partition.patches[m].nodes;
        for (&t, &v) in targets.iter().zip(out) {
            let e = nodes[t / c] * c + t % c;
            num += (v - reference[e]).powi(2);
            den += reference[e].powi(2);
        }
    }
    if den > 0.0 {
        (num / den).sqrt()
    } else {
        num.sqrt()
    }
}

fn forward_solves<P: LocalProblem>(problems: &[P]) -> usize {
    problems.iter().map(|p| p.solve_counts().0).sum()
}

fn iterate<P, F>(partition: &Partition, problems: &[P], plan: &ExchangePlan, data: &BoundaryData, opts: SchwarzOptions, reference: Option<&[f64]>, evaluate: F) -> Result<SchwarzOutcome>
where
    P: LocalProblem,
    F: Fn(usize, &[f64]) -> Result<Vec<f64>> + Sync,
{
    if !(opts.tol > 0.0) || opts.t_max == 0 {
        return Err(Error::InvalidParameter(format!(
            "tolerance {} and iteration cap {} must be positive",
            opts.tol, opts.t_max
        )));
    }
    let c = data.components;
    if let Some(r) = reference {
        crate::error::check_len("reference field", partition.grid.node_count() * c, r.len())?;
    }
    let before = forward_solves(problems);
    let mut f = plan.initial(data);
    let mut history = Vec::new();
    let mut converged = false;
    for t in 1..=opts.t_max {
        let outputs: Vec<Vec<f64>> = (0..problems.len())
            .into_par_iter()
            .map(|m| evaluate(m, &f[m]))
            .collect::<Result<_>>()?;
        let next = plan.exchange(data, &outputs);
        let change = f
            .iter()
            .zip(&next)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0_f64, f64::max);
        history.push(HistoryRow {
            t,
            max_interface_change: change,
            relative_error: reference.map(|r| relative_error(plan, partition, &outputs, r, c)),
        });
        f = next;
        if change <= opts.tol {
            converged = true;
            break;
        }
    }
    let loop_fine_solves = forward_solves(problems) - before;
    let local_fields: Vec<Vec<f64>> = problems
        .par_iter()
        .zip(&f)
        .map(|(p, fm)| p.solve(fm))
        .collect::<Result<_>>()?;
    let final_fine_solves = forward_solves(problems) - before - loop_fine_solves;
    let solution = partition.pou_blend(&local_fields)?;
    Ok(SchwarzOutcome {
        solution,
        local_fields,
        boundary_data: f,
        history,
        converged,
        loop_fine_solves,
        final_fine_solves,
    })
}

/// Vanilla Schwarz iteration with fine local solves.
pub fn schwarz_solve<P: LocalProblem>(partition: &Partition, problems: &[P], data: &BoundaryData, opts: SchwarzOptions, reference: Option<&[f64]>) -> Result<SchwarzOutcome> {
    let plan = ExchangePlan::new(partition, problems, data)?;
    iterate(partition, problems, &plan, data, opts, reference, |m, fm| {
        let u = problems[m].solve(fm)?;
        Ok(plan.targets[m].iter().map(|&t| u[t]).collect())
    })
}

/// Schwarz iteration with each local solve replaced by its rank-k
/// factorization; one fine solve per patch assembles the final field.
pub fn reduced_schwarz_solve<P: LocalProblem>(partition: &Partition, problems: &[P], maps: &[ReducedMap], data: &BoundaryData, opts: SchwarzOptions, reference: Option<&[f64]>) -> Result<SchwarzOutcome> {
    let plan = ExchangePlan::new(partition, problems, data)?;
    if maps.len() != problems.len() {
        return Err(Error::DimensionMismatch {
            what: "reduced maps",
            expected: problems.len(),
            got: maps.len(),
        });
    }
    for (m, map) in maps.iter().enumerate() {
        if map.patch != m || map.targets != plan.targets[m] || map.svd.v.nrows() != problems[m].boundary_len() {
            return Err(Error::DimensionMismatch {
                what: "reduced map targets",
                expected: plan.targets[m].len(),
                got: map.targets.len(),
            });
        }
        if map.rank() == 0 {
            return Err(Error::InvalidParameter(format!("reduced map {m} has rank 0")));
        }
    }
    iterate(partition, problems, &plan, data, opts, reference, |m, fm| Ok(maps[m].evaluate(fm)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::{EllipticSolver, Media};
    use crate::linalg::{gaussian_vector, spectral_norm, thin_svd};
    use crate::partition::Grid;
    use crate::rte::{CollisionKernel, Ordinates, RteSolver};

    fn elliptic_setup(cells: usize, counts: &[usize], overlap: usize, media: &Media) -> (Partition, Vec<EllipticSolver>) {
        let grid = Grid::unit(counts.len(), cells).unwrap();
        let part = Partition::build(&grid, counts, overlap).unwrap();
        let solvers = (0..part.len())
            .map(|m| EllipticSolver::for_patch(&part, m, media).unwrap())
            .collect();
        (part, solvers)
    }

    fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
        let den: f64 = b.iter().map(|y| y * y).sum();
        (num / den).sqrt()
    }

    #[test]
    fn single_patch_converges_at_once() {
        let media = Media::preset("fig5", 0.25).unwrap();
        let (part, solvers) = elliptic_setup(12, &[1, 1], 2, &media);
        let data = BoundaryData::dirichlet(&part.grid, |p| p[0] - p[1] * p[1]);
        let out = schwarz_solve(&part, &solvers, &data, SchwarzOptions::default(), None).unwrap();
        assert!(out.converged);
        assert_eq!(out.history.len(), 1);
        let direct = solvers[0].solve(&data.values).unwrap();
        assert!(rel_l2(&out.solution, &direct) < 1e-14);
        let plan = ExchangePlan::new(&part, &solvers, &data).unwrap();
        assert!(btb_apply(&plan, &solvers[0], 0, &data.values).unwrap().is_empty());
    }

    #[test]
    fn affine_data_converges_geometrically() {
        let media = Media::preset("constant", 1.0).unwrap();
        let (part, solvers) = elliptic_setup(24, &[2, 2], 4, &media);
        let ell = |p: &[f64]| 0.5 + p[0] - 2.0 * p[1];
        let data = BoundaryData::dirichlet(&part.grid, ell);
        let out = schwarz_solve(&part, &solvers, &data, SchwarzOptions { tol: 1e-10, t_max: 400 }, None).unwrap();
        assert!(out.converged);
        let exact = part.grid.sample(ell);
        assert!(out.solution.iter().zip(&exact).all(|(a, b)| (a - b).abs() < 1e-9));
        let h: Vec<f64> = out.history.iter().map(|r| r.max_interface_change).collect();
        for w in h[2..].windows(2) {
            assert!(w[1] < w[0]);
        }
    }

    #[test]
    fn btb_matches_dense_composition() {
        let media = Media::preset("fig7", 0.25).unwrap();
        let (part, solvers) = elliptic_setup(16, &[2, 2], 4, &media);
        let data = BoundaryData::dirichlet(&part.grid, |_| 0.0);
        let plan = ExchangePlan::new(&part, &solvers, &data).unwrap();
        let m = 1;
        let dense = dense_confined_operator(&solvers[m], &plan.targets[m]).unwrap();
        let f = gaussian_vector(solvers[m].boundary_len(), 8).unwrap();
        let y = &dense * &f;
        let updates = btb_apply(&plan, &solvers[m], m, f.as_slice()).unwrap();
        assert!(!updates.is_empty());
        for (n, list) in updates {
            assert!(part.patches[m].neighbors.contains(&n));
            for (d, v) in list {
                match plan.sources[n][d] {
                    DatumSource::Patch { patch, target } => {
                        assert_eq!(patch, m);
                        assert!((y[target] - v).abs() < 1e-12);
                    }
                    _ => panic!("global datum routed from a patch"),
                }
            }
        }
        // a ≡ 1 with affine data: neighbour traces are affine values
        let (part, solvers) = elliptic_setup(16, &[2, 2], 4, &Media::preset("constant", 1.0).unwrap());
        let plan = ExchangePlan::new(&part, &solvers, &data).unwrap();
        let ell = |p: &[f64]| 2.0 - p[0] + 0.5 * p[1];
        let lg = part.patches[m].local_grid(&part.grid);
        let fm: Vec<f64> = solvers[m].ring().iter().map(|&l| ell(&lg.coords(l))).collect();
        for (n, list) in btb_apply(&plan, &solvers[m], m, &fm).unwrap() {
            let ln = part.patches[n].local_grid(&part.grid);
            for (d, v) in list {
                let site = solvers[n].boundary_sites()[d].0;
                assert!((ell(&ln.coords(site)) - v).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn exact_rank_compression() {
        let media = Media::preset("fig5", 0.25).unwrap();
        let (part, solvers) = elliptic_setup(8, &[1, 1], 2, &media);
        let targets = confined_targets(&solvers[0], &part.patches[0].interior);
        let dense = dense_confined_operator(&solvers[0], &targets).unwrap();
        let svd = thin_svd(&dense);
        let rank = svd.s.iter().filter(|&&s| s > 1e-12 * svd.s[0]).count();
        // The 49 interior values depend on 32 boundary values (corners are
        // decoupled), so the operator has rank 28.
        let map = compress_local_operator(&solvers[0], targets, 0, rank, 2, 4).unwrap();
        let err = spectral_norm(&(&dense - map.svd.reconstruct()));
        assert!(err <= 1e-8 * svd.s[0], "{err}");
    }

    #[test]
    fn reduced_full_rank_matches_vanilla() {
        let media = Media::preset("fig7", 0.25).unwrap();
        let (part, solvers) = elliptic_setup(20, &[2, 2], 4, &media);
        let data = BoundaryData::dirichlet(&part.grid, |p| (4.0 * p[0]).sin() + p[1]);
        let plan = ExchangePlan::new(&part, &solvers, &data).unwrap();
        let maps: Vec<ReducedMap> = (0..4)
            .map(|m| {
                let p = 3;
                let k = solvers[m].boundary_len().min(plan.targets[m].len());
                compress_local_operator(&solvers[m], plan.targets[m].clone(), m, k - p, p, 10 + m as u64).unwrap()
            })
            .collect();
        let global = EllipticSolver::new(&part.grid, &media).unwrap();
        let reference = global.solve(&data.values).unwrap();
        let opts = SchwarzOptions { tol: 1e-10, t_max: 300 };
        let vanilla = schwarz_solve(&part, &solvers, &data, opts, Some(&reference)).unwrap();
        let reduced = reduced_schwarz_solve(&part, &solvers, &maps, &data, opts, Some(&reference)).unwrap();
        assert_eq!(reduced.loop_fine_solves, 0);
        assert_eq!(reduced.final_fine_solves, 4);
        for (a, b) in vanilla.history.iter().zip(&reduced.history) {
            assert!((a.max_interface_change - b.max_interface_change).abs() < 1e-8);
            assert!((a.relative_error.unwrap() - b.relative_error.unwrap()).abs() < 1e-8);
        }
        assert!(rel_l2(&vanilla.solution, &reference) < 1e-8);
    }

    #[test]
    fn transport_schwarz_matches_direct() {
        let grid = Grid::unit(1, 120).unwrap();
        let part = Partition::build(&grid, &[3], 12).unwrap();
        let ords = Ordinates::gauss_legendre(8).unwrap();
        let kernel = CollisionKernel::heterogeneous(1.0 / 81.0, 1.0 / 9.0).unwrap();
        let solvers: Vec<RteSolver> = (0..3)
            .map(|m| RteSolver::for_patch(&part, m, &ords, &kernel).unwrap())
            .collect();
        let data = BoundaryData::incoming(&grid, &ords, |v| 1.0 + v, |v| 0.5 * v * v);
        let global = RteSolver::new(grid.axes[0], &ords, &kernel).unwrap();
        let reference = global.solve(&data.values).unwrap();
        let out = schwarz_solve(&part, &solvers, &data, SchwarzOptions { tol: 1e-10, t_max: 2000 }, Some(&reference)).unwrap();
        assert!(out.converged);
        assert!(rel_l2(&out.solution, &reference) < 1e-8);
    }

    #[test]
    fn rejects_bad_options_and_maps() {
        let media = Media::preset("constant", 1.0).unwrap();
        let (part, solvers) = elliptic_setup(12, &[2], 2, &media);
        let data = BoundaryData::dirichlet(&part.grid, |_| 1.0);
        assert!(schwarz_solve(&part, &solvers, &data, SchwarzOptions { tol: 0.0, t_max: 5 }, None).is_err());
        assert!(reduced_schwarz_solve(&part, &solvers, &[], &data, SchwarzOptions::default(), None).is_err());
    }
}
