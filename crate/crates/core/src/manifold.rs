//! Nonlinear solution maps sampled offline and interpolated online from the
//! nearest samples' tangent plane.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::elliptic::{EllipticSolver, Media};
use crate::error::{check_len, Error, Result};
use crate::linalg::{derive_seed, gaussian_vector, least_squares, numerical_rank, thin_svd};
use crate::partition::Grid;

/// A nonlinear map `f ↦ u` defined implicitly by `N(u) = f`.
pub trait NonlinearProblem: Sync {
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    /// Residual vector of the discrete system.
    fn residual(&self, u: &[f64], f: &[f64]) -> Vec<f64>;
    fn solve(&self, f: &[f64]) -> Result<Vec<f64>>;

    /// Residual ∞-norm relative to the data scale.
    fn relative_residual(&self, u: &[f64], f: &[f64]) -> f64 {
        let r = inf_norm(&self.residual(u, f));
        r / inf_norm(f).max(1.0)
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// `u = A⁻¹ f` for a fixed invertible matrix, as a reference problem.
#[derive(Debug, Clone)]
pub struct LinearProblem {
    matrix: DMatrix<f64>,
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl LinearProblem {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::InvalidParameter("linear problem needs a square matrix".into()));
        }
        let lu = matrix.clone().lu();
        if !lu.is_invertible() {
            return Err(Error::SingularMatrix { row: 0 });
        }
        Ok(Self { matrix, lu })
    }
}

impl NonlinearProblem for LinearProblem {
    fn input_dim(&self) -> usize {
        self.matrix.nrows()
    }
    fn output_dim(&self) -> usize {
        self.matrix.nrows()
    }
    fn residual(&self, u: &[f64], f: &[f64]) -> Vec<f64> {
        let r = &self.matrix * DVector::from_column_slice(u) - DVector::from_column_slice(f);
        r.as_slice().to_vec()
    }
    fn solve(&self, f: &[f64]) -> Result<Vec<f64>> {
        check_len("input", self.input_dim(), f.len())?;
        let u = self.lu.solve(&DVector::from_column_slice(f)).ok_or(Error::SingularMatrix { row: 0 })?;
        Ok(u.as_slice().to_vec())
    }
}

pub const NEWTON_MAX_ITERATIONS: usize = 50;
pub const NEWTON_ABS_TOL: f64 = 1e-10;
pub const NEWTON_REL_TOL: f64 = 1e-8;

/// `−(a(x/ε) u′)′ + u³ = f` on `[0, 1]` with `a(y) = 2 + sin 2πy`.
///
/// Inputs and outputs live on all grid nodes: the two end entries of `f`
/// are the Dirichlet values, the rest is the source.
#[derive(Debug)]
pub struct Semilinear {
    linear: EllipticSolver,
}

impl Semilinear {
    pub fn new(epsilon: f64, cells: usize) -> Result<Self> {
        let media = Media::preset("periodic_1d", epsilon)?;
        let grid = Grid::unit(1, cells)?;
        Ok(Self {
            linear: EllipticSolver::new(&grid, &media)?,
        })
    }

    pub fn grid(&self) -> &Grid {
        self.linear.grid()
    }

    fn split(&self, f: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = f.len();
        (vec![f[0], f[n - 1]], f[1..n - 1].to_vec())
    }

    /// Residual on the unknowns for interior values `w`.
    fn interior_residual(&self, w: &[f64], load: &[f64], source: &[f64]) -> Vec<f64> {
        let aw = self.linear.matrix().matvec(w);
        (0..w.len())
            .map(|k| aw[k] + w[k].powi(3) - load[k] - source[k])
            .collect()
    }

    /// Solution of the linearized problem (the cubic term dropped).
    pub fn solve_linearized(&self, f: &[f64]) -> Result<Vec<f64>> {
        check_len("input", self.input_dim(), f.len())?;
        let (b, s) = self.split(f);
        self.linear.solve_dirichlet(&b, &s)
    }
}

impl NonlinearProblem for Semilinear {
    fn input_dim(&self) -> usize {
        self.linear.grid().node_count()
    }

    fn output_dim(&self) -> usize {
        self.input_dim()
    }

    fn residual(&self, u: &[f64], f: &[f64]) -> Vec<f64> {
        let n = u.len();
        let (b, s) = self.split(f);
        let load = self.linear.boundary_load(&b);
        let mut r = vec![u[0] - f[0]];
        r.extend(self.interior_residual(&u[1..n - 1], &load, &s));
        r.push(u[n - 1] - f[n - 1]);
        r
    }

    /// Damped Newton with backtracking halving.
    fn solve(&self, f: &[f64]) -> Result<Vec<f64>> {
        check_len("input", self.input_dim(), f.len())?;
        let (b, s) = self.split(f);
        let load = self.linear.boundary_load(&b);
        let scale = inf_norm(&load).max(inf_norm(&s));
        let mut w = vec![0.0; s.len()];
        let mut r = self.interior_residual(&w, &load, &s);
        let mut norm = inf_norm(&r);
        let mut iterations = 0;
        while norm > NEWTON_ABS_TOL && norm > NEWTON_REL_TOL * scale {
            if iterations == NEWTON_MAX_ITERATIONS {
                return Err(Error::NewtonStalled { residual: norm, iterations });
            }
            iterations += 1;
            let mut jac = self.linear.matrix().clone();
            for (k, wk) in w.iter().enumerate() {
                jac.add(k, k, 3.0 * wk * wk);
            }
            let mut step = r.clone();
            jac.factor_cholesky()?.solve_in_place(&mut step);
            let mut lambda = 1.0;
            loop {
                let trial: Vec<f64> = w.iter().zip(&step).map(|(a, d)| a - lambda * d).collect();
                let tr = self.interior_residual(&trial, &load, &s);
                let tn = inf_norm(&tr);
                if tn < norm || lambda < 1e-9 {
                    w = trial;
                    r = tr;
                    norm = tn;
                    break;
                }
                lambda *= 0.5;
            }
        }
        let mut u = Vec::with_capacity(f.len());
        u.push(b[0]);
        u.extend(w);
        u.push(b[1]);
        Ok(u)
    }
}

/// Inputs drawn as Gaussian combinations of fixed generator vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sampler {
    pub label: String,
    pub generators: Vec<Vec<f64>>,
    pub amplitude: f64,
}

impl Sampler {
    /// Sources `sin((i+1)πx)` for `i < dim`, zero boundary values.
    pub fn source_modes(grid: &Grid, dim: usize, amplitude: f64) -> Self {
        let n = grid.node_count();
        let generators = (0..dim)
            .map(|i| {
                (0..n)
                    .map(|l| {
                        if l == 0 || l == n - 1 {
                            0.0
                        } else {
                            ((i + 1) as f64 * std::f64::consts::PI * grid.coords(l)[0]).sin()
                        }
                    })
                    .collect()
            })
            .collect();
        Self {
            label: "source_modes".into(),
            generators,
            amplitude,
        }
    }

    /// Only the two Dirichlet values vary.
    pub fn boundary_values(grid: &Grid, amplitude: f64) -> Self {
        let n = grid.node_count();
        let mut left = vec![0.0; n];
        let mut right = vec![0.0; n];
        left[0] = 1.0;
        right[n - 1] = 1.0;
        Self {
            label: "boundary_values".into(),
            generators: vec![left, right],
            amplitude,
        }
    }

    pub fn dim(&self) -> usize {
        self.generators.len()
    }

    pub fn draw(&self, seed: u64) -> Result<Vec<f64>> {
        let z = gaussian_vector(self.generators.len(), seed)?;
        let n = self.generators[0].len();
        let mut f = vec![0.0; n];
        for (g, zi) in self.generators.iter().zip(z.iter()) {
            for (fv, gv) in f.iter_mut().zip(g) {
                *fv += self.amplitude * zi * gv;
            }
        }
        Ok(f)
    }
}

pub const MAX_ATTEMPTS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct SampleCloud {
    pub inputs: Vec<Vec<f64>>,
    pub outputs: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub sampler: Sampler,
    pub seed: u64,
}

impl SampleCloud {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

/// Draws and solves `n` samples. A sample whose solve fails is redrawn from a
/// fresh stream, up to [`MAX_ATTEMPTS`] times.
pub fn offline_sample<P: NonlinearProblem>(problem: &P, n: usize, sampler: &Sampler, seed: u64) -> Result<SampleCloud> {
    if n == 0 {
        return Err(Error::InvalidParameter("sample count must be at least 1".into()));
    }
    let pairs: Vec<(Vec<f64>, Vec<f64>, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            for attempt in 0..MAX_ATTEMPTS {
                let f = sampler.draw(derive_seed(seed, &format!("sample-{i}-attempt-{attempt}")))?;
                if let Ok(u) = problem.solve(&f) {
                    let res = problem.relative_residual(&u, &f);
                    if res <= NEWTON_REL_TOL {
                        return Ok((f, u, res));
                    }
                }
            }
            Err(Error::NewtonDiverged { sample: i, attempts: MAX_ATTEMPTS })
        })
        .collect::<Result<_>>()?;
    let mut cloud = SampleCloud {
        inputs: Vec::with_capacity(n),
        outputs: Vec::with_capacity(n),
        residuals: Vec::with_capacity(n),
        sampler: sampler.clone(),
        seed,
    };
    for (f, u, r) in pairs {
        cloud.inputs.push(f);
        cloud.outputs.push(u);
        cloud.residuals.push(r);
    }
    Ok(cloud)
}

fn distance2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

/// Indices of the `k` inputs nearest to `f`, nearest first, ties to the
/// lower index.
pub fn knn(cloud: &SampleCloud, f: &[f64], k: usize) -> Result<Vec<usize>> {
    if k == 0 || k > cloud.len() {
        return Err(Error::InvalidParameter(format!(
            "neighbour count {k} must lie in 1..={}",
            cloud.len()
        )));
    }
    let mut d: Vec<(f64, usize)> = cloud
        .inputs
        .iter()
        .enumerate()
        .map(|(i, fi)| (distance2(fi, f), i))
        .collect();
    d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(d.into_iter().take(k).map(|(_, i)| i).collect())
}

/// Tangent-plane interpolation: `u_{i₁} + U c` with `U` the output
/// differences to the nearest sample and `c` the minimum-norm least-squares
/// fit of `f − f_{i₁}` by the input differences.
pub fn online_interpolate(cloud: &SampleCloud, f: &[f64], k: usize) -> Result<Vec<f64>> {
    let idx = knn(cloud, f, k)?;
    let first = idx[0];
    let base = &cloud.outputs[first];
    if k == 1 {
        return Ok(base.clone());
    }
    let f0 = &cloud.inputs[first];
    check_len("query input", f0.len(), f.len())?;
    let df = DMatrix::from_fn(f0.len(), k - 1, |r, c| cloud.inputs[idx[c + 1]][r] - f0[r]);
    let rhs = DVector::from_iterator(f.len(), f.iter().zip(f0).map(|(a, b)| a - b));
    if rhs.iter().all(|&v| v == 0.0) {
        return Ok(base.clone());
    }
    let c = least_squares(&df, &rhs, Some(1e-10))?.solution;
    let mut u = base.clone();
    for (j, cj) in c.iter().enumerate() {
        let other = &cloud.outputs[idx[j + 1]];
        for (ur, (o, b)) in u.iter_mut().zip(other.iter().zip(base)) {
            *ur += cj * (o - b);
        }
    }
    Ok(u)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DimensionProbe {
    pub singular_values: Vec<f64>,
    pub effective_dimension: usize,
    pub points: usize,
}

/// Minimum number of cloud points for a dimension estimate.
pub const PROBE_MIN_POINTS: usize = 5;

/// Singular values of the mean-centred outputs lying within
/// `radius_fraction` times the largest output distance from the centre
/// sample. The effective dimension counts values above `0.05 σ₁`.
pub fn local_dimension_probe(cloud: &SampleCloud, center: usize, radius_fraction: f64) -> Result<DimensionProbe> {
    if center >= cloud.len() {
        return Err(Error::InvalidParameter(format!("centre index {center} out of range")));
    }
    let c = &cloud.outputs[center];
    let dist: Vec<f64> = cloud.outputs.iter().map(|u| distance2(u, c).sqrt()).collect();
    let radius = radius_fraction * dist.iter().cloned().fold(0.0, f64::max);
    let chosen: Vec<usize> = (0..cloud.len()).filter(|&i| dist[i] <= radius).collect();
    if chosen.len() < PROBE_MIN_POINTS {
        return Err(Error::TooFewPoints {
            found: chosen.len(),
            needed: PROBE_MIN_POINTS,
        });
    }
    let d = c.len();
    let mut mean = vec![0.0; d];
    for &i in &chosen {
        for (m, v) in mean.iter_mut().zip(&cloud.outputs[i]) {
            *m += v / chosen.len() as f64;
        }
    }
    let x = DMatrix::from_fn(d, chosen.len(), |r, j| cloud.outputs[chosen[j]][r] - mean[r]);
    let s: Vec<f64> = thin_svd(&x).s.iter().copied().collect();
    let s1 = s.first().copied().unwrap_or(0.0);
    Ok(DimensionProbe {
        effective_dimension: numerical_rank(&s, 0.05 * s1),
        singular_values: s,
        points: chosen.len(),
    })
}
