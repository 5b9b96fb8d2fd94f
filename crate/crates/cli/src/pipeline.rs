//! Orchestration of the offline and online stages for each method.

use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde_json::{json, Map, Value};

use multiscale::basis::{
    offline_full_basis, offline_interface_basis, offline_random_basis, online_assemble, online_assemble_lifted,
    GlobalAssembly, LocalBasis,
};
use multiscale::elliptic::EllipticSolver;
use multiscale::io::{write_csv, write_field_csv, write_history_csv, write_partition_json};
use multiscale::linalg::{
    derive_seed, gaussian_matrix, gaussian_vector, orthonormal_basis, randomized_svd, relative_l2, spectral_norm,
    thin_svd, DenseOperator,
};
use multiscale::local::{confined_targets, BoundaryData, LocalProblem};
use multiscale::manifold::{
    knn, local_dimension_probe, offline_sample, online_interpolate, NonlinearProblem, Sampler, Semilinear,
};
use multiscale::partition::{Grid, Partition};
use multiscale::rte::{Ordinates, RteSolver};
use multiscale::schwarz::{
    compress_local_operator, reduced_schwarz_solve, schwarz_solve, ExchangePlan, SchwarzOptions, SchwarzOutcome,
};

use crate::config::{BasisChoice, BoundarySpec, ExperimentConfig, FullRank, Method, Problem, RankSpec, SamplerChoice, Setup};
use crate::error::CliError;

/// Files written so far, relative to the run directory.
#[derive(Debug)]
pub struct Artifacts {
    dir: PathBuf,
    names: Vec<String>,
}

impl Artifacts {
    pub fn new(dir: &Path) -> Self {
        Self {
            dir: dir.to_path_buf(),
            names: Vec::new(),
        }
    }

    pub fn path(&mut self, name: &str) -> PathBuf {
        self.names.push(name.to_string());
        self.dir.join(name)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

#[derive(Debug, Default)]
pub struct Outcome {
    pub metrics: Map<String, Value>,
    pub flags: Vec<String>,
    pub offline_s: f64,
    pub online_s: f64,
    pub reference_s: f64,
    pub grid: Value,
}

struct Timer(Instant);

impl Timer {
    fn start() -> Self {
        Timer(Instant::now())
    }

    fn secs(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

/// The two linear model problems behind one interface.
enum Model {
    Elliptic {
        media: multiscale::elliptic::Media,
    },
    Rte {
        kernel: multiscale::rte::CollisionKernel,
        ords: Ordinates,
    },
}

enum Local {
    Elliptic(EllipticSolver),
    Rte(RteSolver),
}

impl LocalProblem for Local {
    fn node_count(&self) -> usize {
        match self {
            Local::Elliptic(s) => s.node_count(),
            Local::Rte(s) => s.node_count(),
        }
    }
    fn components(&self) -> usize {
        match self {
            Local::Elliptic(s) => s.components(),
            Local::Rte(s) => s.components(),
        }
    }
    fn boundary_sites(&self) -> &[(usize, usize)] {
        match self {
            Local::Elliptic(s) => s.boundary_sites(),
            Local::Rte(s) => s.boundary_sites(),
        }
    }
    fn solve(&self, boundary: &[f64]) -> multiscale::Result<Vec<f64>> {
        match self {
            Local::Elliptic(s) => s.solve(boundary),
            Local::Rte(s) => s.solve(boundary),
        }
    }
    fn solve_transpose(&self, lattice: &[f64]) -> multiscale::Result<Vec<f64>> {
        match self {
            Local::Elliptic(s) => s.solve_transpose(lattice),
            Local::Rte(s) => s.solve_transpose(lattice),
        }
    }
    fn solve_counts(&self) -> (usize, usize) {
        match self {
            Local::Elliptic(s) => s.solve_counts(),
            Local::Rte(s) => s.solve_counts(),
        }
    }
}

impl Model {
    fn from_config(cfg: &ExperimentConfig, setup: &Setup) -> Result<Self, CliError> {
        Ok(match cfg.problem {
            Problem::Elliptic => Model::Elliptic { media: cfg.media()? },
            Problem::Rte => Model::Rte {
                kernel: cfg.kernel()?,
                ords: setup.ordinates.clone().expect("validated transport setup has ordinates"),
            },
            Problem::Semilinear => unreachable!("semilinear runs use the manifold pipeline"),
        })
    }

    fn ordinates(&self) -> Option<&Ordinates> {
        match self {
            Model::Elliptic { .. } => None,
            Model::Rte { ords, .. } => Some(ords),
        }
    }

    fn global(&self, grid: &Grid) -> Result<Local, CliError> {
        Ok(match self {
            Model::Elliptic { media } => Local::Elliptic(EllipticSolver::new(grid, media)?),
            Model::Rte { kernel, ords } => Local::Rte(RteSolver::new(grid.axes[0], ords, kernel)?),
        })
    }

    fn local(&self, partition: &Partition, m: usize) -> Result<Local, CliError> {
        Ok(match self {
            Model::Elliptic { media } => Local::Elliptic(EllipticSolver::for_patch(partition, m, media)?),
            Model::Rte { kernel, ords } => Local::Rte(RteSolver::for_patch(partition, m, ords, kernel)?),
        })
    }

    fn boundary_data(&self, grid: &Grid, spec: &BoundarySpec, seed: u64) -> Result<BoundaryData, CliError> {
        let mut data = match self {
            Model::Elliptic { .. } => BoundaryData::dirichlet(grid, |p| spec.eval(p)),
            Model::Rte { ords, .. } => {
                BoundaryData::incoming(grid, ords, |v| spec.eval(&[0.0, v]), |v| spec.eval(&[1.0, v]))
            }
        };
        if let BoundarySpec::Random { scale } = spec {
            let z = gaussian_vector(data.len(), derive_seed(seed, "boundary"))?;
            data.values = z.iter().map(|v| scale * v).collect();
        }
        Ok(data)
    }
}

fn grid_info(grid: &Grid, components: usize) -> Value {
    json!({
        "dim": grid.dim(),
        "shape": grid.shape(),
        "lo": grid.axes.iter().map(|a| a.lo).collect::<Vec<_>>(),
        "hi": grid.axes.iter().map(|a| a.hi).collect::<Vec<_>>(),
        "components": components,
    })
}

fn write_singvals(artifacts: &mut Artifacts, name: &str, values: &[f64]) -> Result<(), CliError> {
    let rows = values.iter().enumerate().map(|(i, &s)| vec![(i + 1) as f64, s]);
    write_csv(&artifacts.path(name), Some(&["index", "sigma"]), rows)?;
    Ok(())
}

fn error_floor(outcome: &SchwarzOutcome) -> Option<f64> {
    outcome
        .history
        .iter()
        .filter_map(|h| h.relative_error)
        .reduce(f64::min)
}

pub fn execute(cfg: &ExperimentConfig, setup: &Setup, artifacts: &mut Artifacts) -> Result<Outcome, CliError> {
    match (cfg.method, cfg.problem) {
        (Method::SvdBench, _) => svd_bench(cfg, artifacts),
        (Method::Manifold, _) | (Method::Direct, Problem::Semilinear) => manifold(cfg, setup, artifacts),
        _ => linear(cfg, setup, artifacts),
    }
}

fn linear(cfg: &ExperimentConfig, setup: &Setup, artifacts: &mut Artifacts) -> Result<Outcome, CliError> {
    let grid = setup.grid.as_ref().expect("validated linear setup has a grid");
    let model = Model::from_config(cfg, setup)?;
    let components = model.ordinates().map_or(1, Ordinates::len);
    let data = model.boundary_data(grid, &cfg.boundary, cfg.seed)?;
    let mut out = Outcome {
        grid: grid_info(grid, components),
        ..Outcome::default()
    };

    let reference = if cfg.params.reference || cfg.method == Method::Direct {
        let t = Timer::start();
        let u = model.global(grid)?.solve(&data.values)?;
        out.reference_s = t.secs();
        Some(u)
    } else {
        None
    };

    let solution = match cfg.method {
        Method::Direct => {
            out.online_s = out.reference_s;
            out.reference_s = 0.0;
            reference.clone().expect("direct solve computed above")
        }
        Method::Basis => basis(cfg, setup, &model, &data, artifacts, &mut out)?,
        Method::Schwarz | Method::ReducedSchwarz => {
            schwarz(cfg, setup, &model, &data, reference.as_deref(), artifacts, &mut out)?
        }
        Method::Manifold | Method::SvdBench => unreachable!("dispatched elsewhere"),
    };
    if let Some(u) = reference.as_ref().filter(|_| cfg.method != Method::Direct) {
        out.metrics.insert("relative_l2_error".into(), json!(relative_l2(&solution, u)));
    }
    write_field_csv(&artifacts.path("solution.csv"), grid, &solution, model.ordinates())?;
    Ok(out)
}

fn basis(
    cfg: &ExperimentConfig,
    setup: &Setup,
    model: &Model,
    data: &BoundaryData,
    artifacts: &mut Artifacts,
    out: &mut Outcome,
) -> Result<Vec<f64>, CliError> {
    let part = setup.partition.as_ref().expect("validated basis setup has a partition");
    write_partition_json(&artifacts.path("partition.json"), part)?;
    let solvers: Vec<Local> = (0..part.len()).map(|m| model.local(part, m)).collect::<Result<_, _>>()?;

    let t = Timer::start();
    let bases: Vec<LocalBasis> = solvers
        .iter()
        .enumerate()
        .map(|(m, s)| {
            let seed = derive_seed(cfg.seed, &format!("basis-{m}"));
            match cfg.params.basis {
                BasisChoice::Interface => offline_interface_basis(part, s, m, cfg.params.k_m, seed),
                BasisChoice::Random => offline_random_basis(s, m, cfg.params.k_m, seed),
                BasisChoice::Full => offline_full_basis(s, m),
            }
        })
        .collect::<Result<_, _>>()?;
    out.offline_s = t.secs();

    let t = Timer::start();
    let assembly: GlobalAssembly = match cfg.params.basis {
        BasisChoice::Interface => online_assemble_lifted(part, &solvers, &bases, data)?,
        BasisChoice::Random | BasisChoice::Full => online_assemble(part, &bases, data)?,
    };
    out.online_s = t.secs();

    for (m, (b, s)) in bases.iter().zip(&solvers).enumerate() {
        let targets = confined_targets(s, &part.patches[m].interior);
        let restricted = DMatrix::from_fn(targets.len(), b.len(), |r, c| b.columns[(targets[r], c)]);
        write_singvals(artifacts, &format!("singvals_{m}.csv"), thin_svd(&restricted).s.as_slice())?;
    }
    if assembly.underdetermined {
        out.flags.push("underdetermined basis: minimum-norm coefficients".into());
    }
    out.metrics.insert("basis_sizes".into(), json!(bases.iter().map(LocalBasis::len).collect::<Vec<_>>()));
    out.metrics.insert("assembly_rank".into(), json!(assembly.rank));
    out.metrics.insert("assembly_residual".into(), json!(assembly.residual_norm));
    out.metrics.insert("online_fine_solves".into(), json!(assembly.online_solves));
    Ok(assembly.solution)
}

fn schwarz(
    cfg: &ExperimentConfig,
    setup: &Setup,
    model: &Model,
    data: &BoundaryData,
    reference: Option<&[f64]>,
    artifacts: &mut Artifacts,
    out: &mut Outcome,
) -> Result<Vec<f64>, CliError> {
    let part = setup.partition.as_ref().expect("validated Schwarz setup has a partition");
    write_partition_json(&artifacts.path("partition.json"), part)?;
    let solvers: Vec<Local> = (0..part.len()).map(|m| model.local(part, m)).collect::<Result<_, _>>()?;
    let opts = SchwarzOptions {
        tol: cfg.params.tol,
        t_max: cfg.params.t_max,
    };
    let counts = |s: &[Local]| -> usize { s.iter().map(|p| p.solve_counts().0 + p.solve_counts().1).sum() };

    let outcome = if cfg.method == Method::Schwarz {
        let t = Timer::start();
        let o = schwarz_solve(part, &solvers, data, opts, reference)?;
        out.online_s = t.secs();
        o
    } else {
        let t = Timer::start();
        let plan = ExchangePlan::new(part, &solvers, data)?;
        let p = cfg.params.p;
        let maps = (0..part.len())
            .map(|m| {
                let targets = plan.targets[m].clone();
                let r = match cfg.params.r {
                    RankSpec::Value(r) => r,
                    RankSpec::Named(FullRank::Full) => solvers[m].boundary_len().min(targets.len()) - p,
                };
                compress_local_operator(&solvers[m], targets, m, r, p, derive_seed(cfg.seed, &format!("rsvd-{m}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        out.offline_s = t.secs();
        out.metrics.insert("offline_fine_solves".into(), json!(counts(&solvers)));
        out.metrics.insert("ranks".into(), json!(maps.iter().map(|m| m.r).collect::<Vec<_>>()));
        out.metrics.insert(
            "compression_ratios".into(),
            json!(maps.iter().map(|m| m.compression_ratio()).collect::<Vec<_>>()),
        );
        for m in &maps {
            write_singvals(artifacts, &format!("singvals_{}.csv", m.patch), m.svd.s.as_slice())?;
        }
        let t = Timer::start();
        let o = reduced_schwarz_solve(part, &solvers, &maps, data, opts, reference)?;
        out.online_s = t.secs();
        o
    };
    write_history_csv(&artifacts.path("errhist.csv"), &outcome.history)?;
    if !outcome.converged {
        out.flags.push(format!("not converged after {} iterations", outcome.history.len()));
    }
    out.metrics.insert("iterations".into(), json!(outcome.history.len()));
    out.metrics.insert("converged".into(), json!(outcome.converged));
    out.metrics.insert(
        "final_interface_change".into(),
        json!(outcome.history.last().map(|h| h.max_interface_change)),
    );
    out.metrics.insert("error_floor".into(), json!(error_floor(&outcome)));
    out.metrics.insert("loop_fine_solves".into(), json!(outcome.loop_fine_solves));
    out.metrics.insert("final_fine_solves".into(), json!(outcome.final_fine_solves));
    Ok(outcome.solution)
}

fn manifold(cfg: &ExperimentConfig, setup: &Setup, artifacts: &mut Artifacts) -> Result<Outcome, CliError> {
    let grid = setup.grid.as_ref().expect("validated semilinear setup has a grid");
    let eps = cfg.media.as_ref().expect("validated semilinear setup has media").epsilon;
    let problem = Semilinear::new(eps, grid.axes[0].cells)?;
    let prm = &cfg.params;
    let sampler = match prm.sampler {
        SamplerChoice::SourceModes => Sampler::source_modes(problem.grid(), prm.sampler_dim, prm.amplitude),
        SamplerChoice::BoundaryValues => Sampler::boundary_values(problem.grid(), prm.amplitude),
    };
    let queries: Vec<Vec<f64>> = (0..prm.queries)
        .map(|q| sampler.draw(derive_seed(cfg.seed, &format!("query-{q}"))))
        .collect::<Result<_, _>>()?;
    let mut out = Outcome {
        grid: grid_info(problem.grid(), 1),
        ..Outcome::default()
    };

    let solution = if cfg.method == Method::Direct {
        let t = Timer::start();
        let u = problem.solve(&queries[0])?;
        out.online_s = t.secs();
        out.metrics.insert("relative_residual".into(), json!(problem.relative_residual(&queries[0], &u)));
        u
    } else {
        let t = Timer::start();
        let cloud = offline_sample(&problem, prm.n, &sampler, derive_seed(cfg.seed, "cloud"))?;
        out.offline_s = t.secs();
        let t = Timer::start();
        let answers: Vec<Vec<f64>> = queries
            .iter()
            .map(|f| online_interpolate(&cloud, f, prm.k))
            .collect::<Result<_, _>>()?;
        out.online_s = t.secs();

        let centre = knn(&cloud, &queries[0], 1)?[0];
        match local_dimension_probe(&cloud, centre, 0.25) {
            Ok(probe) => {
                out.metrics.insert("effective_dimension".into(), json!(probe.effective_dimension));
                out.metrics.insert("probe_points".into(), json!(probe.points));
                write_singvals(artifacts, "singvals_probe.csv", &probe.singular_values)?;
            }
            Err(e) => out.flags.push(format!("dimension probe skipped: {e}")),
        }
        out.metrics.insert(
            "max_sample_residual".into(),
            json!(cloud.residuals.iter().copied().fold(0.0, f64::max)),
        );
        if prm.reference {
            let t = Timer::start();
            let errors: Vec<f64> = queries
                .iter()
                .zip(&answers)
                .map(|(f, u)| problem.solve(f).map(|exact| relative_l2(u, &exact)))
                .collect::<Result<_, _>>()?;
            out.reference_s = t.secs();
            let mut sorted = errors.clone();
            sorted.sort_by(f64::total_cmp);
            let mid = sorted.len() / 2;
            let median = if sorted.len() % 2 == 0 {
                0.5 * (sorted[mid - 1] + sorted[mid])
            } else {
                sorted[mid]
            };
            out.metrics.insert("query_errors".into(), json!(errors));
            out.metrics.insert("median_error".into(), json!(median));
        }
        answers.into_iter().next().expect("at least one query")
    };
    write_field_csv(&artifacts.path("solution.csv"), problem.grid(), &solution, None)?;
    Ok(out)
}

fn svd_bench(cfg: &ExperimentConfig, artifacts: &mut Artifacts) -> Result<Outcome, CliError> {
    let prm = &cfg.params;
    let RankSpec::Value(r) = prm.r else {
        unreachable!("validated svd-bench has a numeric rank")
    };
    let (rows, cols) = (prm.bench_rows, prm.bench_cols);
    let n = rows.min(cols);
    let sigma: Vec<f64> = (1..=n).map(|i| 2f64.powi(-(i as i32))).collect();
    let u = orthonormal_basis(&gaussian_matrix(rows, n, derive_seed(cfg.seed, "bench-u"))?);
    let v = orthonormal_basis(&gaussian_matrix(cols, n, derive_seed(cfg.seed, "bench-v"))?);
    let a = &u * DMatrix::from_diagonal(&DVector::from_column_slice(&sigma)) * v.transpose();
    let op = DenseOperator(a.clone());

    let t = Timer::start();
    let mut errors = Vec::with_capacity(prm.trials);
    let mut first = None;
    for trial in 0..prm.trials {
        let svd = randomized_svd(&op, r, prm.p, derive_seed(cfg.seed, &format!("trial-{trial}")))?;
        errors.push(spectral_norm(&(&a - svd.reconstruct())));
        first.get_or_insert(svd);
    }
    let mut out = Outcome {
        online_s: t.secs(),
        grid: Value::Null,
        ..Outcome::default()
    };
    let bound = 10.0 * (r as f64 / (prm.p as f64 - 1.0)) * sigma[r];
    let estimate = first.expect("at least one trial").s;
    let table = (0..n).map(|i| vec![(i + 1) as f64, sigma[i], estimate.get(i).copied().unwrap_or(f64::NAN)]);
    write_csv(&artifacts.path("singvals_bench.csv"), Some(&["index", "sigma", "estimate"]), table)?;
    out.metrics.insert("errors".into(), json!(errors));
    out.metrics.insert("bound".into(), json!(bound));
    out.metrics.insert("sigma_r_plus_1".into(), json!(sigma[r]));
    out.metrics.insert("within_bound".into(), json!(errors.iter().filter(|&&e| e <= bound).count()));
    out.metrics.insert("trials".into(), json!(prm.trials));
    Ok(out)
}

/// Report body shared by successful and failed runs.
pub fn report(cfg: &ExperimentConfig, status: &str, outcome: Option<&Outcome>, artifacts: &[String]) -> Value {
    let mut body = json!({
        "schema_version": crate::config::SCHEMA_VERSION,
        "status": status,
        "config": cfg,
        "artifacts": artifacts,
    });
    if let Some(o) = outcome {
        body["timings"] = json!({
            "offline_s": o.offline_s,
            "online_s": o.online_s,
            "reference_s": o.reference_s,
        });
        body["metrics"] = Value::Object(o.metrics.clone());
        body["flags"] = json!(o.flags);
        body["grid"] = o.grid.clone();
    }
    body
}
