//! Experiment configuration: JSON schema and validation.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use multiscale::elliptic::{Media, PRESETS};
use multiscale::partition::{Axis, Grid, Partition};
use multiscale::rte::{CollisionKernel, Ordinates};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

pub const RTE_PRESETS: [&str; 3] = ["isotropic", "fig7", "henyey_greenstein"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Problem {
    Elliptic,
    Rte,
    Semilinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Direct,
    Basis,
    Schwarz,
    ReducedSchwarz,
    Manifold,
    SvdBench,
}

impl Method {
    fn uses_partition(self) -> bool {
        matches!(self, Method::Basis | Method::Schwarz | Method::ReducedSchwarz)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediaSpec {
    pub preset: String,
    pub epsilon: f64,
    /// Second scale of the heterogeneous transport kernel.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    /// Henyey-Greenstein anisotropy.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<f64>,
}

/// Unit-domain grid given by cell counts per axis or by a spacing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Cells { cells: Vec<usize> },
    Spacing { h: f64, dim: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionSpec {
    pub counts: Vec<usize>,
    #[serde(default = "default_overlap")]
    pub overlap: usize,
}

fn default_overlap() -> usize {
    2
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisChoice {
    Interface,
    Random,
    Full,
}

/// Target rank: a number, or `"full"` for the largest rank each patch allows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RankSpec {
    Value(usize),
    Named(FullRank),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FullRank {
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerChoice {
    SourceModes,
    BoundaryValues,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MethodParams {
    pub k_m: usize,
    pub basis: BasisChoice,
    pub r: RankSpec,
    pub p: usize,
    pub tol: f64,
    pub t_max: usize,
    pub n: usize,
    pub k: usize,
    pub sampler: SamplerChoice,
    pub sampler_dim: usize,
    pub amplitude: f64,
    pub queries: usize,
    pub bench_rows: usize,
    pub bench_cols: usize,
    pub trials: usize,
    /// Solve the global fine problem as an oracle and report errors.
    pub reference: bool,
}

impl Default for MethodParams {
    fn default() -> Self {
        Self {
            k_m: 50,
            basis: BasisChoice::Interface,
            r: RankSpec::Value(10),
            p: 5,
            tol: 1e-8,
            t_max: 500,
            n: 200,
            k: 3,
            sampler: SamplerChoice::SourceModes,
            sampler_dim: 2,
            amplitude: 40.0,
            queries: 5,
            bench_rows: 200,
            bench_cols: 100,
            trials: 20,
            reference: true,
        }
    }
}

/// Global boundary data. Points are `(x, y)` for the elliptic problem and
/// `(x, v)` for transport.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundarySpec {
    /// `c₀ + c₁ p₀ + c₂ p₁`.
    Affine { coefficients: Vec<f64> },
    /// `sin(fπ p₀) + cos(fπ p₁)`.
    Trig { frequency: f64 },
    /// Independent standard normal values times `scale`.
    Random { scale: f64 },
}

impl Default for BoundarySpec {
    fn default() -> Self {
        BoundarySpec::Trig { frequency: 1.0 }
    }
}

impl BoundarySpec {
    pub fn eval(&self, p: &[f64]) -> f64 {
        let y = p.get(1).copied().unwrap_or(0.0);
        match self {
            BoundarySpec::Affine { coefficients: c } => {
                c.first().copied().unwrap_or(0.0)
                    + c.get(1).copied().unwrap_or(0.0) * p[0]
                    + c.get(2).copied().unwrap_or(0.0) * y
            }
            BoundarySpec::Trig { frequency: f } => {
                let w = f * std::f64::consts::PI;
                (w * p[0]).sin() + (w * y).cos()
            }
            BoundarySpec::Random { .. } => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub problem: Problem,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub media: Option<MediaSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    /// Discrete ordinates for transport.
    #[serde(default = "default_ordinates")]
    pub ordinates: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partition: Option<PartitionSpec>,
    pub method: Method,
    #[serde(default)]
    pub params: MethodParams,
    #[serde(default)]
    pub boundary: BoundarySpec,
    pub seed: u64,
    pub output: PathBuf,
}

fn default_ordinates() -> usize {
    16
}

/// Physical setup resolved from a validated configuration.
#[derive(Debug, Clone)]
pub struct Setup {
    pub grid: Option<Grid>,
    pub partition: Option<Partition>,
    pub ordinates: Option<Ordinates>,
}

fn invalid(field: &str, message: impl Into<String>) -> CliError {
    CliError::Validation {
        field: field.to_string(),
        message: message.into(),
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| invalid("config", e.to_string()))
    }

    pub fn media(&self) -> Result<Media, CliError> {
        let spec = self.media.as_ref().ok_or_else(|| invalid("media", "required for this problem"))?;
        let preset = match self.problem {
            Problem::Semilinear => "periodic_1d",
            _ => spec.preset.as_str(),
        };
        Media::preset(preset, spec.epsilon).map_err(|e| invalid("media.preset", e.to_string()))
    }

    pub fn kernel(&self) -> Result<CollisionKernel, CliError> {
        let spec = self.media.as_ref().ok_or_else(|| invalid("media", "required for this problem"))?;
        let built = match spec.preset.as_str() {
            "isotropic" => CollisionKernel::isotropic(spec.sigma.unwrap_or(1.0), spec.epsilon),
            "fig7" => CollisionKernel::heterogeneous(spec.epsilon, spec.epsilon2.unwrap_or(1.0 / 9.0)),
            "henyey_greenstein" => CollisionKernel::henyey_greenstein(spec.g.unwrap_or(0.5), spec.epsilon),
            other => {
                return Err(invalid(
                    "media.preset",
                    format!("unknown transport preset {other:?}; valid presets: {}", RTE_PRESETS.join(", ")),
                ))
            }
        };
        built.map_err(|e| invalid("media", e.to_string()))
    }

    fn build_grid(&self) -> Result<Grid, CliError> {
        let spec = self.grid.as_ref().ok_or_else(|| invalid("grid", "required for this problem"))?;
        let axes: Vec<Axis> = match spec {
            GridSpec::Cells { cells } => cells
                .iter()
                .map(|&c| Axis::new(0.0, 1.0, c))
                .collect::<Result<_, _>>()
                .map_err(|e| invalid("grid.cells", e.to_string()))?,
            GridSpec::Spacing { h, dim } => {
                let axis = Axis::from_spacing(0.0, 1.0, *h).map_err(|e| invalid("grid.h", e.to_string()))?;
                vec![axis; *dim]
            }
        };
        let want = match self.problem {
            Problem::Elliptic => [1, 2].contains(&axes.len()),
            Problem::Rte | Problem::Semilinear => axes.len() == 1,
        };
        if !want {
            return Err(invalid(
                "grid",
                format!("{} axes are not supported for problem {:?}", axes.len(), self.problem),
            ));
        }
        if axes.iter().any(|a| a.cells < 2) {
            return Err(invalid("grid", "every axis needs at least 2 cells"));
        }
        Ok(match axes.as_slice() {
            [x] => Grid::new_1d(*x),
            [x, y] => Grid::new_2d(*x, *y),
            _ => unreachable!("axis count checked above"),
        })
    }

    /// Checks presets, dimensions and parameters without solving anything.
    pub fn validate(&self) -> Result<Setup, CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(invalid(
                "schema_version",
                format!("expected {SCHEMA_VERSION}, got {}", self.schema_version),
            ));
        }
        if self.output.as_os_str().is_empty() {
            return Err(invalid("output", "must name a directory"));
        }
        let prm = &self.params;
        let allowed = match self.problem {
            Problem::Semilinear => matches!(self.method, Method::Direct | Method::Manifold | Method::SvdBench),
            _ => self.method != Method::Manifold,
        };
        if !allowed {
            return Err(invalid(
                "method",
                format!("method {:?} is not available for problem {:?}", self.method, self.problem),
            ));
        }

        if self.method == Method::SvdBench {
            let RankSpec::Value(r) = prm.r else {
                return Err(invalid("params.r", "svd-bench needs a numeric rank"));
            };
            if r == 0 || prm.p < 2 {
                return Err(invalid("params", "svd-bench needs r >= 1 and p >= 2"));
            }
            if r + prm.p > prm.bench_rows.min(prm.bench_cols) {
                return Err(invalid("params", "r + p exceeds the benchmark matrix size"));
            }
            if prm.trials == 0 {
                return Err(invalid("params.trials", "must be at least 1"));
            }
            return Ok(Setup {
                grid: None,
                partition: None,
                ordinates: None,
            });
        }

        let spec = self.media.as_ref().ok_or_else(|| invalid("media", "required for this problem"))?;
        if !(spec.epsilon > 0.0 && spec.epsilon.is_finite()) {
            return Err(invalid("media.epsilon", "must be positive"));
        }
        let mut ordinates = None;
        match self.problem {
            Problem::Elliptic => {
                if !PRESETS.contains(&spec.preset.as_str()) {
                    return Err(invalid(
                        "media.preset",
                        format!("unknown preset {:?}; valid presets: {}", spec.preset, PRESETS.join(", ")),
                    ));
                }
                self.media()?;
            }
            Problem::Rte => {
                self.kernel()?;
                ordinates =
                    Some(Ordinates::gauss_legendre(self.ordinates).map_err(|e| invalid("ordinates", e.to_string()))?);
            }
            Problem::Semilinear => {
                if prm.k == 0 || prm.n <= prm.k {
                    return Err(invalid("params", "manifold needs k >= 1 and n > k"));
                }
                if prm.sampler_dim == 0 || prm.queries == 0 {
                    return Err(invalid("params", "sampler_dim and queries must be at least 1"));
                }
            }
        }
        let grid = self.build_grid()?;
        if let BoundarySpec::Affine { coefficients } = &self.boundary {
            if coefficients.len() > 3 {
                return Err(invalid("boundary.coefficients", "at most 3 coefficients"));
            }
        }

        let mut partition = None;
        if self.method.uses_partition() {
            let pspec = self
                .partition
                .as_ref()
                .ok_or_else(|| invalid("partition", format!("required by method {:?}", self.method)))?;
            if pspec.counts.len() != grid.dim() {
                return Err(invalid(
                    "partition.counts",
                    format!("expected {} counts, got {}", grid.dim(), pspec.counts.len()),
                ));
            }
            let part = Partition::build(&grid, &pspec.counts, pspec.overlap)
                .map_err(|e| invalid("partition", e.to_string()))?;
            if prm.tol <= 0.0 || prm.t_max == 0 {
                return Err(invalid("params", "tol must be positive and t_max at least 1"));
            }
            if self.method == Method::Basis && prm.k_m == 0 {
                return Err(invalid("params.k_m", "must be at least 1"));
            }
            if self.method == Method::ReducedSchwarz {
                let per_patch = |m: usize| match &ordinates {
                    Some(o) => o.len(),
                    None => part.patches[m].ring.len(),
                };
                let smallest = (0..part.len()).map(per_patch).min().unwrap_or(0);
                if prm.p == 0 {
                    return Err(invalid("params.p", "must be at least 1"));
                }
                match prm.r {
                    RankSpec::Value(r) if r == 0 || r + prm.p > smallest => {
                        return Err(invalid(
                            "params.r",
                            format!("r + p = {} must lie in [2, {smallest}] (smallest patch boundary)", r + prm.p),
                        ))
                    }
                    RankSpec::Named(FullRank::Full) if prm.p >= smallest => {
                        return Err(invalid("params.p", "oversampling leaves no rank on some patch"));
                    }
                    _ => {}
                }
            }
            partition = Some(part);
        }
        Ok(Setup {
            grid: Some(grid),
            partition,
            ordinates,
        })
    }
}
