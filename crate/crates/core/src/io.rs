//! CSV and JSON persistence for fields, bases, reduced maps, error histories
//! and sample clouds. Numbers are written like C's `%.17g`, which round-trips
//! every `f64` exactly.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::basis::{BasisKind, LocalBasis};
use crate::error::{Error, Result};
use crate::linalg::SvdTriple;
use crate::manifold::{SampleCloud, Sampler};
use crate::partition::{Grid, Partition};
use crate::rte::Ordinates;
use crate::schwarz::{HistoryRow, ReducedMap};

/// Formats `x` as C's `printf("%.17g", x)`.
pub fn format_g17(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..17).contains(&exp) {
        let m = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (16 - exp) as usize;
        strip_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    Ok(BufWriter::new(fs::File::create(path)?))
}

/// Writes rows of numbers under an optional header line.
pub fn write_csv(path: &Path, header: Option<&[&str]>, rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    let mut w = create(path)?;
    if let Some(h) = header {
        writeln!(w, "{}", h.join(","))?;
    }
    for row in rows {
        let line: Vec<String> = row.iter().map(|&v| format_g17(v)).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a numeric CSV; a first line that does not parse is returned as the
/// header.
pub fn read_csv(path: &Path) -> Result<(Option<Vec<String>>, Vec<Vec<f64>>)> {
    let reader = BufReader::new(fs::File::open(path)?);
    let mut header = None;
    let mut rows = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = line.split(',').map(|t| t.trim().parse::<f64>()).collect();
        match parsed {
            Ok(v) => rows.push(v),
            Err(_) if i == 0 => header = Some(line.split(',').map(|t| t.trim().to_string()).collect()),
            Err(_) => {
                return Err(Error::Malformed(format!(
                    "{}: line {} is not numeric",
                    path.display(),
                    i + 1
                )))
            }
        }
    }
    Ok((header, rows))
}

pub fn write_matrix_csv(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    write_csv(path, None, (0..m.nrows()).map(|r| m.row(r).iter().copied().collect()))
}

pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    let (_, rows) = read_csv(path)?;
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::Malformed(format!("{}: ragged rows", path.display())));
    }
    Ok(DMatrix::from_fn(rows.len(), cols, |r, c| rows[r][c]))
}

/// Writes a lattice field: `x,value` (1D), `x1,x2,value` (2D) or `x,v,value`
/// when ordinates are given.
pub fn write_field_csv(path: &Path, grid: &Grid, values: &[f64], ordinates: Option<&Ordinates>) -> Result<()> {
    let c = ordinates.map_or(1, Ordinates::len);
    crate::error::check_len("field", grid.node_count() * c, values.len())?;
    match (ordinates, grid.dim()) {
        (Some(o), _) => write_csv(
            path,
            Some(&["x", "v", "value"]),
            (0..values.len()).map(|e| vec![grid.coords(e / c)[0], o.nodes[e % c], values[e]]),
        ),
        (None, 1) => write_csv(
            path,
            Some(&["x", "value"]),
            (0..values.len()).map(|n| vec![grid.coords(n)[0], values[n]]),
        ),
        (None, _) => write_csv(
            path,
            Some(&["x1", "x2", "value"]),
            (0..values.len()).map(|n| {
                let p = grid.coords(n);
                vec![p[0], p[1], values[n]]
            }),
        ),
    }
}

/// Reads a field written by [`write_field_csv`]: the coordinate columns and
/// the values.
pub fn read_field_csv(path: &Path) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let (_, rows) = read_csv(path)?;
    let mut coords = Vec::with_capacity(rows.len());
    let mut values = Vec::with_capacity(rows.len());
    for mut r in rows {
        let v = r.pop().ok_or_else(|| Error::Malformed("empty row".into()))?;
        coords.push(r);
        values.push(v);
    }
    Ok((coords, values))
}

pub fn write_history_csv(path: &Path, history: &[HistoryRow]) -> Result<()> {
    let with_ref = history.iter().any(|h| h.relative_error.is_some());
    let header: &[&str] = if with_ref {
        &["t", "max_interface_change", "relative_error"]
    } else {
        &["t", "max_interface_change"]
    };
    write_csv(
        path,
        Some(header),
        history.iter().map(|h| {
            let mut row = vec![h.t as f64, h.max_interface_change];
            if with_ref {
                row.push(h.relative_error.unwrap_or(f64::NAN));
            }
            row
        }),
    )
}

pub fn read_history_csv(path: &Path) -> Result<Vec<HistoryRow>> {
    let (_, rows) = read_csv(path)?;
    Ok(rows
        .into_iter()
        .map(|r| HistoryRow {
            t: r[0] as usize,
            max_interface_change: r[1],
            relative_error: r.get(2).copied(),
        })
        .collect())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(fs::File::open(path)?))?)
}

pub fn write_partition_json(path: &Path, partition: &Partition) -> Result<()> {
    write_json(path, &partition.summary_json())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisManifest {
    pub grid: Grid,
    pub media: String,
    pub kind: BasisKind,
    pub k_m: Vec<usize>,
    pub seeds: Vec<Option<u64>>,
    pub components: usize,
}

/// Stores each patch's basis as `basis_<m>.csv` (columns = basis vectors),
/// its boundary data as `samples_<m>.csv`, and a manifest.
pub fn save_bases(dir: &Path, grid: &Grid, media: &str, components: usize, bases: &[LocalBasis]) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    for b in bases {
        write_matrix_csv(&dir.join(format!("basis_{}.csv", b.patch)), &b.columns)?;
        write_matrix_csv(&dir.join(format!("samples_{}.csv", b.patch)), &b.boundary_samples)?;
    }
    let manifest = BasisManifest {
        grid: grid.clone(),
        media: media.to_string(),
        kind: bases.first().map_or(BasisKind::Random, |b| b.kind),
        k_m: bases.iter().map(LocalBasis::len).collect(),
        seeds: bases.iter().map(|b| b.seed).collect(),
        components,
    };
    let path = dir.join("manifest.json");
    write_json(&path, &manifest)?;
    Ok(path)
}

/// Loads bases saved by [`save_bases`], refusing a different grid.
pub fn load_bases(dir: &Path, grid: &Grid) -> Result<(BasisManifest, Vec<LocalBasis>)> {
    let manifest: BasisManifest = read_json(&dir.join("manifest.json"))?;
    if &manifest.grid != grid {
        return Err(Error::ManifestMismatch(format!(
            "bases were built on {:?}, requested {:?}",
            manifest.grid, grid
        )));
    }
    let mut out = Vec::new();
    for (m, seed) in manifest.seeds.iter().enumerate() {
        out.push(LocalBasis {
            patch: m,
            columns: read_matrix_csv(&dir.join(format!("basis_{m}.csv")))?,
            boundary_samples: read_matrix_csv(&dir.join(format!("samples_{m}.csv")))?,
            kind: manifest.kind,
            seed: *seed,
        });
    }
    Ok((manifest, out))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedMapManifest {
    pub grid: Grid,
    pub media: String,
    pub r: usize,
    pub p: usize,
    pub seeds: Vec<u64>,
    pub targets: Vec<Vec<usize>>,
}

/// Stores each map as `U_<m>.csv`, `S_<m>.csv`, `V_<m>.csv` plus a manifest.
pub fn save_reduced_maps(dir: &Path, grid: &Grid, media: &str, maps: &[ReducedMap]) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    for map in maps {
        let m = map.patch;
        write_matrix_csv(&dir.join(format!("U_{m}.csv")), &map.svd.u)?;
        write_csv(&dir.join(format!("S_{m}.csv")), None, map.svd.s.iter().map(|&s| vec![s]))?;
        write_matrix_csv(&dir.join(format!("V_{m}.csv")), &map.svd.v)?;
    }
    let manifest = ReducedMapManifest {
        grid: grid.clone(),
        media: media.to_string(),
        r: maps.first().map_or(0, |m| m.r),
        p: maps.first().map_or(0, |m| m.p),
        seeds: maps.iter().map(|m| m.seed).collect(),
        targets: maps.iter().map(|m| m.targets.clone()).collect(),
    };
    let path = dir.join("manifest.json");
    write_json(&path, &manifest)?;
    Ok(path)
}

pub fn load_reduced_maps(dir: &Path, grid: &Grid) -> Result<Vec<ReducedMap>> {
    let manifest: ReducedMapManifest = read_json(&dir.join("manifest.json"))?;
    if &manifest.grid != grid {
        return Err(Error::ManifestMismatch(format!(
            "reduced maps were built on {:?}, requested {:?}",
            manifest.grid, grid
        )));
    }
    let mut out = Vec::new();
    for (m, (seed, targets)) in manifest.seeds.iter().zip(&manifest.targets).enumerate() {
        let (_, s) = read_csv(&dir.join(format!("S_{m}.csv")))?;
        out.push(ReducedMap {
            patch: m,
            svd: SvdTriple {
                u: read_matrix_csv(&dir.join(format!("U_{m}.csv")))?,
                s: DVector::from_iterator(s.len(), s.iter().map(|r| r[0])),
                v: read_matrix_csv(&dir.join(format!("V_{m}.csv")))?,
            },
            targets: targets.clone(),
            r: manifest.r,
            p: manifest.p,
            seed: *seed,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloudManifest {
    pub problem: serde_json::Value,
    pub sampler: Sampler,
    pub seed: u64,
    pub samples: usize,
    pub residual_tolerance: f64,
    pub residuals: Vec<f64>,
}

/// Stores a cloud as `inputs.csv` and `outputs.csv` (one sample per row)
/// plus a manifest.
pub fn save_cloud(dir: &Path, cloud: &SampleCloud, problem: serde_json::Value) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_csv(&dir.join("inputs.csv"), None, cloud.inputs.iter().cloned())?;
    write_csv(&dir.join("outputs.csv"), None, cloud.outputs.iter().cloned())?;
    write_json(
        &dir.join("manifest.json"),
        &CloudManifest {
            problem,
            sampler: cloud.sampler.clone(),
            seed: cloud.seed,
            samples: cloud.len(),
            residual_tolerance: crate::manifold::NEWTON_REL_TOL,
            residuals: cloud.residuals.clone(),
        },
    )
}

pub fn load_cloud(dir: &Path) -> Result<(CloudManifest, SampleCloud)> {
    let manifest: CloudManifest = read_json(&dir.join("manifest.json"))?;
    let (_, inputs) = read_csv(&dir.join("inputs.csv"))?;
    let (_, outputs) = read_csv(&dir.join("outputs.csv"))?;
    if inputs.len() != manifest.samples || outputs.len() != manifest.samples {
        return Err(Error::ManifestMismatch(format!(
            "manifest lists {} samples, found {} inputs and {} outputs",
            manifest.samples,
            inputs.len(),
            outputs.len()
        )));
    }
    let cloud = SampleCloud {
        inputs,
        outputs,
        residuals: manifest.residuals.clone(),
        sampler: manifest.sampler.clone(),
        seed: manifest.seed,
    };
    Ok((manifest, cloud))
}
