//! Side-by-side comparison of two run directories.

use std::fs;
use std::path::Path;

use serde_json::{json, Value};

use multiscale::io::read_field_csv;

use crate::error::{io_error, CliError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Metric {
    L2,
    Linf,
}

const COORD_TOL: f64 = 1e-12;

fn read_report(dir: &Path) -> Result<Value, CliError> {
    let path = dir.join("report.json");
    let text = fs::read_to_string(&path).map_err(io_error(format!("reading {}", path.display())))?;
    let report: Value = serde_json::from_str(&text).map_err(|e| CliError::Report {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    if report["status"] != "ok" {
        return Err(CliError::Report {
            path: path.display().to_string(),
            message: format!("run status is {}", report["status"]),
        });
    }
    Ok(report)
}

fn difference(a: &[f64], b: &[f64], metric: Metric) -> f64 {
    let (num, den) = match metric {
        Metric::L2 => (
            a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt(),
            b.iter().map(|y| y * y).sum::<f64>().sqrt(),
        ),
        Metric::Linf => (
            a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs())),
            b.iter().fold(0.0_f64, |m, y| m.max(y.abs())),
        ),
    };
    if den > 0.0 {
        num / den
    } else {
        num
    }
}

fn ratio(a: &Value, b: &Value) -> Value {
    match (a.as_f64(), b.as_f64()) {
        (Some(x), Some(y)) if y > 0.0 => json!(x / y),
        _ => Value::Null,
    }
}

/// Relative difference of the two solutions (second run as reference) plus
/// timing ratios and recorded error floors.
pub fn compare(a: &Path, b: &Path, metric: Metric) -> Result<Value, CliError> {
    let (ra, rb) = (read_report(a)?, read_report(b)?);
    let load = |dir: &Path| {
        let path = dir.join("solution.csv");
        read_field_csv(&path).map_err(|e| CliError::Report {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    };
    let (ca, va) = load(a)?;
    let (cb, vb) = load(b)?;
    if ca.len() != cb.len() {
        return Err(CliError::Incompatible(format!("{} versus {} lattice entries", ca.len(), cb.len())));
    }
    let mismatch = ca
        .iter()
        .zip(&cb)
        .position(|(p, q)| p.len() != q.len() || p.iter().zip(q).any(|(x, y)| (x - y).abs() > COORD_TOL));
    if let Some(row) = mismatch {
        return Err(CliError::Incompatible(format!("coordinates differ at row {row}")));
    }

    let timing = |key: &str| ratio(&ra["timings"][key], &rb["timings"][key]);
    Ok(json!({
        "metric": match metric { Metric::L2 => "l2", Metric::Linf => "linf" },
        "relative_difference": difference(&va, &vb, metric),
        "entries": va.len(),
        "timing_ratios": {
            "offline_s": timing("offline_s"),
            "online_s": timing("online_s"),
        },
        "error_floors": [ra["metrics"]["error_floor"].clone(), rb["metrics"]["error_floor"].clone()],
        "methods": [ra["config"]["method"].clone(), rb["config"]["method"].clone()],
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_metrics() {
        let b = [3.0, 4.0];
        assert_eq!(difference(&b, &b, Metric::L2), 0.0);
        assert!((difference(&[3.0, 5.0], &b, Metric::L2) - 0.2).abs() < 1e-15);
        assert!((difference(&[3.0, 6.0], &b, Metric::Linf) - 0.5).abs() < 1e-15);
        assert_eq!(difference(&[1.0], &[0.0], Metric::Linf), 1.0);
    }
}
