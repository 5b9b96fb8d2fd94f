//! Coefficient fields `a(x, x/ε)` for the elliptic equation.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

pub const PRESETS: [&str; 5] = ["fig5", "fig3_channel", "fig7", "constant", "periodic_1d"];

type Eval = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A scalar coefficient field evaluable at points of the unit square (or
/// unit interval; a missing second coordinate is read as 0).
#[derive(Clone)]
pub struct Media {
    label: String,
    epsilon: f64,
    eval: Eval,
}

impl fmt::Debug for Media {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Media")
            .field("label", &self.label)
            .field("epsilon", &self.epsilon)
            .finish()
    }
}

fn xy(p: &[f64]) -> (f64, f64) {
    (p[0], p.get(1).copied().unwrap_or(0.0))
}

impl Media {
    pub fn custom(label: &str, epsilon: f64, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            label: label.to_string(),
            epsilon,
            eval: Arc::new(f),
        }
    }

    pub fn preset(name: &str, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(Error::InvalidParameter(format!("epsilon {epsilon} outside (0, 1]")));
        }
        let e = epsilon;
        let eval: Eval = match name {
            "constant" => Arc::new(|_| 1.0),
            "periodic_1d" => Arc::new(move |p| 2.0 + (2.0 * PI * p[0] / e).sin()),
            "fig5" => Arc::new(move |p| {
                let (x1, x2) = xy(p);
                2.0 + (2.0 * PI * x1).sin() * (2.0 * PI * x2).cos()
                    + (2.0 + 1.8 * (2.0 * PI * x1 / e).sin()) / (2.0 + 1.8 * (2.0 * PI * x2 / e).cos())
                    + (2.0 + (2.0 * PI * x2 / e).sin()) / (2.0 + 1.8 * (2.0 * PI * x1 / e).cos())
            }),
            "fig3_channel" => Arc::new(|p| {
                let (x1, x2) = xy(p);
                if in_channel(x1, x2) {
                    1001.0
                } else {
                    1.0
                }
            }),
            "fig7" => Arc::new(move |p| {
                let (x1, x2) = xy(p);
                (2.0 + 1.8 * (PI * x1 / e).sin()) / (2.0 + 1.8 * (PI * x2 / e).cos())
                    + (2.0 + (PI * x2 / e).sin()) / (2.0 + 1.8 * (PI * x1).sin())
            }),
            _ => {
                return Err(Error::UnknownPreset {
                    name: name.to_string(),
                    valid: PRESETS.join(", "),
                })
            }
        };
        Ok(Self {
            label: name.to_string(),
            epsilon,
            eval,
        })
    }

    pub fn value(&self, p: &[f64]) -> f64 {
        (self.eval)(p)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

/// Membership in the spiral channel `x1 cos(100 r) ≤ x2 − 1/2`, `r` the
/// distance to the centre of the unit square.
pub fn in_channel(x1: f64, x2: f64) -> bool {
    let r = ((x1 - 0.5).powi(2) + (x2 - 0.5).powi(2)).sqrt();
    x1 * (100.0 * r).cos() <= x2 - 0.5
}
