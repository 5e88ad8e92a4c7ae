//! JSON description of a system, as accepted by the command-line tool.
//!
//! ```json
//! {"kind": "matrix", "a": [[0.0]], "b": [[1.0]]}
//! {"kind": "point_heat", "x0": 0.7071067811865476, "c": 5.0, "modes": 16}
//! {"kind": "point_heat", "x0": "cf", "depth": 3, "c": 0.0, "modes": 8}
//! {"kind": "point_heat", "x0": {"num": 1, "den": 2}, "c": 0.0, "modes": 8}
//! {"kind": "hermite", "c": 1.0, "set": [[0.0, null]], "modes": 10}
//! {"kind": "fractional", "s": 0.5, "c": 2.0, "set": [[0.2, 0.6]], "modes": 20}
//! {"kind": "periodic_l2", "modes": 10}
//! ```
//! A `null` interval end is infinite.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{build_system, fractional_heat, hermite_heat, point_control_heat_at, LtiSystem, PointLocation, SpectralSystem};
use crate::error::{Error, Result};
use crate::periodic::{build_example4, PeriodicSystem};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum X0Field {
    Value(f64),
    Rational { num: u64, den: u64 },
    /// Only `"cf"` is recognised.
    Keyword(String),
}

fn default_series_terms() -> usize {
    12
}

fn default_depth() -> usize {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemSpec {
    Matrix {
        a: Vec<Vec<f64>>,
        b: Vec<Vec<f64>>,
    },
    PointHeat {
        x0: X0Field,
        c: f64,
        modes: usize,
        #[serde(default = "default_depth")]
        depth: usize,
    },
    Hermite {
        c: f64,
        set: Vec<(Option<f64>, Option<f64>)>,
        modes: usize,
    },
    Fractional {
        s: f64,
        c: f64,
        set: Vec<(f64, f64)>,
        modes: usize,
    },
    PeriodicL2 {
        modes: usize,
        #[serde(default = "default_series_terms")]
        series_terms: usize,
    },
}

#[derive(Debug, Clone)]
pub enum BuiltSystem {
    Lti {
        system: LtiSystem,
        spectral: Option<SpectralSystem>,
    },
    Periodic(PeriodicSystem),
}

pub fn parse_system_spec(text: &str) -> Result<SystemSpec> {
    serde_json::from_str(text).map_err(|e| Error::Spec(e.to_string()))
}

fn rows_to_matrix(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    let nr = rows.len();
    let nc = rows.first().map_or(0, |r| r.len());
    if nr == 0 || nc == 0 {
        return Err(Error::Spec(format!("{what} is empty")));
    }
    if rows.iter().any(|r| r.len() != nc) {
        return Err(Error::Spec(format!("{what} is ragged")));
    }
    Ok(DMatrix::from_fn(nr, nc, |i, j| rows[i][j]))
}

impl SystemSpec {
    pub fn build(&self) -> Result<BuiltSystem> {
        let spectral = |s: SpectralSystem| BuiltSystem::Lti {
            system: s.to_lti(),
            spectral: Some(s),
        };
        match self {
            SystemSpec::Matrix { a, b } => Ok(BuiltSystem::Lti {
                system: build_system(rows_to_matrix(a, "a")?, rows_to_matrix(b, "b")?)?,
                spectral: None,
            }),
            SystemSpec::PointHeat { x0, c, modes, depth } => {
                let loc = match x0 {
                    X0Field::Value(v) => PointLocation::Real(*v),
                    X0Field::Rational { num, den } => PointLocation::Rational { num: *num, den: *den },
                    X0Field::Keyword(k) if k == "cf" => PointLocation::ContinuedFraction { depth: *depth },
                    X0Field::Keyword(k) => return Err(Error::Spec(format!("unknown x0 keyword {k:?}"))),
                };
                Ok(spectral(point_control_heat_at(loc, *c, *modes)?))
            }
            SystemSpec::Hermite { c, set, modes } => {
                let set: Vec<(f64, f64)> = set
                    .iter()
                    .map(|(lo, hi)| (lo.unwrap_or(f64::NEG_INFINITY), hi.unwrap_or(f64::INFINITY)))
                    .collect();
                Ok(spectral(hermite_heat(*c, &set, *modes)?))
            }
            SystemSpec::Fractional { s, c, set, modes } => Ok(spectral(fractional_heat(*s, *c, set, *modes)?)),
            SystemSpec::PeriodicL2 { modes, series_terms } => {
                Ok(BuiltSystem::Periodic(build_example4(*modes, *series_terms)?))
            }
        }
    }
}
