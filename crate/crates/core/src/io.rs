//! Bit-stable JSON: object keys sorted, floats written with 17 significant
//! digits, plus plain document shapes for the library's data types.

use std::fmt::Write as _;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::geometry::PointCloud;
use crate::monotone::PairSet;
use crate::transport::{Coupling, DiscreteMeasure};

/// Pretty JSON with sorted keys and `{:.16e}` floats, ending in a newline.
pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value).map_err(|e| Error::Internal(e.to_string()))?;
    let mut out = String::new();
    write_value(&mut out, &v, 0);
    out.push('\n');
    Ok(out)
}

pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::invalid(format!("JSON: {e}")))
}

/// Float rendering shared by the JSON and CSV writers; `-0` prints as `0`.
pub fn format_float(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.16e}")
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

fn write_value(out: &mut String, v: &Value, level: usize) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                out.push_str(&format_float(n.as_f64().expect("f64 number")));
            } else {
                let _ = write!(out, "{n}");
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            // short numeric rows stay on one line
            if items.iter().all(|x| x.is_number()) {
                out.push('[');
                for (k, x) in items.iter().enumerate() {
                    if k > 0 {
                        out.push_str(", ");
                    }
                    write_value(out, x, level);
                }
                out.push(']');
                return;
            }
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push_str("[\n");
            for (k, x) in items.iter().enumerate() {
                indent(out, level + 1);
                write_value(out, x, level + 1);
                out.push_str(if k + 1 < items.len() { ",\n" } else { "\n" });
            }
            indent(out, level);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (k, key) in keys.iter().enumerate() {
                indent(out, level + 1);
                out.push_str(&Value::String((*key).clone()).to_string());
                out.push_str(": ");
                write_value(out, &map[*key], level + 1);
                out.push_str(if k + 1 < keys.len() { ",\n" } else { "\n" });
            }
            indent(out, level);
            out.push('}');
        }
    }
}

/// `{"points": [[...], ...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointsDoc {
    pub points: Vec<Vec<f64>>,
}

impl PointsDoc {
    pub fn from_cloud(c: &PointCloud) -> Self {
        PointsDoc { points: c.to_rows() }
    }

    pub fn to_cloud(&self, dim_hint: Option<usize>) -> Result<PointCloud> {
        let dim = match (dim_hint, self.points.first()) {
            (Some(d), _) => d,
            (None, Some(p)) => p.len(),
            (None, None) => return Err(Error::Empty("points")),
        };
        PointCloud::from_rows(dim, &self.points)
    }
}

/// `{"points": [...], "weights": [...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureDoc {
    pub points: Vec<Vec<f64>>,
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
}

impl MeasureDoc {
    pub fn from_measure(m: &DiscreteMeasure) -> Self {
        MeasureDoc { points: m.points().to_rows(), weights: Some(m.weights().to_vec()) }
    }

    /// Uniform weights when none are given.
    pub fn to_measure(&self, dim_hint: Option<usize>) -> Result<DiscreteMeasure> {
        let cloud = PointsDoc { points: self.points.clone() }.to_cloud(dim_hint)?;
        match &self.weights {
            Some(w) => DiscreteMeasure::new(cloud, w.clone()),
            None => DiscreteMeasure::uniform(cloud),
        }
    }
}

/// `{"xs": [...], "ys": [...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairsDoc {
    pub xs: Vec<Vec<f64>>,
    pub ys: Vec<Vec<f64>>,
}

impl PairsDoc {
    pub fn from_pairs(s: &PairSet) -> Self {
        PairsDoc { xs: s.xs().to_rows(), ys: s.ys().to_rows() }
    }

    pub fn to_pairs(&self, dim_hint: Option<usize>) -> Result<PairSet> {
        let xs = PointsDoc { points: self.xs.clone() }.to_cloud(dim_hint)?;
        let ys = PointsDoc { points: self.ys.clone() }.to_cloud(Some(xs.dim()))?;
        PairSet::new(xs, ys)
    }
}

/// One plan entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Triplet {
    pub i: usize,
    pub j: usize,
    pub mass: f64,
}

/// Sparse plan with its cost.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingDoc {
    pub cost: f64,
    pub plan: Vec<Triplet>,
}

impl CouplingDoc {
    pub fn from_coupling(c: &Coupling) -> Self {
        CouplingDoc {
            cost: c.cost(),
            plan: c.entries().iter().map(|&(i, j, mass)| Triplet { i, j, mass }).collect(),
        }
    }
}
