//! Built-in geometries and the metric file format.

mod builtins;
mod expr;
mod metric_file;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{MetricField, Signature};
use crate::kaluza_klein::{assemble_kk, extract_kk, point4, KKTriple};

pub use builtins::{builtin, builtin_names};
pub use expr::{parse_expr, BinOp, Compiled, Expr, Func, ParseError, ParseErrorKind};
pub use metric_file::{parse_metric_file, parse_metric_file_with};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometryKind {
    Metric4,
    Metric3,
    KkTriple,
}

impl GeometryKind {
    pub fn as_str(self) -> &'static str {
        match self {
            GeometryKind::Metric4 => "metric4",
            GeometryKind::Metric3 => "metric3",
            GeometryKind::KkTriple => "kk_triple",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "metric4" => GeometryKind::Metric4,
            "metric3" => GeometryKind::Metric3,
            "kk_triple" => GeometryKind::KkTriple,
            _ => return None,
        })
    }

    /// Dimension of the chart sample points live in.
    pub fn chart_dim(self) -> usize {
        match self {
            GeometryKind::Metric4 => 4,
            GeometryKind::Metric3 | GeometryKind::KkTriple => 3,
        }
    }
}

#[derive(Debug, Clone)]
pub enum Geometry {
    Metric(MetricField),
    Kk(KKTriple),
}

/// Closed sampling interval for one coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Parameter {
    pub name: String,
    pub default: f64,
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct GeometryEntry {
    pub name: String,
    pub kind: GeometryKind,
    pub signature: Signature,
    pub coordinates: Vec<String>,
    pub params: Vec<Parameter>,
    pub domain: Vec<Interval>,
    pub provenance: String,
    pub geometry: Geometry,
}

/// Listing view of an entry, without the component functions.
#[derive(Debug, Clone, Serialize)]
pub struct EntrySummary {
    pub name: String,
    pub kind: GeometryKind,
    pub signature: Signature,
    pub coordinates: Vec<String>,
    pub params: Vec<Parameter>,
    pub domain: Vec<Interval>,
    pub provenance: String,
}

impl GeometryEntry {
    pub fn summary(&self) -> EntrySummary {
        EntrySummary {
            name: self.name.clone(),
            kind: self.kind,
            signature: self.signature,
            coordinates: self.coordinates.clone(),
            params: self.params.clone(),
            domain: self.domain.clone(),
            provenance: self.provenance.clone(),
        }
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.iter().find(|p| p.name == name).map(|p| p.value)
    }

    /// The 4-metric, assembled from the ansatz for Kaluza-Klein entries.
    pub fn metric4(&self) -> Option<MetricField> {
        match &self.geometry {
            Geometry::Metric(g) if g.dim() == 4 => Some(g.clone()),
            Geometry::Metric(_) => None,
            Geometry::Kk(kk) => Some(assemble_kk(kk).renamed(self.name.clone())),
        }
    }

    /// The 3-metric of a `metric3` entry.
    pub fn metric3(&self) -> Option<&MetricField> {
        match &self.geometry {
            Geometry::Metric(g) if g.dim() == 3 => Some(g),
            _ => None,
        }
    }

    /// Reduced data: the stored triple, or the reduction of a 4-metric along
    /// its last coordinate, validated at `points` (chart points).
    pub fn kk_triple(&self, points: &[Vec<f64>]) -> Result<Option<KKTriple>> {
        match &self.geometry {
            Geometry::Kk(kk) => Ok(Some(kk.clone())),
            Geometry::Metric(g) if g.dim() == 4 => extract_kk(g, self.signature, points).map(Some),
            Geometry::Metric(_) => Ok(None),
        }
    }

    /// 4-chart point for a sample point of this entry.
    pub fn point4(&self, p: &[f64]) -> Vec<f64> {
        match self.kind {
            GeometryKind::KkTriple => point4(p),
            _ => p.to_vec(),
        }
    }

    /// Use the other ansatz for a Kaluza-Klein entry. Other kinds only accept
    /// their own signature.
    pub fn with_signature(mut self, signature: Signature) -> Result<Self> {
        if signature == self.signature {
            return Ok(self);
        }
        match &mut self.geometry {
            Geometry::Kk(kk) => {
                kk.signature = signature;
                self.signature = signature;
                Ok(self)
            }
            Geometry::Metric(_) => Err(Error::Signature(format!(
                "`{}` is a {} {} entry; only kk_triple entries take a signature override",
                self.name,
                self.signature.as_str(),
                self.kind.as_str()
            ))),
        }
    }
}

/// Resolve `name` as a builtin, or as a path to a metric file.
pub fn resolve(name: &str, params: &[(String, f64)]) -> Result<GeometryEntry> {
    if builtin_names().contains(&name) {
        return builtin(name, params);
    }
    let path = std::path::Path::new(name);
    if path.is_file() {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidParameter(format!("cannot read {}: {e}", path.display())))?;
        return parse_metric_file_with(&text, params);
    }
    Err(Error::UnknownGeometry(name.to_string()))
}

/// Apply `overrides` to `params`; unknown names are rejected.
pub(crate) fn apply_overrides(params: &mut [Parameter], overrides: &[(String, f64)], owner: &str) -> Result<()> {
    for (name, value) in overrides {
        let Some(i) = params.iter().position(|p| &p.name == name) else {
            let known: Vec<&str> = params.iter().map(|p| p.name.as_str()).collect();
            return Err(Error::InvalidParameter(format!(
                "`{owner}` has no parameter `{name}` (known: {})",
                known.join(", ")
            )));
        };
        if !value.is_finite() {
            return Err(Error::InvalidParameter(format!("{name} = {value} is not finite")));
        }
        params[i].value = *value;
    }
    Ok(())
}
