//! Machine-readable run reports.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::kaluza_klein::PointClass;
use crate::residual::Residual;
use crate::sampling::PointSpec;

pub const TOOL: &str = "kkweyl";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    NotApplicable,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::NotApplicable => "not_applicable",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub id: String,
    /// The identity being checked, written out.
    pub formula: String,
    pub status: Status,
    /// `None` when the check could not be evaluated.
    pub max_residual: Option<f64>,
    pub scale: Option<f64>,
    /// Bound on the relative (or, below the zero scale, absolute) residual.
    pub tolerance: f64,
    pub points: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CheckRecord {
    pub fn from_residual(id: &str, formula: &str, r: Residual, tol: f64, points: usize) -> Self {
        CheckRecord {
            id: id.to_string(),
            formula: formula.to_string(),
            status: if r.within(tol) { Status::Pass } else { Status::Fail },
            max_residual: Some(r.relative()),
            scale: Some(r.scale),
            tolerance: tol,
            points,
            note: None,
        }
    }

    pub fn failed(id: &str, formula: &str, tol: f64, reason: String) -> Self {
        CheckRecord {
            id: id.to_string(),
            formula: formula.to_string(),
            status: Status::Fail,
            max_residual: None,
            scale: None,
            tolerance: tol,
            points: 0,
            note: Some(reason),
        }
    }

    /// Mark as not applicable, keeping the measured residual.
    pub fn not_applicable(mut self, reason: impl Into<String>) -> Self {
        self.status = Status::NotApplicable;
        self.note = Some(reason.into());
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

/// Geometry facts established by a verification run.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Findings {
    /// `self-dual`, `anti-self-dual`, `conformally flat`, `neither`, or
    /// `not applicable (lorentzian)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub self_duality: Option<String>,
    /// Weyl potential that solves the Einstein-Weyl equations, e.g. `w = -f`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub einstein_weyl_potential: Option<String>,
    /// Mean of `r − 5f²` over the sample.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_estimate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_spread: Option<f64>,
    /// Mean of `div J / P` where `P` is resolvable.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chern_simons_ratio: Option<f64>,
    pub class_counts: BTreeMap<String, usize>,
}

/// One row of a scan.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRecord {
    pub coordinates: Vec<f64>,
    pub p_full: f64,
    pub p_reduced: f64,
    pub class: PointClass,
    pub c_norm: f64,
    pub k_norm: f64,
}

pub const SCAN_CSV_COLUMNS: [&str; 5] = ["p_full", "p_reduced", "class", "c_norm", "k_norm"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigEcho {
    pub geometry: String,
    pub kind: String,
    pub signature: String,
    pub coordinates: Vec<String>,
    pub params: BTreeMap<String, f64>,
    pub points: PointSpec,
    pub residual_tol: f64,
    pub class_tol: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub passed: usize,
    pub failed: usize,
    pub not_applicable: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    /// Seconds since the Unix epoch; absent in reproducible runs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
    pub command: String,
    pub config: ConfigEcho,
    pub checks: Vec<CheckRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub findings: Option<Findings>,
    pub points: Vec<ScanRecord>,
    pub summary: Summary,
}

impl Report {
    /// Sorts checks by id and fills the summary.
    pub fn new(command: &str, config: ConfigEcho, mut checks: Vec<CheckRecord>) -> Self {
        checks.sort_by(|a, b| a.id.cmp(&b.id));
        let mut summary = Summary::default();
        for c in &checks {
            match c.status {
                Status::Pass => summary.passed += 1,
                Status::Fail => summary.failed += 1,
                Status::NotApplicable => summary.not_applicable += 1,
            }
        }
        Report {
            tool: TOOL.to_string(),
            version: VERSION.to_string(),
            timestamp: None,
            command: command.to_string(),
            config,
            checks,
            findings: None,
            points: Vec::new(),
            summary,
        }
    }

    pub fn all_passed(&self) -> bool {
        self.summary.failed == 0
    }

    /// Human-readable rendering.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{} {} {} {} ({} {}, {} points)\n",
            self.tool,
            self.version,
            self.command,
            self.config.geometry,
            self.config.kind,
            self.config.signature,
            self.config.points.count()
        );
        let width = self.checks.iter().map(|c| c.id.len()).max().unwrap_or(0);
        for c in &self.checks {
            let res = c.max_residual.map_or_else(|| "-".to_string(), |r| format!("{r:.3e}"));
            out += &format!(
                "  {:<14} {:<width$}  residual {:>10}  tol {:.0e}  {}\n",
                c.status.as_str(),
                c.id,
                res,
                c.tolerance,
                c.formula
            );
            if let Some(n) = &c.note {
                out += &format!("  {:<14} {:<width$}  {}\n", "", "", n);
            }
        }
        if let Some(f) = &self.findings {
            if let Some(s) = &f.self_duality {
                out += &format!("  self-duality: {s}\n");
            }
            if let Some(s) = &f.einstein_weyl_potential {
                out += &format!("  Einstein-Weyl potential: {s}\n");
            }
            if let Some(c) = f.c_estimate {
                out += &format!(
                    "  r - 5 f^2 mean: {c:.12e} (spread {:.3e})\n",
                    f.c_spread.unwrap_or(0.0)
                );
            }
            if let Some(r) = f.chern_simons_ratio {
                out += &format!("  div J / P: {r:.12e}\n");
            }
            for (k, v) in &f.class_counts {
                out += &format!("  class {k}: {v}\n");
            }
        }
        out += &format!(
            "summary: {} passed, {} failed, {} not applicable\n",
            self.summary.passed, self.summary.failed, self.summary.not_applicable
        );
        out
    }

    /// Scan table with coordinate columns named after the chart.
    pub fn to_csv(&self) -> String {
        let mut out = self.config.coordinates.join(",");
        for c in SCAN_CSV_COLUMNS {
            out.push(',');
            out += c;
        }
        out.push('\n');
        for r in &self.points {
            for x in &r.coordinates {
                out += &format!("{x:e},");
            }
            out += &format!(
                "{:e},{:e},{},{:e},{:e}\n",
                r.p_full, r.p_reduced, r.class, r.c_norm, r.k_norm
            );
        }
        out
    }
}
