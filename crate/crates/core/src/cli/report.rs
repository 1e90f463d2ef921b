//! JSON reports. Floats are written with 17 significant digits.

use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

use crate::design::SUPPORT_PRUNE_TOL;
use crate::decision::SUPERMODULARITY_TOL;
use crate::model::{DEDUP_TOL, LOG_RATIO_TOL, NORMALIZATION_TOL};

use super::input::SCHEMA_VERSION;

/// Float written as `d.dddddddddddddddde±x`; non-finite values become `null`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct F17(pub f64);

pub fn format17(x: f64) -> String {
    if x == 0.0 {
        // Normalizes -0.
        return "0.0000000000000000e0".into();
    }
    format!("{x:.16e}")
}

impl Serialize for F17 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return s.serialize_none();
        }
        let raw = RawValue::from_string(format17(self.0)).map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    }
}

pub fn f17s(v: &[f64]) -> Vec<F17> {
    v.iter().copied().map(F17).collect()
}

#[derive(Debug, Serialize)]
pub struct Tolerances {
    pub normalization: F17,
    pub log_ratio: F17,
    pub dedup: F17,
    pub supermodularity: F17,
    pub prune: F17,
    pub membership: F17,
}

impl Tolerances {
    pub fn with_membership(membership: f64) -> Self {
        Self {
            normalization: F17(NORMALIZATION_TOL),
            log_ratio: F17(LOG_RATIO_TOL),
            dedup: F17(DEDUP_TOL),
            supermodularity: F17(SUPERMODULARITY_TOL),
            prune: F17(SUPPORT_PRUNE_TOL),
            membership: F17(membership),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Header {
    pub schema: u32,
    pub command: &'static str,
    pub tolerances: Tolerances,
}

impl Header {
    pub fn new(command: &'static str, membership: f64) -> Self {
        Self { schema: SCHEMA_VERSION, command, tolerances: Tolerances::with_membership(membership) }
    }
}

#[derive(Debug, Serialize)]
pub struct SupportEntry {
    /// Upper-bound signature for count posteriors; absent for databases.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub signature: Option<String>,
    pub weight: F17,
    pub belief: Vec<F17>,
    /// Count marginal of a database posterior.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state_belief: Option<Vec<F17>>,
    pub binding: usize,
    pub value: F17,
}

#[derive(Debug, Serialize)]
pub struct SignalReport {
    pub kind: &'static str,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub rows: Vec<Vec<F17>>,
}

#[derive(Debug, Serialize)]
pub struct DpReport {
    pub verified: bool,
    pub worst_log_ratio: F17,
}

#[derive(Debug, Serialize)]
pub struct GeometricReport {
    pub value: F17,
    pub gap: F17,
}

#[derive(Debug, Serialize)]
pub struct UprrReport {
    pub geometric_dominates: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub peaks: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub feasible_peaks: Option<Vec<Vec<usize>>>,
}

#[derive(Debug, Serialize)]
pub struct SpmReport {
    pub geometric_dominates: bool,
    pub worst_violation: F17,
}

#[derive(Debug, Serialize)]
pub struct MechanismReport {
    #[serde(flatten)]
    pub header: Header,
    pub design: &'static str,
    pub n: usize,
    pub epsilon: F17,
    pub optimum: F17,
    pub no_info_value: F17,
    pub full_info_value: F17,
    pub supermodular: bool,
    pub support: Vec<SupportEntry>,
    pub signal: SignalReport,
    pub dp: DpReport,
    pub geometric: GeometricReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub uprr: Option<UprrReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spm: Option<SpmReport>,
}

#[derive(Debug, Serialize)]
pub struct VerifyReport {
    #[serde(flatten)]
    pub header: Header,
    pub label: String,
    pub epsilon: F17,
    pub verified: bool,
    pub worst_log_ratio: F17,
    /// `[output, lower input, higher input]` of the worst ratio.
    pub worst_at: Option<[usize; 3]>,
}

#[derive(Debug, Serialize)]
pub struct CompareRow {
    pub label: String,
    pub value: F17,
    pub dp_verified: bool,
    pub worst_log_ratio: F17,
    /// `None` when a posterior has a zero entry.
    pub geometric_uprr_dominates: Option<bool>,
    pub peaks: Option<Vec<usize>>,
}

#[derive(Debug, Serialize)]
pub struct CompareReport {
    #[serde(flatten)]
    pub header: Header,
    pub n: usize,
    pub epsilon: F17,
    pub optimum: F17,
    pub rows: Vec<CompareRow>,
}

#[derive(Debug, Serialize)]
pub struct VertexEntry {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub signature: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub heights: Option<Vec<i64>>,
    pub belief: Vec<F17>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state_belief: Option<Vec<F17>>,
    pub binding: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<F17>,
}

#[derive(Debug, Serialize)]
pub struct VerticesReport {
    #[serde(flatten)]
    pub header: Header,
    pub polytope: &'static str,
    pub n: usize,
    pub epsilon: F17,
    pub count: usize,
    pub vertices: Vec<VertexEntry>,
}

#[derive(Debug, Serialize)]
pub struct WitnessEntry {
    pub vertex: Vec<F17>,
    pub projection: Vec<F17>,
    pub violated_upper: Vec<usize>,
    pub violated_lower: Vec<usize>,
}

#[derive(Debug, Serialize)]
pub struct ProjectReport {
    #[serde(flatten)]
    pub header: Header,
    pub n: usize,
    pub epsilon: F17,
    pub symmetric_prior: bool,
    pub database_vertices: usize,
    pub equal: bool,
    pub outside: Vec<WitnessEntry>,
    pub unattained: Vec<String>,
}

pub fn to_json<T: Serialize>(report: &T) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serialization");
    s.push('\n');
    s
}
