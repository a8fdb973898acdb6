//! JSON report schema, version [`SCHEMA_VERSION`].
//!
//! Field order is fixed by declaration order, and reals are printed in
//! shortest round-trip form, so equal runs give equal bytes once wall time
//! is suppressed.

use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Problem {
    Traffic,
    Placement,
    Rules,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Solved,
    Infeasible,
    /// The node budget ran out; `objective` and the detail section hold the
    /// incumbent when one was found.
    BudgetExhausted,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Params {
    pub mode: Option<String>,
    pub budget_nodes: Option<u64>,
    pub k_paths: Option<usize>,
    pub objective: Option<String>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub problem: Problem,
    pub instance_digest: String,
    pub solver: String,
    pub params: Params,
    pub status: Status,
    pub objective: Option<f64>,
    pub baseline: Option<f64>,
    pub savings_fraction: Option<f64>,
    /// `exact` or `heuristic:<procedure>`.
    pub optimality: Option<String>,
    pub nodes_explored: u64,
    /// Milliseconds; `null` under `--deterministic`.
    pub wall_time_ms: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub traffic: Option<TrafficDetail>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub placement: Option<PlacementDetail>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rules: Option<RulesDetail>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<Certificate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchState {
    pub id: usize,
    pub on: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layer: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkState {
    pub id: usize,
    pub a: usize,
    pub b: usize,
    pub active: bool,
    pub used: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Route {
    pub flow: usize,
    pub switches: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerRow {
    pub layer: String,
    pub total: usize,
    pub active_baseline: usize,
    pub active_optimized: usize,
    pub baseline_watts: f64,
    pub optimized_watts: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficDetail {
    pub switches: Vec<SwitchState>,
    pub links: Vec<LinkState>,
    pub routes: Vec<Route>,
    pub layers: Vec<LayerRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PmState {
    pub id: usize,
    pub on: bool,
    pub vms: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementDetail {
    pub active_pms: usize,
    pub network_cost: f64,
    pub pms: Vec<PmState>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleTable {
    pub switch: usize,
    pub capacity: u32,
    /// Flow ids with a rule on this switch.
    pub flows: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RulesDetail {
    pub total_rules: usize,
    pub tables: Vec<RuleTable>,
    pub links: Vec<LinkState>,
    pub routes: Vec<Route>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    /// Flows that could not be routed together, or the VM that fits nowhere.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flows: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub saturated_edges: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vm: Option<usize>,
    /// False when only a restricted search was exhausted.
    pub proven: bool,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub solver: String,
    pub status: Status,
    pub objective: Option<f64>,
    /// `(objective - exact) / exact`, or the absolute difference when the
    /// exact objective is zero; `null` when either side is missing.
    pub gap: Option<f64>,
    pub savings_fraction: Option<f64>,
    pub optimality: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub schema_version: u32,
    pub problem: Problem,
    pub instance_digest: String,
    pub params: Params,
    /// Sorted by solver name.
    pub rows: Vec<CompareRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    /// Model equation the violation belongs to, if any.
    pub equation: Option<u8>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub schema_version: u32,
    pub problem: Problem,
    pub instance_digest: String,
    pub solver: String,
    pub ok: bool,
    pub violations: Vec<Violation>,
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types always serialize");
    s.push('\n');
    s
}
