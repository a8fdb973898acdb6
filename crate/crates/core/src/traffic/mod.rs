//! Traffic-aware energy model: route every flow on one simple path and power
//! only the switches and links the routing touches.
//!
//! The objective is switch power plus link power, with link power charged
//! per crossing flow ([`ObjectiveMode::PerFlowLink`]) or per active link
//! ([`ObjectiveMode::PerActiveLink`]).

mod bound;
mod constraints;
mod exact;
mod heuristics;
mod savings;

use alloc::boxed::Box;
use alloc::vec::Vec;

pub use constraints::{check_traffic_constraints, derive_network_state, evaluate_traffic_objective, TrafficViolation};
pub use exact::solve_exact_traffic;
pub use heuristics::{heuristic_fattree_topology_aware, heuristic_greedy_binpack, heuristic_path_first, FlowOrder};
pub use savings::{savings_report, LayerBreakdown, SavingsReport};

use crate::graph;
use crate::model::{
    validate_flows, EdgeId, Flow, FlowError, FlowId, FlowRouting, NetworkState, ObjectiveMode, Path, SwitchId,
    Topology, TopologyViolation,
};
use crate::{num, Optimality};

#[derive(Debug, Clone, PartialEq)]
pub struct TrafficSolution {
    pub routing: FlowRouting,
    /// Tight closure of `routing`.
    pub state: NetworkState,
    /// Watts under the mode the solution was computed for.
    pub objective: f64,
    pub optimality: Optimality,
    /// Branch-and-bound nodes expanded; zero for heuristics.
    pub nodes_explored: u64,
}

/// Evidence that a flow set could not be routed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InfeasibilityCertificate {
    /// Flows that could not be routed together; the last one is the flow
    /// for which no residual path was left.
    pub flows: Vec<FlowId>,
    /// Edges whose residual bandwidth was below the blocked flow's rate.
    pub saturated_edges: Vec<EdgeId>,
    /// False when only a restricted candidate path set was searched.
    pub proven: bool,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrafficError {
    #[error("topology is invalid ({} violations)", .0.len())]
    InvalidTopology(Vec<TopologyViolation>),
    #[error(transparent)]
    InvalidFlows(#[from] FlowError),
    #[error("no capacity-respecting routing for flows {:?}", .0.flows)]
    Infeasible(InfeasibilityCertificate),
    #[error("node budget exhausted after {nodes} nodes")]
    BudgetExhausted {
        incumbent: Option<Box<TrafficSolution>>,
        nodes: u64,
    },
    #[error("topology carries no fat-tree metadata")]
    NotFatTree,
}

pub(crate) fn validate_instance(t: &Topology, flows: &[Flow]) -> Result<(), TrafficError> {
    let v = t.validate();
    if !v.is_empty() {
        return Err(TrafficError::InvalidTopology(v));
    }
    validate_flows(t, flows)?;
    Ok(())
}

/// Candidate paths for every flow, sorted by switch sequence.
pub(crate) struct Candidates {
    pub per_flow: Vec<Vec<Path>>,
    pub complete: bool,
}

pub(crate) fn candidate_paths(
    t: &Topology,
    adj: &[Vec<(SwitchId, EdgeId)>],
    flows: &[&Flow],
    k_paths: usize,
) -> Candidates {
    let mut complete = true;
    let per_flow = flows
        .iter()
        .map(|f| {
            let set = graph::k_shortest_paths(t, adj, f.source, f.destination, k_paths);
            complete &= set.complete;
            let mut paths = set.paths;
            paths.sort_by(|a, b| a.switches.cmp(&b.switches));
            paths
        })
        .collect();
    Candidates { per_flow, complete }
}

/// Incremental link loads and element usage for a partial routing.
pub(crate) struct LoadTracker<'a> {
    t: &'a Topology,
    mode: ObjectiveMode,
    pub load: Vec<f64>,
    pub switch_users: Vec<u32>,
    pub link_users: Vec<u32>,
}

impl<'a> LoadTracker<'a> {
    pub fn new(t: &'a Topology, mode: ObjectiveMode) -> Self {
        LoadTracker {
            t,
            mode,
            load: alloc::vec![0.0; t.edges.len()],
            switch_users: alloc::vec![0; t.switches.len()],
            link_users: alloc::vec![0; t.edges.len()],
        }
    }

    pub fn fits(&self, path: &Path, rate: f64) -> bool {
        path.edges
            .iter()
            .all(|&e| num::fits(self.load[e] + rate, self.t.edges[e].bandwidth))
    }

    pub fn residual_ok(&self, e: EdgeId, rate: f64) -> bool {
        num::fits(self.load[e] + rate, self.t.edges[e].bandwidth)
    }

    /// Objective increase if `path` were added.
    pub fn marginal(&self, path: &Path) -> f64 {
        let mut cost = 0.0;
        for &s in &path.switches {
            if self.switch_users[s] == 0 {
                cost += self.t.switches[s].power;
            }
        }
        for &e in &path.edges {
            if self.mode == ObjectiveMode::PerFlowLink || self.link_users[e] == 0 {
                cost += self.t.edges[e].power;
            }
        }
        cost
    }

    pub fn add(&mut self, path: &Path, rate: f64) {
        for &s in &path.switches {
            self.switch_users[s] += 1;
        }
        for &e in &path.edges {
            self.link_users[e] += 1;
            self.load[e] += rate;
        }
    }

    pub fn remove(&mut self, path: &Path, rate: f64) {
        for &s in &path.switches {
            self.switch_users[s] -= 1;
        }
        for &e in &path.edges {
            self.link_users[e] -= 1;
            self.load[e] -= rate;
        }
    }

    pub fn saturated_for(&self, rate: f64) -> Vec<EdgeId> {
        (0..self.t.edges.len())
            .filter(|&e| !self.residual_ok(e, rate))
            .collect()
    }
}

/// Builds a solution from a complete routing, deriving the tight state.
pub(crate) fn finish(
    t: &Topology,
    flows: &[Flow],
    routing: FlowRouting,
    mode: ObjectiveMode,
    optimality: Optimality,
    nodes_explored: u64,
) -> TrafficSolution {
    let state = NetworkState::derive(t, &routing);
    let objective = constraints::objective_value(t, flows, &routing, &state, mode);
    TrafficSolution {
        routing,
        state,
        objective,
        optimality,
        nodes_explored,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::triangle;

    #[test]
    fn tracker_marginals() {
        let t = triangle();
        let direct = Path::from_switches(&t, alloc::vec![0, 1]).unwrap();
        let detour = Path::from_switches(&t, alloc::vec![0, 2, 1]).unwrap();
        let mut per_flow = LoadTracker::new(&t, ObjectiveMode::PerFlowLink);
        assert_eq!(per_flow.marginal(&direct), 3.0);
        per_flow.add(&direct, 6.0);
        assert_eq!(per_flow.marginal(&direct), 1.0);
        assert!(!per_flow.fits(&direct, 6.0));
        assert_eq!(per_flow.marginal(&detour), 3.0);
        per_flow.remove(&direct, 6.0);
        assert_eq!(per_flow.load, alloc::vec![0.0; 3]);

        let mut active = LoadTracker::new(&t, ObjectiveMode::PerActiveLink);
        active.add(&direct, 1.0);
        assert_eq!(active.marginal(&direct), 0.0);
    }
}
