//! Energy-efficiency optimization models for software-defined networks.
//!
//! Three problem families share one network model:
//!
//! * [`traffic`]: choose an unsplittable path per flow and the minimal set of
//!   powered switches and links, minimizing switch plus link power.
//! * [`placement`]: consolidate virtual machines onto as few physical machines
//!   as possible, then minimize inter-VM traffic weighted by switch hops.
//! * [`rules`]: route flows so that the total number of installed forwarding
//!   rules is minimal under flow-table and link capacities.
//!
//! Each family has a constraint checker, an exact branch-and-bound solver and
//! one or more greedy heuristics. [`generate`] builds fat-tree, ring and mesh
//! topologies plus seeded traffic and placement instances.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
#![forbid(unsafe_code)]
#![allow(clippy::needless_range_loop)]

extern crate alloc;

pub mod generate;
pub mod graph;
pub mod model;
pub mod placement;
pub mod rules;
pub mod traffic;

mod num;

pub use model::{
    Edge, EdgeId, FatTreeRole, Flow, FlowId, FlowRouting, HostId, Layer, NetworkState, ObjectiveMode, Path, Switch,
    SwitchId, Topology, TopologyViolation,
};

/// Whether a solver proved its answer optimal.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Optimality {
    Exact,
    /// Best known answer; the name identifies the procedure that produced it.
    Heuristic(&'static str),
}

impl Optimality {
    pub fn is_exact(&self) -> bool {
        matches!(self, Optimality::Exact)
    }

    pub fn label(&self) -> alloc::string::String {
        match self {
            Optimality::Exact => "exact".into(),
            Optimality::Heuristic(name) => alloc::format!("heuristic:{name}"),
        }
    }
}

/// Limits for the exact path-based solvers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolverBudget {
    /// Maximum number of branch-and-bound nodes to expand.
    pub max_nodes: u64,
    /// Candidate loop-free paths enumerated per flow.
    pub k_paths: usize,
}

impl SolverBudget {
    pub const DEFAULT_MAX_NODES: u64 = 5_000_000;
    pub const DEFAULT_K_PATHS: usize = 16;

    pub fn new(max_nodes: u64, k_paths: usize) -> Result<Self, BudgetError> {
        if max_nodes == 0 {
            return Err(BudgetError::ZeroNodes);
        }
        if k_paths == 0 {
            return Err(BudgetError::ZeroPaths);
        }
        Ok(SolverBudget { max_nodes, k_paths })
    }
}

impl Default for SolverBudget {
    fn default() -> Self {
        SolverBudget {
            max_nodes: Self::DEFAULT_MAX_NODES,
            k_paths: Self::DEFAULT_K_PATHS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum BudgetError {
    #[error("node budget must be at least 1")]
    ZeroNodes,
    #[error("k_paths must be at least 1")]
    ZeroPaths,
}
