//! End-system model: place virtual machines on physical machines.
//!
//! Consolidation minimizes the number of powered PMs; the network term sums
//! `q[u][v] * b[pm(u)][pm(v)]` over every ordered VM pair, so co-located
//! VMs cost nothing.

mod exact;
mod heuristics;

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

pub use exact::solve_exact_placement;
pub use heuristics::{heuristic_bfd, heuristic_ffd};

use crate::graph;
use crate::model::{SwitchId, Topology};
use crate::num;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PlacementInstance {
    /// `|P| x |R|` capacities.
    pub pm_resources: Vec<Vec<f64>>,
    /// `|V| x |R|` demands.
    pub vm_demands: Vec<Vec<f64>>,
    pub resource_names: Vec<String>,
    /// `|V| x |V|` traffic rates.
    pub vm_traffic: Vec<Vec<f64>>,
    /// `|P| x |P|` switch counts between PM attachment points.
    pub pm_hops: Vec<Vec<u32>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InstanceViolation {
    Shape(&'static str),
    NegativeOrNonFinite {
        matrix: &'static str,
        row: usize,
        col: usize,
    },
    AsymmetricHops {
        a: usize,
        b: usize,
    },
    NonZeroHopDiagonal(usize),
    SelfTraffic(usize),
}

impl fmt::Display for InstanceViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InstanceViolation::Shape(what) => write!(f, "{what} has the wrong shape"),
            InstanceViolation::NegativeOrNonFinite { matrix, row, col } => {
                write!(f, "{matrix}[{row}][{col}] is negative or not finite")
            }
            InstanceViolation::AsymmetricHops { a, b } => write!(f, "pm_hops[{a}][{b}] != pm_hops[{b}][{a}]"),
            InstanceViolation::NonZeroHopDiagonal(i) => write!(f, "pm_hops[{i}][{i}] is not zero"),
            InstanceViolation::SelfTraffic(i) => write!(f, "vm_traffic[{i}][{i}] is not zero"),
        }
    }
}

impl PlacementInstance {
    pub fn pm_count(&self) -> usize {
        self.pm_resources.len()
    }

    pub fn vm_count(&self) -> usize {
        self.vm_demands.len()
    }

    pub fn resource_count(&self) -> usize {
        self.resource_names.len()
    }

    pub fn validate(&self) -> Vec<InstanceViolation> {
        let mut out = Vec::new();
        let (p, v, r) = (self.pm_count(), self.vm_count(), self.resource_count());
        if self.pm_resources.iter().any(|row| row.len() != r) {
            out.push(InstanceViolation::Shape("pm_resources"));
        }
        if self.vm_demands.iter().any(|row| row.len() != r) {
            out.push(InstanceViolation::Shape("vm_demands"));
        }
        if self.vm_traffic.len() != v || self.vm_traffic.iter().any(|row| row.len() != v) {
            out.push(InstanceViolation::Shape("vm_traffic"));
        }
        if self.pm_hops.len() != p || self.pm_hops.iter().any(|row| row.len() != p) {
            out.push(InstanceViolation::Shape("pm_hops"));
        }
        if !out.is_empty() {
            return out;
        }
        for (matrix, rows) in [
            ("pm_resources", &self.pm_resources),
            ("vm_demands", &self.vm_demands),
            ("vm_traffic", &self.vm_traffic),
        ] {
            for (row, vals) in rows.iter().enumerate() {
                for (col, &x) in vals.iter().enumerate() {
                    if !(x.is_finite() && x >= 0.0) {
                        out.push(InstanceViolation::NegativeOrNonFinite { matrix, row, col });
                    }
                }
            }
        }
        for a in 0..p {
            if self.pm_hops[a][a] != 0 {
                out.push(InstanceViolation::NonZeroHopDiagonal(a));
            }
            for b in a + 1..p {
                if self.pm_hops[a][b] != self.pm_hops[b][a] {
                    out.push(InstanceViolation::AsymmetricHops { a, b });
                }
            }
        }
        for i in 0..v {
            if self.vm_traffic[i][i] != 0.0 {
                out.push(InstanceViolation::SelfTraffic(i));
            }
        }
        out
    }

    /// Mean PM capacity per resource.
    pub(crate) fn mean_capacity(&self) -> Vec<f64> {
        let p = self.pm_count().max(1) as f64;
        (0..self.resource_count())
            .map(|r| self.pm_resources.iter().map(|row| row[r]).sum::<f64>() / p)
            .collect()
    }

    /// Sum over resources of demand divided by mean capacity.
    pub(crate) fn scalarized_demand(&self, vm: usize, mean: &[f64]) -> f64 {
        self.vm_demands[vm]
            .iter()
            .zip(mean)
            .filter(|(_, &m)| m > 0.0)
            .map(|(d, m)| d / m)
            .sum()
    }

    pub(crate) fn fits_alone(&self, vm: usize, pm: usize) -> bool {
        self.vm_demands[vm]
            .iter()
            .zip(&self.pm_resources[pm])
            .all(|(&d, &c)| num::fits(d, c))
    }
}

/// Assignment of VMs to PMs and the PM power states.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Placement {
    /// `assignment[pm][vm]`.
    pub assignment: Vec<Vec<bool>>,
    pub pm_on: Vec<bool>,
}

impl Placement {
    /// Placement hosting VM `j` on PM `hosts[j]`, with PMs powered iff used.
    pub fn from_hosts(pm_count: usize, hosts: &[usize]) -> Self {
        let mut assignment = alloc::vec![alloc::vec![false; hosts.len()]; pm_count];
        let mut pm_on = alloc::vec![false; pm_count];
        for (vm, &pm) in hosts.iter().enumerate() {
            assignment[pm][vm] = true;
            pm_on[pm] = true;
        }
        Placement { assignment, pm_on }
    }

    /// First PM hosting `vm`.
    pub fn host_of(&self, vm: usize) -> Option<usize> {
        self.assignment
            .iter()
            .position(|row| row.get(vm).copied().unwrap_or(false))
    }
}

/// A broken placement constraint.
#[derive(Debug, Clone, PartialEq)]
pub enum PlacementViolation {
    /// Matrix dimensions disagree with the instance.
    Shape,
    /// Eq. 9: summed demand exceeds a PM's capacity.
    Capacity {
        pm: usize,
        resource: usize,
        load: f64,
        capacity: f64,
    },
    /// Eq. 10: a VM is not placed exactly once.
    Multiplicity { vm: usize, count: usize },
    /// Eq. 11: a PM's power state disagrees with whether it hosts VMs.
    PmState { pm: usize, on: bool },
}

impl PlacementViolation {
    pub fn equation(&self) -> Option<u8> {
        match self {
            PlacementViolation::Shape => None,
            PlacementViolation::Capacity { .. } => Some(9),
            PlacementViolation::Multiplicity { .. } => Some(10),
            PlacementViolation::PmState { .. } => Some(11),
        }
    }
}

impl fmt::Display for PlacementViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(eq) = self.equation() {
            write!(f, "eq{eq}: ")?;
        }
        match self {
            PlacementViolation::Shape => write!(f, "placement shape does not match instance"),
            PlacementViolation::Capacity {
                pm,
                resource,
                load,
                capacity,
            } => {
                write!(f, "pm {pm} resource {resource} load {load} > capacity {capacity}")
            }
            PlacementViolation::Multiplicity { vm, count } => write!(f, "vm {vm} placed {count} times"),
            PlacementViolation::PmState { pm, on } => write!(f, "pm {pm} power state {on} inconsistent"),
        }
    }
}

pub fn check_placement(inst: &PlacementInstance, placement: &Placement) -> Vec<PlacementViolation> {
    let (p, v, r) = (inst.pm_count(), inst.vm_count(), inst.resource_count());
    if placement.assignment.len() != p
        || placement.pm_on.len() != p
        || placement.assignment.iter().any(|row| row.len() != v)
    {
        return alloc::vec![PlacementViolation::Shape];
    }
    let mut out = Vec::new();
    for pm in 0..p {
        for res in 0..r {
            let load: f64 = (0..v)
                .filter(|&vm| placement.assignment[pm][vm])
                .map(|vm| inst.vm_demands[vm][res])
                .sum();
            let capacity = inst.pm_resources[pm][res];
            if !num::fits(load, capacity) {
                out.push(PlacementViolation::Capacity {
                    pm,
                    resource: res,
                    load,
                    capacity,
                });
            }
        }
    }
    for vm in 0..v {
        let count = (0..p).filter(|&pm| placement.assignment[pm][vm]).count();
        if count != 1 {
            out.push(PlacementViolation::Multiplicity { vm, count });
        }
    }
    for pm in 0..p {
        let hosts = placement.assignment[pm].iter().any(|&x| x);
        if hosts != placement.pm_on[pm] {
            out.push(PlacementViolation::PmState {
                pm,
                on: placement.pm_on[pm],
            });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlacementScore {
    pub active_pms: usize,
    pub network_cost: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlacementError {
    #[error("placement instance is invalid ({} violations)", .0.len())]
    InvalidInstance(Vec<InstanceViolation>),
    #[error("placement violates {} constraints", .0.len())]
    Violations(Vec<PlacementViolation>),
    /// `vm` is set when that VM fits on no PM even alone.
    #[error("no feasible placement (vm {vm:?})")]
    Infeasible { vm: Option<usize> },
    #[error("objective weights must be finite and non-negative")]
    InvalidWeights,
}

pub(crate) fn network_cost_of(inst: &PlacementInstance, hosts: &[usize]) -> f64 {
    let mut cost = 0.0;
    for (u, row) in inst.vm_traffic.iter().enumerate() {
        for (v, &q) in row.iter().enumerate() {
            if q != 0.0 {
                cost += q * inst.pm_hops[hosts[u]][hosts[v]] as f64;
            }
        }
    }
    cost
}

pub fn score_placement(inst: &PlacementInstance, placement: &Placement) -> Result<PlacementScore, PlacementError> {
    let violations = check_placement(inst, placement);
    if !violations.is_empty() {
        return Err(PlacementError::Violations(violations));
    }
    let hosts: Vec<usize> = (0..inst.vm_count())
        .map(|vm| placement.host_of(vm).expect("checked: placed once"))
        .collect();
    Ok(PlacementScore {
        active_pms: placement.pm_on.iter().filter(|&&on| on).count(),
        network_cost: network_cost_of(inst, &hosts),
    })
}

/// What [`solve_exact_placement`] minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum PlacementObjective {
    /// Active PM count only.
    PmsOnly,
    /// Active PM count, then network cost.
    #[default]
    Lexicographic,
    /// `alpha * active_pms + beta * network_cost`.
    Weighted { alpha: f64, beta: f64 },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HopsError {
    #[error("attachment switch {0} does not exist")]
    UnknownSwitch(SwitchId),
    #[error("switches {0} and {1} are disconnected")]
    Disconnected(SwitchId, SwitchId),
}

/// Switch counts between the attachment switches of each PM pair: the
/// number of switches on a fewest-hop path, endpoints included, and zero
/// on the diagonal.
pub fn pm_hops_from_topology(t: &Topology, attachments: &[SwitchId]) -> Result<Vec<Vec<u32>>, HopsError> {
    if let Some(&s) = attachments.iter().find(|&&s| s >= t.switches.len()) {
        return Err(HopsError::UnknownSwitch(s));
    }
    let adj = t.adjacency();
    let dist = graph::hop_distance_matrix(&adj);
    let p = attachments.len();
    let mut hops = alloc::vec![alloc::vec![0u32; p]; p];
    for a in 0..p {
        for b in 0..p {
            if a != b {
                let (sa, sb) = (attachments[a], attachments[b]);
                let d = dist[sb][sa].ok_or(HopsError::Disconnected(sa, sb))?;
                hops[a][b] = d as u32 + 1;
            }
        }
    }
    Ok(hops)
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// Single-resource instance with identical PMs and unit hops.
    pub fn cpu_only(demands: &[f64], pms: usize, capacity: f64) -> PlacementInstance {
        let v = demands.len();
        let mut pm_hops = alloc::vec![alloc::vec![1u32; pms]; pms];
        for (i, row) in pm_hops.iter_mut().enumerate() {
            row[i] = 0;
        }
        PlacementInstance {
            pm_resources: alloc::vec![alloc::vec![capacity]; pms],
            vm_demands: demands.iter().map(|&d| alloc::vec![d]).collect(),
            resource_names: alloc::vec!["cpu".into()],
            vm_traffic: alloc::vec![alloc::vec![0.0; v]; v],
            pm_hops,
        }
    }
}
