//! Rule-placement model: route every flow so that the number of installed
//! forwarding rules is minimal.
//!
//! A flow needs one rule on every switch of its path, so the total rule
//! count is the summed switch count of all paths. Switch flow tables hold at
//! most `rule_capacity` rules and links carry at most their bandwidth.

mod exact;
mod heuristic;

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::fmt;

pub use exact::solve_exact_rules;
pub use heuristic::heuristic_shortest_admissible;

use crate::model::{EdgeId, Flow, FlowError, FlowId, FlowRouting, SwitchId, Topology, TopologyViolation};
use crate::num;
use crate::traffic::InfeasibilityCertificate;
use crate::Optimality;

/// Rule matrix plus the routing and link states it was built from.
///
/// Column `f` of `rules` belongs to the `f`-th flow of the slice the
/// allocation was built for, not to flow id `f`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleAllocation {
    /// `rules[switch][flow]`.
    pub rules: Vec<Vec<bool>>,
    pub routing: FlowRouting,
    pub link_state: Vec<bool>,
}

impl RuleAllocation {
    /// Allocation with a rule on every on-path switch and exactly the used
    /// links active. Flows without a path get no rules.
    pub fn from_routing(t: &Topology, flows: &[Flow], routing: FlowRouting) -> Self {
        let mut rules = alloc::vec![alloc::vec![false; flows.len()]; t.switches.len()];
        let mut link_state = alloc::vec![false; t.edges.len()];
        for (col, f) in flows.iter().enumerate() {
            let Some(path) = routing.get(f.id) else { continue };
            for &s in &path.switches {
                if let Some(row) = rules.get_mut(s) {
                    row[col] = true;
                }
            }
            for &e in &path.edges {
                if let Some(l) = link_state.get_mut(e) {
                    *l = true;
                }
            }
        }
        RuleAllocation {
            rules,
            routing,
            link_state,
        }
    }

    /// Rules installed per switch.
    pub fn rule_counts(&self) -> Vec<usize> {
        self.rules
            .iter()
            .map(|row| row.iter().filter(|&&r| r).count())
            .collect()
    }

    pub fn total_rules(&self) -> usize {
        self.rule_counts().iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleSolution {
    pub allocation: RuleAllocation,
    pub total_rules: usize,
    pub optimality: Optimality,
    /// Branch-and-bound nodes expanded; zero for the heuristic.
    pub nodes_explored: u64,
}

/// A broken rule-placement constraint.
#[derive(Debug, Clone, PartialEq)]
pub enum RuleViolation {
    /// Matrix dimensions disagree with the instance.
    Shape,
    /// Eq. 16: link load above bandwidth.
    Bandwidth { edge: EdgeId, load: f64, capacity: f64 },
    /// Eq. 17: more rules than the flow table holds.
    TableCapacity {
        switch: SwitchId,
        rules: usize,
        capacity: u32,
    },
    /// Eq. 18: a switch on the flow's path has no rule for it.
    MissingRule { switch: SwitchId, flow: FlowId },
    /// Eq. 18: a rule on a switch the flow does not traverse.
    StrayRule { switch: SwitchId, flow: FlowId },
    /// Eq. 19: an unused link is left active.
    IdleLinkActive { edge: EdgeId },
    /// Eq. 20: a used link is inactive.
    InactiveLinkUsed { edge: EdgeId },
    /// Eq. 21: source without ingress host or destination without egress host.
    NotAdmissible { flow: FlowId },
    /// Eq. 21: missing path, wrong endpoints or a path that is not a simple
    /// walk over existing edges.
    BrokenPath { flow: FlowId },
    /// A routed flow id that is not in the flow set.
    UnknownFlow { flow: FlowId },
}

impl RuleViolation {
    pub fn equation(&self) -> Option<u8> {
        match self {
            RuleViolation::Shape | RuleViolation::UnknownFlow { .. } => None,
            RuleViolation::Bandwidth { .. } => Some(16),
            RuleViolation::TableCapacity { .. } => Some(17),
            RuleViolation::MissingRule { .. } | RuleViolation::StrayRule { .. } => Some(18),
            RuleViolation::IdleLinkActive { .. } => Some(19),
            RuleViolation::InactiveLinkUsed { .. } => Some(20),
            RuleViolation::NotAdmissible { .. } | RuleViolation::BrokenPath { .. } => Some(21),
        }
    }
}

impl fmt::Display for RuleViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(eq) = self.equation() {
            write!(f, "eq{eq}: ")?;
        }
        match self {
            RuleViolation::Shape => write!(f, "allocation shape does not match instance"),
            RuleViolation::Bandwidth { edge, load, capacity } => {
                write!(f, "edge {edge} load {load} > bandwidth {capacity}")
            }
            RuleViolation::TableCapacity {
                switch,
                rules,
                capacity,
            } => {
                write!(f, "switch {switch} holds {rules} rules > capacity {capacity}")
            }
            RuleViolation::MissingRule { switch, flow } => {
                write!(f, "flow {flow} crosses switch {switch} without a rule")
            }
            RuleViolation::StrayRule { switch, flow } => {
                write!(f, "flow {flow} has a rule on off-path switch {switch}")
            }
            RuleViolation::IdleLinkActive { edge } => write!(f, "edge {edge} is active but unused"),
            RuleViolation::InactiveLinkUsed { edge } => write!(f, "edge {edge} is used but inactive"),
            RuleViolation::NotAdmissible { flow } => write!(f, "flow {flow} endpoints lack ingress/egress hosts"),
            RuleViolation::BrokenPath { flow } => write!(f, "flow {flow} has no valid path"),
            RuleViolation::UnknownFlow { flow } => write!(f, "routing names unknown flow {flow}"),
        }
    }
}

pub fn check_rule_constraints(t: &Topology, flows: &[Flow], alloc: &RuleAllocation) -> Vec<RuleViolation> {
    let (z, nf, ne) = (t.switches.len(), flows.len(), t.edges.len());
    if alloc.rules.len() != z || alloc.rules.iter().any(|row| row.len() != nf) || alloc.link_state.len() != ne {
        return alloc::vec![RuleViolation::Shape];
    }
    let mut out = Vec::new();
    for &id in alloc.routing.paths.keys() {
        if !flows.iter().any(|f| f.id == id) {
            out.push(RuleViolation::UnknownFlow { flow: id });
        }
    }

    let mut load = alloc::vec![0.0; ne];
    let mut used = alloc::vec![false; ne];
    for (col, f) in flows.iter().enumerate() {
        if !(t.has_ingress_host(f.source) && t.has_egress_host(f.destination)) {
            out.push(RuleViolation::NotAdmissible { flow: f.id });
        }
        let path = alloc.routing.get(f.id);
        let valid = path.is_some_and(|p| {
            p.switches.first() == Some(&f.source)
                && p.switches.last() == Some(&f.destination)
                && p.is_simple()
                && p.edges.len() + 1 == p.switches.len()
                && p.edges.iter().enumerate().all(|(i, &e)| {
                    t.edges.get(e).is_some_and(|edge| {
                        let (a, b) = (p.switches[i], p.switches[i + 1]);
                        (edge.a == a && edge.b == b) || (edge.a == b && edge.b == a)
                    })
                })
        });
        let on_path: &[SwitchId] = match path {
            Some(p) if valid => &p.switches,
            _ => {
                out.push(RuleViolation::BrokenPath { flow: f.id });
                &[]
            }
        };
        if let Some(p) = path.filter(|_| valid) {
            for &e in &p.edges {
                load[e] += f.rate;
                used[e] = true;
            }
        }
        for s in 0..z {
            let needs = on_path.contains(&s);
            match (needs, alloc.rules[s][col]) {
                (true, false) => out.push(RuleViolation::MissingRule { switch: s, flow: f.id }),
                (false, true) if valid => out.push(RuleViolation::StrayRule { switch: s, flow: f.id }),
                _ => {}
            }
        }
    }
    for (e, edge) in t.edges.iter().enumerate() {
        if !num::fits(load[e], edge.bandwidth) {
            out.push(RuleViolation::Bandwidth {
                edge: e,
                load: load[e],
                capacity: edge.bandwidth,
            });
        }
        match (used[e], alloc.link_state[e]) {
            (true, false) => out.push(RuleViolation::InactiveLinkUsed { edge: e }),
            (false, true) => out.push(RuleViolation::IdleLinkActive { edge: e }),
            _ => {}
        }
    }
    for (s, count) in alloc.rule_counts().into_iter().enumerate() {
        let capacity = t.switches[s].rule_capacity;
        if count > capacity as usize {
            out.push(RuleViolation::TableCapacity {
                switch: s,
                rules: count,
                capacity,
            });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RuleError {
    #[error("topology is invalid ({} violations)", .0.len())]
    InvalidTopology(Vec<TopologyViolation>),
    #[error(transparent)]
    InvalidFlows(#[from] FlowError),
    #[error("flow {0} does not enter at an ingress host or leave at an egress host")]
    NotAdmissible(FlowId),
    #[error("no routing fits table and link capacities for flows {:?}", .0.flows)]
    Infeasible(InfeasibilityCertificate),
    #[error("node budget exhausted after {nodes} nodes")]
    BudgetExhausted {
        incumbent: Option<Box<RuleSolution>>,
        nodes: u64,
    },
}

pub(crate) fn validate_instance(t: &Topology, flows: &[Flow]) -> Result<(), RuleError> {
    let v = t.validate();
    if !v.is_empty() {
        return Err(RuleError::InvalidTopology(v));
    }
    crate::model::validate_flows(t, flows)?;
    if let Some(f) = flows
        .iter()
        .find(|f| !(t.has_ingress_host(f.source) && t.has_egress_host(f.destination)))
    {
        return Err(RuleError::NotAdmissible(f.id));
    }
    Ok(())
}

pub(crate) fn solution(
    t: &Topology,
    flows: &[Flow],
    routing: FlowRouting,
    optimality: Optimality,
    nodes: u64,
) -> RuleSolution {
    let allocation = RuleAllocation::from_routing(t, flows, routing);
    let total_rules = allocation.total_rules();
    RuleSolution {
        allocation,
        total_rules,
        optimality,
        nodes_explored: nodes,
    }
}

/// Per-switch residual table capacity and per-edge load.
pub(crate) struct Residual<'a> {
    t: &'a Topology,
    pub table: Vec<u32>,
    pub load: Vec<f64>,
}

impl<'a> Residual<'a> {
    pub fn new(t: &'a Topology) -> Self {
        Residual {
            t,
            table: t.switches.iter().map(|s| s.rule_capacity).collect(),
            load: alloc::vec![0.0; t.edges.len()],
        }
    }

    pub fn switch_ok(&self, s: SwitchId) -> bool {
        self.table[s] >= 1
    }

    pub fn edge_ok(&self, e: EdgeId, rate: f64) -> bool {
        num::fits(self.load[e] + rate, self.t.edges[e].bandwidth)
    }

    pub fn fits(&self, p: &crate::model::Path, rate: f64) -> bool {
        p.switches.iter().all(|&s| self.switch_ok(s)) && p.edges.iter().all(|&e| self.edge_ok(e, rate))
    }

    pub fn add(&mut self, p: &crate::model::Path, rate: f64) {
        for &s in &p.switches {
            self.table[s] -= 1;
        }
        for &e in &p.edges {
            self.load[e] += rate;
        }
    }

    pub fn remove(&mut self, p: &crate::model::Path, rate: f64) {
        for &s in &p.switches {
            self.table[s] += 1;
        }
        for &e in &p.edges {
            self.load[e] -= rate;
        }
    }

    pub fn saturated_for(&self, rate: f64) -> Vec<EdgeId> {
        (0..self.t.edges.len()).filter(|&e| !self.edge_ok(e, rate)).collect()
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use crate::model::{Edge, Flow, HostId, Switch, Topology};

    /// `S=0` to `T=4` via `A=1` (3 switches) or via `B=2, C=3` (4 switches),
    /// two unit flows `S -> T`, `A` holding `g_a` rules.
    pub fn diamond(g_a: u32) -> (Topology, [Flow; 2]) {
        let mut t = Topology {
            switches: (0..5)
                .map(|i| Switch::new(i, 1.0, if i == 1 { g_a } else { 2 }))
                .collect(),
            edges: [(0, 1), (1, 4), (0, 2), (2, 3), (3, 4)]
                .into_iter()
                .map(|(a, b)| Edge::new(a, b, 10.0, 1.0))
                .collect(),
            ..Topology::default()
        };
        t.ingress_hosts.insert(0 as HostId, 0);
        t.egress_hosts.insert(1 as HostId, 4);
        (t, [Flow::new(0, 0, 4, 1.0), Flow::new(1, 0, 4, 1.0)])
    }

    /// `A=0` holds one rule and is a tie for flow 0 (`X=2 -> Y=3` via `A`
    /// or `B=1`) but the only short route for flow 1 (`P=4 -> Q=5` via `A`,
    /// or a detour via `C=6, D=7`). Flow-id order spends `A` on flow 0.
    pub fn shared_bottleneck() -> (Topology, [Flow; 2]) {
        let mut t = Topology {
            switches: (0..8)
                .map(|i| Switch::new(i, 1.0, if i == 0 { 1 } else { 4 }))
                .collect(),
            edges: [(2, 0), (0, 3), (2, 1), (1, 3), (4, 0), (0, 5), (4, 6), (6, 7), (7, 5)]
                .into_iter()
                .map(|(a, b)| Edge::new(a, b, 10.0, 1.0))
                .collect(),
            ..Topology::default()
        };
        for s in 0..8 {
            t.ingress_hosts.insert(s as HostId, s);
            t.egress_hosts.insert(s as HostId, s);
        }
        (t, [Flow::new(0, 2, 3, 1.0), Flow::new(1, 4, 5, 1.0)])
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::diamond;
    use super::*;
    use crate::model::{Edge, HostId, Path, Switch};

    fn line() -> (Topology, Vec<Flow>) {
        let mut t = Topology {
            switches: (0..3).map(|i| Switch::new(i, 1.0, 2)).collect(),
            edges: alloc::vec![Edge::new(0, 1, 10.0, 1.0), Edge::new(1, 2, 10.0, 1.0)],
            ..Topology::default()
        };
        t.ingress_hosts.insert(0 as HostId, 0);
        t.egress_hosts.insert(0 as HostId, 2);
        (t, alloc::vec![Flow::new(0, 0, 2, 1.0)])
    }

    fn routed(t: &Topology, flows: &[Flow], paths: &[&[SwitchId]]) -> RuleAllocation {
        let mut routing = FlowRouting::new();
        for (f, p) in flows.iter().zip(paths) {
            routing.insert(f.id, Path::from_switches(t, p.to_vec()).unwrap());
        }
        RuleAllocation::from_routing(t, flows, routing)
    }

    #[test]
    fn tight_allocation_is_clean() {
        let (t, flows) = line();
        let a = routed(&t, &flows, &[&[0, 1, 2]]);
        assert!(check_rule_constraints(&t, &flows, &a).is_empty());
        assert_eq!(a.total_rules(), 3);
    }

    #[test]
    fn missing_middle_rule() {
        let (t, flows) = line();
        let mut a = routed(&t, &flows, &[&[0, 1, 2]]);
        a.rules[1][0] = false;
        let v = check_rule_constraints(&t, &flows, &a);
        assert_eq!(v, alloc::vec![RuleViolation::MissingRule { switch: 1, flow: 0 }]);
        assert_eq!(v[0].equation(), Some(18));
    }

    #[test]
    fn table_overflow() {
        let (t, _) = line();
        let flows: Vec<Flow> = (0..3).map(|i| Flow::new(i, 0, 2, 1.0)).collect();
        let path: &[SwitchId] = &[0, 1, 2];
        let a = routed(&t, &flows, &[path; 3]);
        let v = check_rule_constraints(&t, &flows, &a);
        assert_eq!(v.len(), 3);
        assert!(v.iter().all(|x| x.equation() == Some(17)));
        assert!(v.contains(&RuleViolation::TableCapacity {
            switch: 1,
            rules: 3,
            capacity: 2
        }));
    }

    #[test]
    fn link_states() {
        let (t, flows) = line();
        let mut a = routed(&t, &flows, &[&[0, 1, 2]]);
        a.link_state[0] = false;
        assert_eq!(
            check_rule_constraints(&t, &flows, &a),
            alloc::vec![RuleViolation::InactiveLinkUsed { edge: 0 }]
        );
        let (t, flows) = diamond(2);
        let mut a = routed(&t, &flows, &[&[0, 1, 4], &[0, 1, 4]]);
        a.link_state[3] = true;
        let v = check_rule_constraints(&t, &flows, &a);
        assert_eq!(v, alloc::vec![RuleViolation::IdleLinkActive { edge: 3 }]);
        assert_eq!(v[0].equation(), Some(19));
    }

    #[test]
    fn bandwidth_and_admissibility() {
        let (mut t, mut flows) = line();
        flows[0].rate = 11.0;
        t.ingress_hosts.clear();
        let a = routed(&t, &flows, &[&[0, 1, 2]]);
        let v = check_rule_constraints(&t, &flows, &a);
        assert!(v.contains(&RuleViolation::NotAdmissible { flow: 0 }));
        assert!(v.contains(&RuleViolation::Bandwidth {
            edge: 0,
            load: 11.0,
            capacity: 10.0
        }));
    }

    #[test]
    fn stray_rule_and_missing_path() {
        let (t, flows) = diamond(2);
        let mut a = routed(&t, &flows, &[&[0, 1, 4], &[0, 1, 4]]);
        a.rules[2][1] = true;
        assert_eq!(
            check_rule_constraints(&t, &flows, &a),
            alloc::vec![RuleViolation::StrayRule { switch: 2, flow: 1 }]
        );
        let partial = routed(&t, &flows[..1], &[&[0, 1, 4]]);
        let a = RuleAllocation::from_routing(&t, &flows, partial.routing);
        assert_eq!(
            check_rule_constraints(&t, &flows, &a),
            alloc::vec![RuleViolation::BrokenPath { flow: 1 }]
        );
    }
}
