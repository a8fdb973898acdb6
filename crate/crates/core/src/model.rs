//! Shared network model: topology, flows, routings and on/off state.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;
use core::fmt;

pub type SwitchId = usize;
/// Index into [`Topology::edges`].
pub type EdgeId = usize;
pub type FlowId = usize;
pub type HostId = u32;

/// Layer of a switch in a three-tier fat-tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Layer {
    Core,
    Aggregation,
    Edge,
}

impl Layer {
    pub fn name(self) -> &'static str {
        match self {
            Layer::Core => "core",
            Layer::Aggregation => "aggregation",
            Layer::Edge => "edge",
        }
    }
}

/// Structural position of a fat-tree switch, as produced by the generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FatTreeRole {
    pub layer: Layer,
    /// `None` for core switches.
    pub pod: Option<u32>,
    /// Position within the pod (aggregation, edge) or among cores.
    pub index: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Switch {
    pub id: SwitchId,
    /// Power drawn while the switch is on, in watts.
    pub power: f64,
    /// Flow-table capacity in rules.
    pub rule_capacity: u32,
    pub role: Option<FatTreeRole>,
}

impl Switch {
    pub fn new(id: SwitchId, power: f64, rule_capacity: u32) -> Self {
        Switch {
            id,
            power,
            rule_capacity,
            role: None,
        }
    }
}

/// Undirected link. Both traversal directions share `bandwidth`.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub a: SwitchId,
    pub b: SwitchId,
    /// Bytes per second.
    pub bandwidth: f64,
    /// Watts.
    pub power: f64,
}

impl Edge {
    pub fn new(a: SwitchId, b: SwitchId, bandwidth: f64, power: f64) -> Self {
        Edge { a, b, bandwidth, power }
    }

    pub fn touches(&self, s: SwitchId) -> bool {
        self.a == s || self.b == s
    }

    /// The far end when entering from `s`.
    pub fn other(&self, s: SwitchId) -> Option<SwitchId> {
        if self.a == s {
            Some(self.b)
        } else if self.b == s {
            Some(self.a)
        } else {
            None
        }
    }

    fn key(&self) -> (SwitchId, SwitchId) {
        (self.a.min(self.b), self.a.max(self.b))
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Topology {
    pub switches: Vec<Switch>,
    pub edges: Vec<Edge>,
    /// Hosts injecting traffic, by attached switch.
    pub ingress_hosts: BTreeMap<HostId, SwitchId>,
    /// Hosts receiving traffic, by attached switch.
    pub egress_hosts: BTreeMap<HostId, SwitchId>,
    /// Arity `k` when the topology is a generated fat-tree.
    pub fat_tree_k: Option<u32>,
}

/// One broken [`Topology`] invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum TopologyViolation {
    /// Switch at position `index` carries id `id`; ids must equal positions.
    SwitchIdMismatch {
        index: usize,
        id: SwitchId,
    },
    InvalidSwitchPower {
        switch: SwitchId,
        power: f64,
    },
    ZeroRuleCapacity {
        switch: SwitchId,
    },
    DanglingEndpoint {
        edge: EdgeId,
        switch: SwitchId,
    },
    SelfLoop {
        edge: EdgeId,
    },
    DuplicateEdge {
        edge: EdgeId,
        first: EdgeId,
    },
    InvalidBandwidth {
        edge: EdgeId,
        bandwidth: f64,
    },
    InvalidEdgePower {
        edge: EdgeId,
        power: f64,
    },
    DanglingHost {
        host: HostId,
        switch: SwitchId,
        ingress: bool,
    },
}

impl fmt::Display for TopologyViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use TopologyViolation::*;
        match self {
            SwitchIdMismatch { index, id } => write!(f, "switch at position {index} has id {id}"),
            InvalidSwitchPower { switch, power } => write!(f, "switch {switch} has invalid power {power}"),
            ZeroRuleCapacity { switch } => write!(f, "switch {switch} has zero rule capacity"),
            DanglingEndpoint { edge, switch } => write!(f, "edge {edge} references unknown switch {switch}"),
            SelfLoop { edge } => write!(f, "edge {edge} is a self-loop"),
            DuplicateEdge { edge, first } => write!(f, "edge {edge} duplicates edge {first}"),
            InvalidBandwidth { edge, bandwidth } => write!(f, "edge {edge} has invalid bandwidth {bandwidth}"),
            InvalidEdgePower { edge, power } => write!(f, "edge {edge} has invalid power {power}"),
            DanglingHost { host, switch, ingress } => {
                let side = if *ingress { "ingress" } else { "egress" };
                write!(f, "{side} host {host} references unknown switch {switch}")
            }
        }
    }
}

impl Topology {
    pub fn switch_count(&self) -> usize {
        self.switches.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Switch-to-switch links plus one access link per distinct host.
    pub fn physical_link_count(&self) -> usize {
        let hosts: BTreeSet<HostId> = self
            .ingress_hosts
            .keys()
            .chain(self.egress_hosts.keys())
            .copied()
            .collect();
        self.edges.len() + hosts.len()
    }

    /// Every broken invariant; empty when the topology is well formed.
    pub fn validate(&self) -> Vec<TopologyViolation> {
        let mut out = Vec::new();
        let n = self.switches.len();
        for (index, s) in self.switches.iter().enumerate() {
            if s.id != index {
                out.push(TopologyViolation::SwitchIdMismatch { index, id: s.id });
            }
            if !(s.power.is_finite() && s.power >= 0.0) {
                out.push(TopologyViolation::InvalidSwitchPower {
                    switch: s.id,
                    power: s.power,
                });
            }
            if s.rule_capacity == 0 {
                out.push(TopologyViolation::ZeroRuleCapacity { switch: s.id });
            }
        }
        let mut seen: BTreeMap<(SwitchId, SwitchId), EdgeId> = BTreeMap::new();
        for (id, e) in self.edges.iter().enumerate() {
            let mut dangling = false;
            for end in [e.a, e.b] {
                if end >= n {
                    out.push(TopologyViolation::DanglingEndpoint { edge: id, switch: end });
                    dangling = true;
                }
            }
            if e.a == e.b {
                out.push(TopologyViolation::SelfLoop { edge: id });
            } else if !dangling {
                if let Some(&first) = seen.get(&e.key()) {
                    out.push(TopologyViolation::DuplicateEdge { edge: id, first });
                } else {
                    seen.insert(e.key(), id);
                }
            }
            if !(e.bandwidth.is_finite() && e.bandwidth > 0.0) {
                out.push(TopologyViolation::InvalidBandwidth {
                    edge: id,
                    bandwidth: e.bandwidth,
                });
            }
            if !(e.power.is_finite() && e.power >= 0.0) {
                out.push(TopologyViolation::InvalidEdgePower {
                    edge: id,
                    power: e.power,
                });
            }
        }
        for (hosts, ingress) in [(&self.ingress_hosts, true), (&self.egress_hosts, false)] {
            for (&host, &switch) in hosts {
                if switch >= n {
                    out.push(TopologyViolation::DanglingHost { host, switch, ingress });
                }
            }
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    /// Edge joining `a` and `b`, in either orientation.
    pub fn edge_between(&self, a: SwitchId, b: SwitchId) -> Option<EdgeId> {
        self.edges
            .iter()
            .position(|e| (e.a == a && e.b == b) || (e.a == b && e.b == a))
    }

    /// Adjacency lists sorted by neighbour id: `(neighbour, edge)`.
    pub fn adjacency(&self) -> Vec<Vec<(SwitchId, EdgeId)>> {
        let mut adj = alloc::vec![Vec::new(); self.switches.len()];
        for (id, e) in self.edges.iter().enumerate() {
            if e.a < adj.len() && e.b < adj.len() && e.a != e.b {
                adj[e.a].push((e.b, id));
                adj[e.b].push((e.a, id));
            }
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    pub fn has_ingress_host(&self, s: SwitchId) -> bool {
        self.ingress_hosts.values().any(|&v| v == s)
    }

    pub fn has_egress_host(&self, s: SwitchId) -> bool {
        self.egress_hosts.values().any(|&v| v == s)
    }

    pub fn role(&self, s: SwitchId) -> Option<FatTreeRole> {
        self.switches.get(s).and_then(|sw| sw.role)
    }

    /// Copy with every switch and link power multiplied by `factor`.
    pub fn scale_power(&self, factor: f64) -> Topology {
        let mut t = self.clone();
        for s in &mut t.switches {
            s.power *= factor;
        }
        for e in &mut t.edges {
            e.power *= factor;
        }
        t
    }
}

/// Unsplittable demand between two switches.
#[derive(Debug, Clone, PartialEq)]
pub struct Flow {
    pub id: FlowId,
    pub source: SwitchId,
    pub destination: SwitchId,
    /// Bytes per second.
    pub rate: f64,
}

impl Flow {
    pub fn new(id: FlowId, source: SwitchId, destination: SwitchId, rate: f64) -> Self {
        Flow {
            id,
            source,
            destination,
            rate,
        }
    }
}

/// Problems with a flow set relative to a topology.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FlowError {
    #[error("flow {0} has the same source and destination")]
    Loop(FlowId),
    #[error("flow {flow} has non-positive or non-finite rate {rate}")]
    Rate { flow: FlowId, rate: f64 },
    #[error("flow {flow} references unknown switch {switch}")]
    UnknownSwitch { flow: FlowId, switch: SwitchId },
    #[error("flow id {0} appears more than once")]
    DuplicateId(FlowId),
}

pub fn validate_flows(t: &Topology, flows: &[Flow]) -> Result<(), FlowError> {
    let mut ids = BTreeSet::new();
    for f in flows {
        if !ids.insert(f.id) {
            return Err(FlowError::DuplicateId(f.id));
        }
        for s in [f.source, f.destination] {
            if s >= t.switches.len() {
                return Err(FlowError::UnknownSwitch { flow: f.id, switch: s });
            }
        }
        if f.source == f.destination {
            return Err(FlowError::Loop(f.id));
        }
        if !(f.rate.is_finite() && f.rate > 0.0) {
            return Err(FlowError::Rate {
                flow: f.id,
                rate: f.rate,
            });
        }
    }
    Ok(())
}

/// A directed walk: `switches[i]` and `switches[i + 1]` are joined by
/// `edges[i]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Path {
    pub switches: Vec<SwitchId>,
    pub edges: Vec<EdgeId>,
}

impl Path {
    /// Resolves the edges of a switch sequence; `None` if two consecutive
    /// switches are not adjacent.
    pub fn from_switches(t: &Topology, switches: Vec<SwitchId>) -> Option<Path> {
        let mut edges = Vec::with_capacity(switches.len().saturating_sub(1));
        for w in switches.windows(2) {
            edges.push(t.edge_between(w[0], w[1])?);
        }
        Some(Path { switches, edges })
    }

    pub fn hops(&self) -> usize {
        self.edges.len()
    }

    pub fn is_simple(&self) -> bool {
        let set: BTreeSet<_> = self.switches.iter().collect();
        set.len() == self.switches.len()
    }
}

/// Path assigned to each flow.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FlowRouting {
    pub paths: BTreeMap<FlowId, Path>,
}

impl FlowRouting {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, flow: FlowId, path: Path) {
        self.paths.insert(flow, path);
    }

    pub fn get(&self, flow: FlowId) -> Option<&Path> {
        self.paths.get(&flow)
    }

    /// Per-edge sum of rates of the flows crossing it. Unknown flows and
    /// out-of-range edges are skipped.
    pub fn edge_loads(&self, t: &Topology, flows: &[Flow]) -> Vec<f64> {
        let mut load = alloc::vec![0.0; t.edges.len()];
        for f in flows {
            if let Some(p) = self.paths.get(&f.id) {
                for &e in &p.edges {
                    if let Some(l) = load.get_mut(e) {
                        *l += f.rate;
                    }
                }
            }
        }
        load
    }
}

/// Power state of every switch and link.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkState {
    pub switch_on: Vec<bool>,
    pub link_active: Vec<bool>,
    /// Whether at least one flow crosses the link.
    pub link_used: Vec<bool>,
}

impl NetworkState {
    pub fn all_off(t: &Topology) -> Self {
        NetworkState {
            switch_on: alloc::vec![false; t.switches.len()],
            link_active: alloc::vec![false; t.edges.len()],
            link_used: alloc::vec![false; t.edges.len()],
        }
    }

    /// Minimal state consistent with `routing`: an element is powered iff
    /// some routed path touches it.
    pub fn derive(t: &Topology, routing: &FlowRouting) -> Self {
        let mut state = Self::all_off(t);
        for p in routing.paths.values() {
            for &s in &p.switches {
                if let Some(on) = state.switch_on.get_mut(s) {
                    *on = true;
                }
            }
            for &e in &p.edges {
                if e < t.edges.len() {
                    state.link_active[e] = true;
                    state.link_used[e] = true;
                }
            }
        }
        state
    }

    pub fn active_switches(&self) -> impl Iterator<Item = SwitchId> + '_ {
        self.switch_on.iter().enumerate().filter(|(_, &on)| on).map(|(i, _)| i)
    }

    pub fn active_links(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.link_active
            .iter()
            .enumerate()
            .filter(|(_, &on)| on)
            .map(|(i, _)| i)
    }
}

/// How link power enters the traffic objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ObjectiveMode {
    /// A link's power is charged once for every flow crossing it.
    #[default]
    PerFlowLink,
    /// A link's power is charged once if it is active.
    PerActiveLink,
}

impl ObjectiveMode {
    pub fn name(self) -> &'static str {
        match self {
            ObjectiveMode::PerFlowLink => "per-flow-link",
            ObjectiveMode::PerActiveLink => "per-active-link",
        }
    }
}
