use alloc::vec::Vec;
use core::fmt;

use crate::model::{EdgeId, Flow, FlowId, FlowRouting, NetworkState, ObjectiveMode, SwitchId, Topology};
use crate::num;

/// A broken constraint of the traffic model.
#[derive(Debug, Clone, PartialEq)]
pub enum TrafficViolation {
    /// Eq. 2: rate carried by a link exceeds its bandwidth.
    Capacity {
        edge: EdgeId,
        load: f64,
        bandwidth: f64,
    },
    /// Eq. 3: the flow's walk breaks or revisits a switch.
    Conservation {
        flow: FlowId,
        switch: SwitchId,
    },
    /// Eq. 4: the flow is unrouted or does not join its endpoints.
    Reachability {
        flow: FlowId,
    },
    /// Eq. 5: the flow enters a switch that is off.
    EntersInactiveSwitch {
        flow: FlowId,
        edge: EdgeId,
        switch: SwitchId,
    },
    /// Eq. 6: the flow leaves a switch that is off.
    LeavesInactiveSwitch {
        flow: FlowId,
        edge: EdgeId,
        switch: SwitchId,
    },
    /// Eq. 7: a switch is on although no flow touches it.
    IdleSwitchOn {
        switch: SwitchId,
    },
    /// A used link is marked inactive.
    InactiveLinkUsed {
        edge: EdgeId,
    },
    /// The recorded `link_used` flag disagrees with the routing.
    LinkUsageMismatch {
        edge: EdgeId,
        recorded: bool,
    },
    UnknownFlow {
        flow: FlowId,
    },
    UnknownEdge {
        flow: FlowId,
        edge: EdgeId,
    },
    UnknownSwitch {
        flow: FlowId,
        switch: SwitchId,
    },
    /// State vectors do not match the topology size.
    StateShape,
}

impl TrafficViolation {
    /// Model equation the violation belongs to; `None` for structural
    /// problems and link-state bookkeeping.
    pub fn equation(&self) -> Option<u8> {
        use TrafficViolation::*;
        match self {
            Capacity { .. } => Some(2),
            Conservation { .. } => Some(3),
            Reachability { .. } => Some(4),
            EntersInactiveSwitch { .. } => Some(5),
            LeavesInactiveSwitch { .. } => Some(6),
            IdleSwitchOn { .. } => Some(7),
            _ => None,
        }
    }
}

impl fmt::Display for TrafficViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use TrafficViolation::*;
        if let Some(eq) = self.equation() {
            write!(f, "eq{eq}: ")?;
        }
        match self {
            Capacity { edge, load, bandwidth } => write!(f, "edge {edge} carries {load} > bandwidth {bandwidth}"),
            Conservation { flow, switch } => write!(f, "flow {flow} path broken at switch {switch}"),
            Reachability { flow } => write!(f, "flow {flow} does not connect its endpoints"),
            EntersInactiveSwitch { flow, edge, switch } => {
                write!(f, "flow {flow} enters inactive switch {switch} over edge {edge}")
            }
            LeavesInactiveSwitch { flow, edge, switch } => {
                write!(f, "flow {flow} leaves inactive switch {switch} over edge {edge}")
            }
            IdleSwitchOn { switch } => write!(f, "switch {switch} is on but carries no flow"),
            InactiveLinkUsed { edge } => write!(f, "edge {edge} is used but inactive"),
            LinkUsageMismatch { edge, recorded } => write!(f, "edge {edge} usage recorded as {recorded}"),
            UnknownFlow { flow } => write!(f, "routing references unknown flow {flow}"),
            UnknownEdge { flow, edge } => write!(f, "flow {flow} references unknown edge {edge}"),
            UnknownSwitch { flow, switch } => write!(f, "flow {flow} references unknown switch {switch}"),
            StateShape => write!(f, "state vectors do not match topology"),
        }
    }
}

/// Structural check of one flow's path; pushes violations and returns
/// whether the path is usable for load accounting.
fn check_path(t: &Topology, flow: &Flow, routing: &FlowRouting, out: &mut Vec<TrafficViolation>) -> bool {
    let Some(path) = routing.get(flow.id) else {
        out.push(TrafficViolation::Reachability { flow: flow.id });
        return false;
    };
    let mut ok = true;
    if let Some(&s) = path.switches.iter().find(|&&s| s >= t.switches.len()) {
        out.push(TrafficViolation::UnknownSwitch {
            flow: flow.id,
            switch: s,
        });
        return false;
    }
    if let Some(&e) = path.edges.iter().find(|&&e| e >= t.edges.len()) {
        out.push(TrafficViolation::UnknownEdge { flow: flow.id, edge: e });
        return false;
    }
    if path.switches.first() != Some(&flow.source) || path.switches.last() != Some(&flow.destination) {
        out.push(TrafficViolation::Reachability { flow: flow.id });
        ok = false;
    }
    if path.switches.len() != path.edges.len() + 1 {
        let at = path.switches.last().copied().unwrap_or(flow.source);
        out.push(TrafficViolation::Conservation {
            flow: flow.id,
            switch: at,
        });
        return false;
    }
    for (i, &e) in path.edges.iter().enumerate() {
        let (u, v) = (path.switches[i], path.switches[i + 1]);
        if t.edges[e].other(u) != Some(v) {
            out.push(TrafficViolation::Conservation {
                flow: flow.id,
                switch: u,
            });
            ok = false;
        }
    }
    for (i, s) in path.switches.iter().enumerate() {
        if path.switches[..i].contains(s) {
            out.push(TrafficViolation::Conservation {
                flow: flow.id,
                switch: *s,
            });
            ok = false;
        }
    }
    ok
}

/// Every violated traffic constraint; empty iff the routing and state are
/// feasible and the state is the tight closure of the routing.
pub fn check_traffic_constraints(
    t: &Topology,
    flows: &[Flow],
    routing: &FlowRouting,
    state: &NetworkState,
) -> Vec<TrafficViolation> {
    let mut out = Vec::new();
    if state.switch_on.len() != t.switches.len()
        || state.link_active.len() != t.edges.len()
        || state.link_used.len() != t.edges.len()
    {
        out.push(TrafficViolation::StateShape);
        return out;
    }
    for &id in routing.paths.keys() {
        if !flows.iter().any(|f| f.id == id) {
            out.push(TrafficViolation::UnknownFlow { flow: id });
        }
    }

    let mut load = alloc::vec![0.0; t.edges.len()];
    let mut touched = alloc::vec![false; t.switches.len()];
    let mut used = alloc::vec![false; t.edges.len()];
    for f in flows {
        if !check_path(t, f, routing, &mut out) {
            continue;
        }
        let path = &routing.paths[&f.id];
        for (i, &e) in path.edges.iter().enumerate() {
            load[e] += f.rate;
            used[e] = true;
            let (from, to) = (path.switches[i], path.switches[i + 1]);
            touched[from] = true;
            touched[to] = true;
            if !state.switch_on[to] {
                out.push(TrafficViolation::EntersInactiveSwitch {
                    flow: f.id,
                    edge: e,
                    switch: to,
                });
            }
            if !state.switch_on[from] {
                out.push(TrafficViolation::LeavesInactiveSwitch {
                    flow: f.id,
                    edge: e,
                    switch: from,
                });
            }
        }
    }

    for (e, edge) in t.edges.iter().enumerate() {
        if !num::fits(load[e], edge.bandwidth) {
            out.push(TrafficViolation::Capacity {
                edge: e,
                load: load[e],
                bandwidth: edge.bandwidth,
            });
        }
        if used[e] && !state.link_active[e] {
            out.push(TrafficViolation::InactiveLinkUsed { edge: e });
        }
        if used[e] != state.link_used[e] {
            out.push(TrafficViolation::LinkUsageMismatch {
                edge: e,
                recorded: state.link_used[e],
            });
        }
    }
    for (s, &on) in state.switch_on.iter().enumerate() {
        if on && !touched[s] {
            out.push(TrafficViolation::IdleSwitchOn { switch: s });
        }
    }
    out
}

/// Objective value without feasibility checks.
pub(crate) fn objective_value(
    t: &Topology,
    flows: &[Flow],
    routing: &FlowRouting,
    state: &NetworkState,
    mode: ObjectiveMode,
) -> f64 {
    let switches: f64 = state.active_switches().map(|s| t.switches[s].power).sum();
    let links: f64 = match mode {
        ObjectiveMode::PerFlowLink => flows
            .iter()
            .filter_map(|f| routing.get(f.id))
            .flat_map(|p| p.edges.iter())
            .map(|&e| t.edges[e].power)
            .sum(),
        ObjectiveMode::PerActiveLink => state.active_links().map(|e| t.edges[e].power).sum(),
    };
    links + switches
}

/// Total switch and link power of a feasible routing and state, in watts.
pub fn evaluate_traffic_objective(
    t: &Topology,
    flows: &[Flow],
    routing: &FlowRouting,
    state: &NetworkState,
    mode: ObjectiveMode,
) -> Result<f64, Vec<TrafficViolation>> {
    let violations = check_traffic_constraints(t, flows, routing, state);
    if !violations.is_empty() {
        return Err(violations);
    }
    Ok(objective_value(t, flows, routing, state, mode))
}

/// The tight on/off closure of `routing`.
pub fn derive_network_state(t: &Topology, _flows: &[Flow], routing: &FlowRouting) -> NetworkState {
    NetworkState::derive(t, routing)
}
