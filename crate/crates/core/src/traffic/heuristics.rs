use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use super::{
    candidate_paths, finish, validate_instance, InfeasibilityCertificate, LoadTracker, TrafficError, TrafficSolution,
};
use crate::graph;
use crate::model::{EdgeId, Flow, FlowRouting, Layer, ObjectiveMode, Path, SwitchId, Topology};
use crate::{num, Optimality};

/// Processing order for [`heuristic_path_first`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FlowOrder {
    /// Fewest hops on the flow's shortest path first.
    ShortestFirst,
    LongestFirst,
    SmallestDemandFirst,
    HighestDemandFirst,
}

impl FlowOrder {
    pub const ALL: [FlowOrder; 4] = [
        FlowOrder::ShortestFirst,
        FlowOrder::LongestFirst,
        FlowOrder::SmallestDemandFirst,
        FlowOrder::HighestDemandFirst,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FlowOrder::ShortestFirst => "shortest-first",
            FlowOrder::LongestFirst => "longest-first",
            FlowOrder::SmallestDemandFirst => "smallest-demand-first",
            FlowOrder::HighestDemandFirst => "highest-demand-first",
        }
    }
}

/// Routes flows one at a time in the given order on the leftmost candidate
/// with the smallest objective increase that fits residual bandwidth. When
/// no candidate fits, falls back to the fewest-hop path over links with
/// enough residual bandwidth.
fn greedy_route(
    t: &Topology,
    adj: &[Vec<(SwitchId, EdgeId)>],
    all_flows: &[Flow],
    order: &[&Flow],
    cands: &[Vec<Path>],
    mode: ObjectiveMode,
    name: &'static str,
) -> Result<TrafficSolution, TrafficError> {
    let mut tracker = LoadTracker::new(t, mode);
    let mut routing = FlowRouting::new();
    for (i, f) in order.iter().enumerate() {
        let mut pick: Option<(f64, &Path)> = None;
        for p in &cands[i] {
            if !tracker.fits(p, f.rate) {
                continue;
            }
            let m = tracker.marginal(p);
            if pick.is_none_or(|(best, _)| num::strictly_less(m, best)) {
                pick = Some((m, p));
            }
        }
        let path = match pick {
            Some((_, p)) => p.clone(),
            None => graph::lex_shortest_path(
                adj,
                f.source,
                f.destination,
                |_| true,
                |e| tracker.residual_ok(e, f.rate),
            )
            .ok_or_else(|| {
                TrafficError::Infeasible(InfeasibilityCertificate {
                    flows: order[..=i].iter().map(|f| f.id).collect(),
                    saturated_edges: tracker.saturated_for(f.rate),
                    proven: false,
                })
            })?,
        };
        tracker.add(&path, f.rate);
        routing.insert(f.id, path);
    }
    Ok(finish(t, all_flows, routing, mode, Optimality::Heuristic(name), 0))
}

/// Routes flows in the given order on the candidate whose tightest edge
/// keeps the most residual bandwidth, fewer hops and leftmost on ties.
fn spread_route(
    t: &Topology,
    all_flows: &[Flow],
    order: &[&Flow],
    cands: &[Vec<Path>],
    mode: ObjectiveMode,
    name: &'static str,
) -> Result<TrafficSolution, TrafficError> {
    let mut tracker = LoadTracker::new(t, mode);
    let mut routing = FlowRouting::new();
    for (i, f) in order.iter().enumerate() {
        let mut pick: Option<(f64, &Path)> = None;
        for p in &cands[i] {
            if !tracker.fits(p, f.rate) {
                continue;
            }
            let room = p
                .edges
                .iter()
                .map(|&e| t.edges[e].bandwidth - tracker.load[e] - f.rate)
                .fold(f64::INFINITY, f64::min);
            let better = pick.is_none_or(|(best, q)| {
                num::strictly_less(best, room) || (!num::strictly_less(room, best) && p.hops() < q.hops())
            });
            if better {
                pick = Some((room, p));
            }
        }
        let Some((_, path)) = pick else {
            return Err(TrafficError::Infeasible(InfeasibilityCertificate {
                flows: order[..=i].iter().map(|f| f.id).collect(),
                saturated_edges: tracker.saturated_for(f.rate),
                proven: false,
            }));
        };
        tracker.add(path, f.rate);
        routing.insert(f.id, path.clone());
    }
    Ok(finish(t, all_flows, routing, mode, Optimality::Heuristic(name), 0))
}

/// Greedy bin-packing: flows in input order, each on the leftmost of its
/// `k_paths` shortest candidates that adds the least power.
pub fn heuristic_greedy_binpack(
    t: &Topology,
    flows: &[Flow],
    mode: ObjectiveMode,
    k_paths: usize,
) -> Result<TrafficSolution, TrafficError> {
    validate_instance(t, flows)?;
    let adj = t.adjacency();
    let order: Vec<&Flow> = flows.iter().collect();
    let cands = candidate_paths(t, &adj, &order, k_paths.max(1));
    greedy_route(t, &adj, flows, &order, &cands.per_flow, mode, "greedy-binpack")
}

/// Sorts flows by `order` (ties by flow id) and routes them greedily.
pub fn heuristic_path_first(
    t: &Topology,
    flows: &[Flow],
    mode: ObjectiveMode,
    order: FlowOrder,
    k_paths: usize,
) -> Result<TrafficSolution, TrafficError> {
    validate_instance(t, flows)?;
    let adj = t.adjacency();
    let sorted = sort_flows(&adj, flows, order);
    let cands = candidate_paths(t, &adj, &sorted, k_paths.max(1));
    greedy_route(t, &adj, flows, &sorted, &cands.per_flow, mode, order.name())
}

pub(crate) fn sort_flows<'f>(adj: &[Vec<(SwitchId, EdgeId)>], flows: &'f [Flow], order: FlowOrder) -> Vec<&'f Flow> {
    let hops =
        |f: &Flow| graph::hop_distances_to(adj, f.destination, |_| true, |_| true)[f.source].unwrap_or(usize::MAX);
    let mut keyed: Vec<(&Flow, usize)> = flows.iter().map(|f| (f, hops(f))).collect();
    keyed.sort_by(|(a, ha), (b, hb)| {
        let primary = match order {
            FlowOrder::ShortestFirst => ha.cmp(hb),
            FlowOrder::LongestFirst => hb.cmp(ha),
            FlowOrder::SmallestDemandFirst => a.rate.total_cmp(&b.rate),
            FlowOrder::HighestDemandFirst => b.rate.total_cmp(&a.rate),
        };
        primary.then(a.id.cmp(&b.id))
    });
    keyed.into_iter().map(|(f, _)| f).collect()
}

/// Fat-tree heuristic: size the aggregation and core layers from the
/// demand crossing them, then route greedily inside the powered subset.
///
/// Core count is the largest over pods of `ceil(cross-pod demand / core
/// link bandwidth)`; each pod powers enough aggregation switches to cover
/// its busiest edge switch uplinks and to reach the chosen cores. If the
/// subset cannot carry the flows it is widened one step at a time up to
/// the full topology.
pub fn heuristic_fattree_topology_aware(
    t: &Topology,
    flows: &[Flow],
    mode: ObjectiveMode,
    k_paths: usize,
) -> Result<TrafficSolution, TrafficError> {
    validate_instance(t, flows)?;
    let k = t.fat_tree_k.ok_or(TrafficError::NotFatTree)?;
    if t.switches.iter().any(|s| s.role.is_none()) {
        return Err(TrafficError::NotFatTree);
    }
    let half = (k / 2).max(1) as u64;
    let pods = k as usize;
    let role = |s: SwitchId| t.switches[s].role.expect("checked above");

    // uplink bandwidth per layer
    let mut edge_up_bw = f64::INFINITY;
    let mut agg_up_bw = f64::INFINITY;
    for e in &t.edges {
        let (la, lb) = (role(e.a).layer, role(e.b).layer);
        match (la.min(lb), la.max(lb)) {
            (Layer::Aggregation, Layer::Edge) => edge_up_bw = edge_up_bw.min(e.bandwidth),
            (Layer::Core, Layer::Aggregation) => agg_up_bw = agg_up_bw.min(e.bandwidth),
            _ => {}
        }
    }

    let mut edge_demand = alloc::vec![0.0; t.switches.len()];
    let mut cross_demand = alloc::vec![0.0; pods];
    let mut needs_agg = alloc::vec![false; pods];
    let mut forced: BTreeSet<SwitchId> = BTreeSet::new();
    for f in flows {
        let (rs, rd) = (role(f.source), role(f.destination));
        for (s, r) in [(f.source, rs), (f.destination, rd)] {
            forced.insert(s);
            if r.layer == Layer::Edge {
                edge_demand[s] += f.rate;
            }
        }
        match (rs.pod, rd.pod) {
            (Some(a), Some(b)) if a == b => needs_agg[a as usize] = true,
            (a, b) => {
                for p in [a, b].into_iter().flatten() {
                    cross_demand[p as usize] += f.rate;
                    needs_agg[p as usize] = true;
                }
            }
        }
    }

    let base_core = cross_demand
        .iter()
        .map(|&d| num::ceil_count(d / agg_up_bw))
        .max()
        .unwrap_or(0);
    let mut base_agg = alloc::vec![0u64; pods];
    for s in 0..t.switches.len() {
        let r = role(s);
        if let (Layer::Edge, Some(p)) = (r.layer, r.pod) {
            let n = num::ceil_count(edge_demand[s] / edge_up_bw);
            base_agg[p as usize] = base_agg[p as usize].max(n);
        }
    }
    for p in 0..pods {
        if needs_agg[p] {
            base_agg[p] = base_agg[p].max(1);
        }
        if cross_demand[p] > 0.0 {
            base_agg[p] = base_agg[p].max(base_core.div_ceil(half));
        }
    }

    let full_adj = t.adjacency();
    let order: Vec<&Flow> = flows.iter().collect();
    let max_core = half * half;
    let mut widen = 0u64;
    let mut previous: Option<Vec<bool>> = None;
    loop {
        let n_core = if base_core > 0 {
            (base_core + widen).min(max_core)
        } else {
            0
        };
        let active: Vec<bool> = (0..t.switches.len())
            .map(|s| {
                let r = role(s);
                if forced.contains(&s) {
                    return true;
                }
                match r.layer {
                    Layer::Core => (r.index as u64) < n_core,
                    Layer::Aggregation => {
                        let p = r.pod.unwrap_or(0) as usize;
                        let n = if base_agg[p] > 0 {
                            (base_agg[p] + widen).max(n_core.div_ceil(half)).min(half)
                        } else {
                            0
                        };
                        (r.index as u64) < n
                    }
                    Layer::Edge => edge_demand[s] > 0.0,
                }
            })
            .collect();
        if previous.as_ref() == Some(&active) {
            // widening saturated: power the whole fabric and spread the load
            let cands = candidate_paths(t, &full_adj, &order, k_paths.max(1));
            return greedy_route(t, &full_adj, flows, &order, &cands.per_flow, mode, "topology-aware")
                .or_else(|_| spread_route(t, flows, &order, &cands.per_flow, mode, "topology-aware"));
        }
        let sub_adj: Vec<Vec<(SwitchId, EdgeId)>> = full_adj
            .iter()
            .enumerate()
            .map(|(u, list)| {
                if !active[u] {
                    return Vec::new();
                }
                list.iter().copied().filter(|&(v, _)| active[v]).collect()
            })
            .collect();
        let cands = candidate_paths(t, &sub_adj, &order, k_paths.max(1));
        match greedy_route(t, &sub_adj, flows, &order, &cands.per_flow, mode, "topology-aware") {
            Err(TrafficError::Infeasible(_)) => {
                previous = Some(active);
                widen += 1;
            }
            other => return other,
        }
    }
}
