//! Lower bounds valid over every simple path, not just the candidate sets.
//!
//! The exact solver compares its incumbent against [`root_bound`] to decide
//! whether a search over truncated candidate lists is still optimal. Three
//! bounds are combined by taking the largest:
//!
//! * paths: forced endpoint switches plus the cheapest single flow;
//! * separators: in any routing, the powered switches split into connected
//!   components, each holding whole classes of flows that share endpoints.
//!   For a candidate grouping of classes into components, every flow must
//!   cross disjoint sets of switches that are not endpoints, and a component
//!   of `n` switches needs `n - 1` links. The bound is the cheapest grouping;
//! * cuts: flows that leave a switch (or a fat-tree pod) need as many edges
//!   of that cut as their rates require; when that is every edge of the cut,
//!   those edges and their endpoints are certainly on.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::vec::Vec;

use crate::model::{EdgeId, Flow, ObjectiveMode, SwitchId, Topology};
use crate::num;

type Adjacency = [Vec<(SwitchId, EdgeId)>];

/// Above this many endpoint classes the grouping search is skipped.
const MAX_CLASSES: usize = 12;

pub(crate) fn root_bound(t: &Topology, adj: &Adjacency, flows: &[&Flow], mode: ObjectiveMode) -> f64 {
    let mut best = path_bound(t, adj, flows, mode);
    best = best.max(cut_bound(t, flows, mode, adj));
    if let Some(b) = separator_bound(t, adj, flows, mode) {
        best = best.max(b);
    }
    best
}

/// Cheapest `src` to `dst` cost with per-switch and per-edge weights.
fn min_cost(adj: &Adjacency, src: SwitchId, dst: SwitchId, node_w: &[f64], edge_w: &[f64]) -> f64 {
    let n = adj.len();
    let mut dist = alloc::vec![f64::INFINITY; n];
    let mut done = alloc::vec![false; n];
    dist[src] = node_w[src];
    loop {
        let Some(u) = (0..n)
            .filter(|&v| !done[v] && dist[v].is_finite())
            .min_by(|&a, &b| dist[a].total_cmp(&dist[b]))
        else {
            return f64::INFINITY;
        };
        if u == dst {
            return dist[u];
        }
        done[u] = true;
        for &(v, e) in &adj[u] {
            let d = dist[u] + edge_w[e] + node_w[v];
            if d < dist[v] {
                dist[v] = d;
            }
        }
    }
}

/// Summed cheapest link cost of every flow; link power is additive per flow
/// under [`ObjectiveMode::PerFlowLink`].
fn link_floor(t: &Topology, adj: &Adjacency, flows: &[&Flow]) -> f64 {
    let edge_w: Vec<f64> = t.edges.iter().map(|e| e.power).collect();
    let zero = alloc::vec![0.0; t.switches.len()];
    flows
        .iter()
        .map(|f| min_cost(adj, f.source, f.destination, &zero, &edge_w))
        .sum()
}

fn path_bound(t: &Topology, adj: &Adjacency, flows: &[&Flow], mode: ObjectiveMode) -> f64 {
    let mut node_w: Vec<f64> = t.switches.iter().map(|s| s.power).collect();
    let mut forced = 0.0;
    for f in flows {
        for s in [f.source, f.destination] {
            if node_w[s] != 0.0 {
                forced += node_w[s];
                node_w[s] = 0.0;
            }
        }
    }
    let edge_w: Vec<f64> = t.edges.iter().map(|e| e.power).collect();
    let zero_nodes = alloc::vec![0.0; t.switches.len()];
    let mut link_sum = 0.0;
    let mut extra: f64 = 0.0;
    for f in flows {
        let residual = min_cost(adj, f.source, f.destination, &node_w, &edge_w);
        match mode {
            ObjectiveMode::PerFlowLink => {
                let link = min_cost(adj, f.source, f.destination, &zero_nodes, &edge_w);
                link_sum += link;
                extra = extra.max(residual - link);
            }
            ObjectiveMode::PerActiveLink => extra = extra.max(residual),
        }
    }
    forced + link_sum + extra
}

/// Flows grouped by connected endpoints, as flow indices.
fn endpoint_classes(flows: &[&Flow]) -> Vec<Vec<usize>> {
    let mut parent: BTreeMap<SwitchId, SwitchId> = BTreeMap::new();
    fn find(parent: &mut BTreeMap<SwitchId, SwitchId>, s: SwitchId) -> SwitchId {
        let p = *parent.entry(s).or_insert(s);
        if p == s {
            return s;
        }
        let root = find(parent, p);
        parent.insert(s, root);
        root
    }
    for f in flows {
        let (a, b) = (find(&mut parent, f.source), find(&mut parent, f.destination));
        if a != b {
            parent.insert(a.max(b), a.min(b));
        }
    }
    let mut by_root: BTreeMap<SwitchId, Vec<usize>> = BTreeMap::new();
    for (i, f) in flows.iter().enumerate() {
        let root = find(&mut parent, f.source);
        by_root.entry(root).or_default().push(i);
    }
    by_root.into_values().collect()
}

/// Distances from `src` counting only switches that are not `free`,
/// never entering `blocked` switches.
fn free_distances(adj: &Adjacency, src: SwitchId, free: &[bool], blocked: &[bool]) -> Vec<Option<usize>> {
    let mut dist = alloc::vec![None; adj.len()];
    dist[src] = Some(0);
    let mut queue = VecDeque::from([src]);
    while let Some(u) = queue.pop_front() {
        let du = dist[u].unwrap_or(0);
        for &(v, _) in &adj[u] {
            if blocked[v] {
                continue;
            }
            let dv = du + usize::from(!free[v]);
            if dist[v].is_none_or(|old| dv < old) {
                dist[v] = Some(dv);
                if free[v] {
                    queue.push_front(v);
                } else {
                    queue.push_back(v);
                }
            }
        }
    }
    dist
}

/// Lower bound for the flows of `block` forming one component that avoids
/// every endpoint outside the block. `None` if that is impossible.
fn block_value(
    t: &Topology,
    adj: &Adjacency,
    flows: &[&Flow],
    block: &[usize],
    terminals: &[bool],
    min_edge: f64,
    mode: ObjectiveMode,
) -> Option<f64> {
    let n = t.switches.len();
    let mut free = alloc::vec![false; n];
    for &i in block {
        free[flows[i].source] = true;
        free[flows[i].destination] = true;
    }
    let blocked: Vec<bool> = (0..n).map(|s| terminals[s] && !free[s]).collect();

    let mut sets: BTreeSet<(usize, Vec<SwitchId>)> = BTreeSet::new();
    for &i in block {
        let f = flows[i];
        for (from, to) in [(f.source, f.destination), (f.destination, f.source)] {
            let dist = free_distances(adj, from, &free, &blocked);
            let levels = dist[to]?;
            for level in 1..=levels {
                let members: Vec<SwitchId> = (0..n).filter(|&s| !free[s] && dist[s] == Some(level)).collect();
                sets.insert((members.len(), members));
            }
        }
    }
    let mut taken = alloc::vec![false; n];
    let mut switches: f64 = (0..n).filter(|&s| free[s]).map(|s| t.switches[s].power).sum();
    let mut count = free.iter().filter(|&&x| x).count();
    for (_, members) in sets {
        if members.iter().any(|&s| taken[s]) {
            continue;
        }
        for &s in &members {
            taken[s] = true;
        }
        switches += members
            .iter()
            .map(|&s| t.switches[s].power)
            .fold(f64::INFINITY, f64::min);
        count += 1;
    }
    Some(match mode {
        ObjectiveMode::PerActiveLink => switches + count.saturating_sub(1) as f64 * min_edge,
        ObjectiveMode::PerFlowLink => switches,
    })
}

fn separator_bound(t: &Topology, adj: &Adjacency, flows: &[&Flow], mode: ObjectiveMode) -> Option<f64> {
    if flows.is_empty() {
        return Some(0.0);
    }
    let classes = endpoint_classes(flows);
    let c = classes.len();
    if c > MAX_CLASSES {
        return None;
    }
    let mut terminals = alloc::vec![false; t.switches.len()];
    for f in flows {
        terminals[f.source] = true;
        terminals[f.destination] = true;
    }
    let min_edge = t.edges.iter().map(|e| e.power).fold(f64::INFINITY, f64::min);
    let min_edge = if min_edge.is_finite() { min_edge } else { 0.0 };

    let full = (1usize << c) - 1;
    let mut value = alloc::vec![f64::INFINITY; full + 1];
    for (mask, slot) in value.iter_mut().enumerate().skip(1) {
        let block: Vec<usize> = (0..c)
            .filter(|&k| mask >> k & 1 == 1)
            .flat_map(|k| classes[k].iter().copied())
            .collect();
        if let Some(v) = block_value(t, adj, flows, &block, &terminals, min_edge, mode) {
            *slot = v;
        }
    }
    // cheapest partition of the classes into blocks
    let mut best = alloc::vec![f64::INFINITY; full + 1];
    best[0] = 0.0;
    for mask in 1..=full {
        let low = mask & mask.wrapping_neg();
        let rest = mask ^ low;
        let mut sub = rest;
        loop {
            let b = sub | low;
            let v = value[b] + best[mask ^ b];
            if v < best[mask] {
                best[mask] = v;
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & rest;
        }
    }
    let links = match mode {
        ObjectiveMode::PerFlowLink => link_floor(t, adj, flows),
        ObjectiveMode::PerActiveLink => 0.0,
    };
    Some(best[full] + links)
}

/// Edges needed to carry `rates` across a cut whose widest edge is `widest`.
fn edges_needed(rates: &mut [f64], widest: f64) -> usize {
    if rates.is_empty() {
        return 0;
    }
    rates.sort_by(|a, b| b.total_cmp(a));
    let volume = num::ceil_count(rates.iter().sum::<f64>() / widest) as usize;
    // the largest prefix whose two smallest members cannot share an edge
    let mut clash = 1;
    while clash < rates.len() && !num::fits(rates[clash - 1] + rates[clash], widest) {
        clash += 1;
    }
    volume.max(clash)
}

fn cut_bound(t: &Topology, flows: &[&Flow], mode: ObjectiveMode, adj: &Adjacency) -> f64 {
    let n = t.switches.len();
    let mut on = alloc::vec![false; n];
    for f in flows {
        on[f.source] = true;
        on[f.destination] = true;
    }
    let mut cuts: Vec<Vec<bool>> = (0..n)
        .filter(|&s| on[s])
        .map(|s| (0..n).map(|v| v == s).collect())
        .collect();
    let pods: BTreeSet<u32> = t.switches.iter().filter_map(|s| s.role.and_then(|r| r.pod)).collect();
    for p in pods {
        cuts.push(
            t.switches
                .iter()
                .map(|s| s.role.and_then(|r| r.pod) == Some(p))
                .collect(),
        );
    }

    let mut forced = alloc::vec![false; t.edges.len()];
    let mut partial: Vec<(usize, Vec<EdgeId>)> = Vec::new();
    for inside in &cuts {
        let mut rates: Vec<f64> = flows
            .iter()
            .filter(|f| inside[f.source] != inside[f.destination])
            .map(|f| f.rate)
            .collect();
        let boundary: Vec<EdgeId> = (0..t.edges.len())
            .filter(|&e| inside[t.edges[e].a] != inside[t.edges[e].b])
            .collect();
        let Some(widest) = boundary.iter().map(|&e| t.edges[e].bandwidth).reduce(f64::max) else {
            continue;
        };
        let needed = edges_needed(&mut rates, widest).min(boundary.len());
        if needed == 0 {
            continue;
        }
        if needed == boundary.len() {
            for &e in &boundary {
                forced[e] = true;
            }
        } else {
            partial.push((needed, boundary));
        }
    }
    for (e, edge) in t.edges.iter().enumerate() {
        if forced[e] {
            on[edge.a] = true;
            on[edge.b] = true;
        }
    }
    let switches: f64 = (0..n).filter(|&s| on[s]).map(|s| t.switches[s].power).sum();
    let links = match mode {
        ObjectiveMode::PerFlowLink => link_floor(t, adj, flows),
        ObjectiveMode::PerActiveLink => {
            let mut claimed = forced.clone();
            let mut total: f64 = (0..t.edges.len())
                .filter(|&e| forced[e])
                .map(|e| t.edges[e].power)
                .sum();
            for (needed, boundary) in partial {
                let have = boundary.iter().filter(|&&e| forced[e]).count();
                let open: Vec<EdgeId> = boundary.into_iter().filter(|&e| !forced[e]).collect();
                if have >= needed || open.iter().any(|&e| claimed[e]) {
                    continue;
                }
                let mut powers: Vec<f64> = open.iter().map(|&e| t.edges[e].power).collect();
                powers.sort_by(f64::total_cmp);
                total += powers.iter().take(needed - have).sum::<f64>();
                for e in open {
                    claimed[e] = true;
                }
            }
            total
        }
    };
    switches + links
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate_flows, generate_topology, GeneratorSpec, Locality, TopologyKind};
    use crate::model::fixtures::triangle;

    fn refs(flows: &[Flow]) -> Vec<&Flow> {
        flows.iter().collect()
    }

    #[test]
    fn triangle_single_flow_is_tight() {
        let t = triangle();
        let flows = [Flow::new(0, 0, 1, 1.0)];
        for mode in [ObjectiveMode::PerFlowLink, ObjectiveMode::PerActiveLink] {
            assert_eq!(root_bound(&t, &t.adjacency(), &refs(&flows), mode), 3.0);
        }
    }

    #[test]
    fn clash_counting() {
        assert_eq!(edges_needed(&mut [0.9, 0.9, 0.9], 1.0), 3);
        assert_eq!(edges_needed(&mut [0.5, 0.5], 1.0), 1);
        assert_eq!(edges_needed(&mut [0.6, 0.3, 0.3], 1.0), 2);
        assert_eq!(edges_needed(&mut [], 1.0), 0);
    }

    #[test]
    fn classes_merge_shared_endpoints() {
        let flows = [
            Flow::new(0, 0, 1, 1.0),
            Flow::new(1, 2, 3, 1.0),
            Flow::new(2, 1, 2, 1.0),
            Flow::new(3, 5, 6, 1.0),
        ];
        assert_eq!(
            endpoint_classes(&refs(&flows)),
            alloc::vec![alloc::vec![0, 1, 2], alloc::vec![3]]
        );
    }

    #[test]
    fn fat_tree_light_load_spans_one_tree() {
        // 8 edge switches, one aggregation switch per pod, one core, 12 links
        let t = generate_topology(&GeneratorSpec::new(TopologyKind::FatTree(4))).unwrap();
        let flows = generate_flows(&t, 8, 0.05, Locality::CrossPod, 0).unwrap();
        let b = root_bound(&t, &t.adjacency(), &refs(&flows), ObjectiveMode::PerActiveLink);
        assert_eq!(b, 13.0 * 100.0 + 12.0 * 5.0);
    }

    #[test]
    fn fat_tree_heavy_load_needs_everything() {
        let t = generate_topology(&GeneratorSpec::new(TopologyKind::FatTree(4))).unwrap();
        let flows = generate_flows(&t, 8, 0.9, Locality::CrossPod, 0).unwrap();
        let b = root_bound(&t, &t.adjacency(), &refs(&flows), ObjectiveMode::PerActiveLink);
        assert_eq!(b, 20.0 * 100.0 + 32.0 * 5.0);
    }
}
