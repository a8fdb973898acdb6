//! Path primitives over a [`Topology`].
//!
//! Paths are ordered by hop count, then lexicographically by switch
//! sequence. Every routine here produces paths in that order, which makes
//! "leftmost" well defined for the heuristics.

use alloc::collections::{BTreeSet, VecDeque};
use alloc::vec::Vec;

use crate::model::{EdgeId, Path, SwitchId, Topology};

type Adjacency = [Vec<(SwitchId, EdgeId)>];

/// Hop distances to `target` over the allowed subgraph.
pub fn hop_distances_to<N, E>(adj: &Adjacency, target: SwitchId, node_ok: N, edge_ok: E) -> Vec<Option<usize>>
where
    N: Fn(SwitchId) -> bool,
    E: Fn(EdgeId) -> bool,
{
    let mut dist = alloc::vec![None; adj.len()];
    if target >= adj.len() || !node_ok(target) {
        return dist;
    }
    dist[target] = Some(0);
    let mut queue = VecDeque::from([target]);
    while let Some(u) = queue.pop_front() {
        let du = dist[u].unwrap_or(0);
        for &(v, e) in &adj[u] {
            if dist[v].is_none() && node_ok(v) && edge_ok(e) {
                dist[v] = Some(du + 1);
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Fewest-hop path from `src` to `dst` using only allowed switches and
/// edges; among those, the lexicographically smallest switch sequence.
pub fn lex_shortest_path<N, E>(adj: &Adjacency, src: SwitchId, dst: SwitchId, node_ok: N, edge_ok: E) -> Option<Path>
where
    N: Fn(SwitchId) -> bool,
    E: Fn(EdgeId) -> bool,
{
    if src >= adj.len() || !node_ok(src) {
        return None;
    }
    let dist = hop_distances_to(adj, dst, &node_ok, &edge_ok);
    let mut d = dist[src]?;
    let mut switches = alloc::vec![src];
    let mut edges = Vec::with_capacity(d);
    let mut u = src;
    while d > 0 {
        // adjacency is sorted by neighbour id, so the first hit is leftmost
        let &(v, e) = adj[u].iter().find(|&&(v, e)| edge_ok(e) && dist[v] == Some(d - 1))?;
        switches.push(v);
        edges.push(e);
        u = v;
        d -= 1;
    }
    Some(Path { switches, edges })
}

/// Result of a bounded loop-free path enumeration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathSet {
    /// Up to `k` paths in (hops, switch sequence) order.
    pub paths: Vec<Path>,
    /// True when `paths` holds every simple path between the endpoints.
    pub complete: bool,
}

/// The `k` shortest loop-free paths by (hop count, switch sequence), using
/// Yen's algorithm with lexicographic tie-breaking.
pub fn k_shortest_paths(t: &Topology, adj: &Adjacency, src: SwitchId, dst: SwitchId, k: usize) -> PathSet {
    let wanted = k.saturating_add(1);
    let mut found: Vec<Path> = Vec::new();
    let Some(first) = lex_shortest_path(adj, src, dst, |_| true, |_| true) else {
        return PathSet {
            paths: found,
            complete: true,
        };
    };
    found.push(first);
    let mut seen: BTreeSet<Vec<SwitchId>> = BTreeSet::new();
    seen.insert(found[0].switches.clone());
    let mut candidates: BTreeSet<(usize, Vec<SwitchId>)> = BTreeSet::new();

    while found.len() < wanted {
        let prev = found.last().unwrap().switches.clone();
        for i in 0..prev.len() - 1 {
            let spur = prev[i];
            let root = &prev[..=i];
            let mut blocked_edges = BTreeSet::new();
            for p in &found {
                if p.switches.len() > i + 1 && p.switches[..=i] == *root {
                    blocked_edges.insert(p.edges[i]);
                }
            }
            let blocked_nodes: BTreeSet<SwitchId> = root[..i].iter().copied().collect();
            let Some(tail) = lex_shortest_path(
                adj,
                spur,
                dst,
                |s| !blocked_nodes.contains(&s),
                |e| !blocked_edges.contains(&e),
            ) else {
                continue;
            };
            let mut seq = root[..i].to_vec();
            seq.extend_from_slice(&tail.switches);
            if !seen.contains(&seq) {
                candidates.insert((seq.len() - 1, seq));
            }
        }
        let Some((_, seq)) = candidates.pop_first() else {
            break;
        };
        seen.insert(seq.clone());
        found.push(Path::from_switches(t, seq).expect("spur paths follow existing edges"));
    }

    let complete = found.len() < wanted;
    found.truncate(k);
    PathSet { paths: found, complete }
}

/// Largest bottleneck bandwidth over all paths, `None` if disconnected.
pub fn widest_path_bandwidth(t: &Topology, adj: &Adjacency, src: SwitchId, dst: SwitchId) -> Option<f64> {
    let n = adj.len();
    if src >= n || dst >= n {
        return None;
    }
    let mut best = alloc::vec![f64::NEG_INFINITY; n];
    let mut done = alloc::vec![false; n];
    best[src] = f64::INFINITY;
    for _ in 0..n {
        let u = (0..n)
            .filter(|&v| !done[v] && best[v] > f64::NEG_INFINITY)
            .max_by(|&a, &b| best[a].total_cmp(&best[b]).then(b.cmp(&a)))?;
        if u == dst {
            return Some(best[u]);
        }
        done[u] = true;
        for &(v, e) in &adj[u] {
            let w = best[u].min(t.edges[e].bandwidth);
            if !done[v] && w > best[v] {
                best[v] = w;
            }
        }
    }
    None
}

/// All-pairs hop distances by breadth-first search.
pub fn hop_distance_matrix(adj: &Adjacency) -> Vec<Vec<Option<usize>>> {
    (0..adj.len())
        .map(|s| hop_distances_to(adj, s, |_| true, |_| true))
        .collect()
}
