//! Brute-force reference solvers.
//!
//! Nothing here calls into the crate's solvers, path search or checkers;
//! only the plain data types are shared.

#![allow(dead_code)]

use sdn_energy::placement::PlacementInstance;
use sdn_energy::{Flow, ObjectiveMode, Topology};

const TOL: f64 = 1e-9;

pub fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= TOL * a.abs().max(b.abs()).max(1.0)
}

fn within(load: f64, cap: f64) -> bool {
    load <= cap + TOL * cap.abs().max(1.0)
}

/// A simple path as (switches, edge indices).
pub type RawPath = (Vec<usize>, Vec<usize>);

/// Every simple path from `src` to `dst`, found by plain depth-first search
/// over the edge list.
pub fn simple_paths(t: &Topology, src: usize, dst: usize) -> Vec<RawPath> {
    let n = t.switches.len();
    let mut nbrs = vec![Vec::new(); n];
    for (i, e) in t.edges.iter().enumerate() {
        nbrs[e.a].push((e.b, i));
        nbrs[e.b].push((e.a, i));
    }
    let mut out = Vec::new();
    let mut seen = vec![false; n];
    let mut nodes = vec![src];
    let mut edges = Vec::new();
    seen[src] = true;
    walk(&nbrs, dst, &mut seen, &mut nodes, &mut edges, &mut out);
    out
}

fn walk(
    nbrs: &[Vec<(usize, usize)>],
    dst: usize,
    seen: &mut [bool],
    nodes: &mut Vec<usize>,
    edges: &mut Vec<usize>,
    out: &mut Vec<RawPath>,
) {
    let at = *nodes.last().unwrap();
    if at == dst {
        out.push((nodes.clone(), edges.clone()));
        return;
    }
    for &(next, e) in &nbrs[at] {
        if seen[next] {
            continue;
        }
        seen[next] = true;
        nodes.push(next);
        edges.push(e);
        walk(nbrs, dst, seen, nodes, edges, out);
        edges.pop();
        nodes.pop();
        seen[next] = false;
    }
}

/// Calls `visit` with every combination of one path per flow.
fn for_each_combination(options: &[Vec<RawPath>], visit: &mut dyn FnMut(&[&RawPath])) {
    fn rec<'a>(options: &'a [Vec<RawPath>], pick: &mut Vec<&'a RawPath>, visit: &mut dyn FnMut(&[&RawPath])) {
        if pick.len() == options.len() {
            visit(pick);
            return;
        }
        for p in &options[pick.len()] {
            pick.push(p);
            rec(options, pick, visit);
            pick.pop();
        }
    }
    rec(options, &mut Vec::new(), visit);
}

fn bandwidth_ok(t: &Topology, flows: &[Flow], pick: &[&RawPath]) -> bool {
    let mut load = vec![0.0; t.edges.len()];
    for (f, p) in flows.iter().zip(pick) {
        for &e in &p.1 {
            load[e] += f.rate;
        }
    }
    load.iter().zip(&t.edges).all(|(&l, e)| within(l, e.bandwidth))
}

/// Energy of a routing: powered switches plus link power per mode.
pub fn traffic_energy(t: &Topology, pick: &[&RawPath], mode: ObjectiveMode) -> f64 {
    let mut on = vec![false; t.switches.len()];
    let mut active = vec![false; t.edges.len()];
    let mut per_flow = 0.0;
    for p in pick {
        for &s in &p.0 {
            on[s] = true;
        }
        for &e in &p.1 {
            active[e] = true;
            per_flow += t.edges[e].power;
        }
    }
    let switches: f64 = (0..on.len()).filter(|&s| on[s]).map(|s| t.switches[s].power).sum();
    let links = match mode {
        ObjectiveMode::PerFlowLink => per_flow,
        ObjectiveMode::PerActiveLink => (0..active.len()).filter(|&e| active[e]).map(|e| t.edges[e].power).sum(),
    };
    switches + links
}

/// Minimum energy and every optimal routing (one switch list per flow, in
/// the order of `flows`), or `None` if nothing fits.
pub fn traffic_optima(t: &Topology, flows: &[Flow], mode: ObjectiveMode) -> Option<(f64, Vec<Vec<Vec<usize>>>)> {
    let options: Vec<Vec<RawPath>> = flows.iter().map(|f| simple_paths(t, f.source, f.destination)).collect();
    let mut best: Option<(f64, Vec<Vec<Vec<usize>>>)> = None;
    for_each_combination(&options, &mut |pick| {
        if !bandwidth_ok(t, flows, pick) {
            return;
        }
        let energy = traffic_energy(t, pick, mode);
        let routing: Vec<Vec<usize>> = pick.iter().map(|p| p.0.clone()).collect();
        match &mut best {
            Some((b, set)) if close(energy, *b) => set.push(routing),
            Some((b, _)) if energy > *b => {}
            _ => best = Some((energy, vec![routing])),
        }
    });
    best
}

pub fn traffic_min(t: &Topology, flows: &[Flow], mode: ObjectiveMode) -> Option<f64> {
    traffic_optima(t, flows, mode).map(|(v, _)| v)
}

/// Fewest total rules, or `None` if no routing fits tables and links.
pub fn rules_min(t: &Topology, flows: &[Flow]) -> Option<usize> {
    let options: Vec<Vec<RawPath>> = flows.iter().map(|f| simple_paths(t, f.source, f.destination)).collect();
    let mut best: Option<usize> = None;
    for_each_combination(&options, &mut |pick| {
        let total: usize = pick.iter().map(|p| p.0.len()).sum();
        if best.is_some_and(|b| total >= b) || !bandwidth_ok(t, flows, pick) {
            return;
        }
        let mut count = vec![0u32; t.switches.len()];
        for p in pick {
            for &s in &p.0 {
                count[s] += 1;
            }
        }
        if count.iter().zip(&t.switches).all(|(&c, s)| c <= s.rule_capacity) {
            best = Some(total);
        }
    });
    best
}

/// Every feasible host vector with its (active PMs, network cost).
pub fn placements(inst: &PlacementInstance) -> Vec<(Vec<usize>, usize, f64)> {
    let (p, v, r) = (
        inst.pm_resources.len(),
        inst.vm_demands.len(),
        inst.resource_names.len(),
    );
    let mut out = Vec::new();
    if p == 0 && v > 0 {
        return out;
    }
    let mut hosts = vec![0usize; v];
    loop {
        let mut load = vec![vec![0.0; r]; p];
        for (vm, &pm) in hosts.iter().enumerate() {
            for (l, d) in load[pm].iter_mut().zip(&inst.vm_demands[vm]) {
                *l += d;
            }
        }
        let fits = (0..p).all(|pm| (0..r).all(|k| within(load[pm][k], inst.pm_resources[pm][k])));
        if fits {
            let mut used = vec![false; p];
            for &pm in &hosts {
                used[pm] = true;
            }
            let mut cost = 0.0;
            for a in 0..v {
                for b in 0..v {
                    cost += inst.vm_traffic[a][b] * inst.pm_hops[hosts[a]][hosts[b]] as f64;
                }
            }
            out.push((hosts.clone(), used.iter().filter(|&&u| u).count(), cost));
        }
        // odometer increment
        let mut i = 0;
        while i < v {
            hosts[i] += 1;
            if hosts[i] < p {
                break;
            }
            hosts[i] = 0;
            i += 1;
        }
        if i == v {
            break;
        }
    }
    out
}

pub fn placement_min_pms(inst: &PlacementInstance) -> Option<usize> {
    placements(inst).iter().map(|(_, pms, _)| *pms).min()
}

/// Lexicographic optimum (PMs, then network cost).
pub fn placement_min_lex(inst: &PlacementInstance) -> Option<(usize, f64)> {
    let all = placements(inst);
    let pms = all.iter().map(|(_, p, _)| *p).min()?;
    let cost = all
        .iter()
        .filter(|(_, p, _)| *p == pms)
        .map(|(_, _, c)| *c)
        .fold(f64::INFINITY, f64::min);
    Some((pms, cost))
}

pub fn placement_min_weighted(inst: &PlacementInstance, alpha: f64, beta: f64) -> Option<f64> {
    placements(inst)
        .iter()
        .map(|(_, p, c)| alpha * *p as f64 + beta * c)
        .reduce(f64::min)
}
