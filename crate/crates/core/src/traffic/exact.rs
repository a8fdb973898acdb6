//! Implicit enumeration over per-flow candidate paths.
//!
//! Flows are branched in id order and candidates in switch-sequence order,
//! so the first optimum reached is the lexicographically least one. A node
//! is pruned once its lower bound cannot beat the incumbent.
//!
//! Lower bound at a node, for the unrouted flows `U`:
//!
//! * endpoint switches of `U` that are still off are certainly powered;
//! * per-active-link: any completion pays at least the cheapest residual
//!   path of the most expensive flow in `U`;
//! * per-flow-link: link power is additive, so every flow in `U` pays its
//!   cheapest link cost, and one flow additionally pays the switches of its
//!   cheapest residual path.

use alloc::boxed::Box;
use alloc::vec::Vec;

use super::{
    bound, candidate_paths, finish, validate_instance, InfeasibilityCertificate, LoadTracker, TrafficError,
    TrafficSolution,
};
use crate::graph;
use crate::model::{EdgeId, Flow, FlowRouting, ObjectiveMode, Path, Topology};
use crate::{num, Optimality, SolverBudget};

/// Minimum-energy routing and on/off state for `flows`.
///
/// Returns [`Optimality::Exact`] when the search finished and either every
/// simple path was a candidate or the incumbent meets the root lower bound
/// computed over all paths. Otherwise the best routing found is tagged
/// `Heuristic("incumbent")`.
pub fn solve_exact_traffic(
    t: &Topology,
    flows: &[Flow],
    mode: ObjectiveMode,
    budget: SolverBudget,
) -> Result<TrafficSolution, TrafficError> {
    validate_instance(t, flows)?;
    let adj = t.adjacency();
    let mut order: Vec<&Flow> = flows.iter().collect();
    order.sort_by_key(|f| f.id);

    for f in &order {
        let widest = graph::widest_path_bandwidth(t, &adj, f.source, f.destination);
        if widest.is_none_or(|w| !num::fits(f.rate, w)) {
            return Err(TrafficError::Infeasible(InfeasibilityCertificate {
                flows: alloc::vec![f.id],
                saturated_edges: (0..t.edges.len())
                    .filter(|&e| !num::fits(f.rate, t.edges[e].bandwidth))
                    .collect(),
                proven: true,
            }));
        }
    }

    let cands = candidate_paths(t, &adj, &order, budget.k_paths);
    let mut search = Search {
        t,
        mode,
        flows: &order,
        cands: &cands.per_flow,
        tracker: LoadTracker::new(t, mode),
        chosen: alloc::vec![0; order.len()],
        best: None,
        nodes: 0,
        max_nodes: budget.max_nodes,
        exhausted: false,
        stamp: alloc::vec![0; t.switches.len()],
        epoch: 0,
        deepest_failure: None,
    };
    search.dfs(0, 0.0);

    let nodes = search.nodes;
    let best = search.best.take();
    let exhausted = search.exhausted;
    let deepest = search.deepest_failure.take();

    let Some((value, choice)) = best else {
        if exhausted {
            return Err(TrafficError::BudgetExhausted { incumbent: None, nodes });
        }
        let (depth, saturated) = deepest.unwrap_or((0, Vec::new()));
        return Err(TrafficError::Infeasible(InfeasibilityCertificate {
            flows: order[..=depth.min(order.len().saturating_sub(1))]
                .iter()
                .map(|f| f.id)
                .collect(),
            saturated_edges: saturated,
            proven: cands.complete,
        }));
    };

    let mut routing = FlowRouting::new();
    for (i, f) in order.iter().enumerate() {
        routing.insert(f.id, cands.per_flow[i][choice[i]].clone());
    }
    let optimality =
        if !exhausted && (cands.complete || !num::strictly_less(bound::root_bound(t, &adj, &order, mode), value)) {
            Optimality::Exact
        } else {
            Optimality::Heuristic("incumbent")
        };
    let solution = finish(t, flows, routing, mode, optimality, nodes);
    if exhausted {
        return Err(TrafficError::BudgetExhausted {
            incumbent: Some(Box::new(solution)),
            nodes,
        });
    }
    Ok(solution)
}

struct Search<'a> {
    t: &'a Topology,
    mode: ObjectiveMode,
    flows: &'a [&'a Flow],
    cands: &'a [Vec<Path>],
    tracker: LoadTracker<'a>,
    chosen: Vec<usize>,
    best: Option<(f64, Vec<usize>)>,
    nodes: u64,
    max_nodes: u64,
    exhausted: bool,
    // switches counted as forced on at the current node carry `epoch`
    stamp: Vec<u64>,
    epoch: u64,
    deepest_failure: Option<(usize, Vec<EdgeId>)>,
}

impl Search<'_> {
    fn dfs(&mut self, depth: usize, cost: f64) {
        if self.exhausted {
            return;
        }
        if self.nodes >= self.max_nodes {
            self.exhausted = true;
            return;
        }
        self.nodes += 1;
        if depth == self.flows.len() {
            if self.best.as_ref().is_none_or(|(b, _)| num::strictly_less(cost, *b)) {
                self.best = Some((cost, self.chosen.clone()));
            }
            return;
        }
        let Some(bound) = self.bound(depth) else {
            self.note_failure(depth);
            return;
        };
        if let Some((b, _)) = &self.best {
            if !num::strictly_less(cost + bound, *b) {
                return;
            }
        }
        let flow = self.flows[depth];
        let cands = self.cands;
        for (i, path) in cands[depth].iter().enumerate() {
            if !self.tracker.fits(path, flow.rate) {
                continue;
            }
            let delta = self.tracker.marginal(path);
            self.tracker.add(path, flow.rate);
            self.chosen[depth] = i;
            self.dfs(depth + 1, cost + delta);
            self.tracker.remove(path, flow.rate);
            if self.exhausted {
                return;
            }
        }
    }

    fn note_failure(&mut self, depth: usize) {
        if self.deepest_failure.as_ref().is_none_or(|(d, _)| depth > *d) {
            // the blocked flow is the first unrouted one without a fitting candidate
            let blocked = (depth..self.flows.len())
                .find(|&g| !self.cands[g].iter().any(|p| self.tracker.fits(p, self.flows[g].rate)))
                .unwrap_or(depth);
            let saturated = self.tracker.saturated_for(self.flows[blocked].rate);
            self.deepest_failure = Some((blocked, saturated));
        }
    }

    /// Admissible bound on the remaining cost, `None` if some unrouted flow
    /// has no candidate that fits the residual capacities.
    fn bound(&mut self, depth: usize) -> Option<f64> {
        self.epoch += 1;
        let epoch = self.epoch;
        let mut forced = 0.0;
        for f in &self.flows[depth..] {
            for s in [f.source, f.destination] {
                if self.tracker.switch_users[s] == 0 && self.stamp[s] != epoch {
                    self.stamp[s] = epoch;
                    forced += self.t.switches[s].power;
                }
            }
        }
        let mut link_sum = 0.0;
        let mut extra: f64 = 0.0;
        for (g, f) in self.flows.iter().enumerate().skip(depth) {
            let mut min_link = f64::INFINITY;
            let mut min_residual = f64::INFINITY;
            for p in &self.cands[g] {
                if !self.tracker.fits(p, f.rate) {
                    continue;
                }
                let (link, switch) = self.residual_cost(p, epoch);
                min_link = min_link.min(link);
                min_residual = min_residual.min(link + switch);
            }
            if min_residual == f64::INFINITY {
                return None;
            }
            match self.mode {
                ObjectiveMode::PerFlowLink => {
                    link_sum += min_link;
                    extra = extra.max(min_residual - min_link);
                }
                ObjectiveMode::PerActiveLink => extra = extra.max(min_residual),
            }
        }
        Some(forced + link_sum + extra)
    }

    /// (link part, switch part) of adding `p` beyond the forced switches.
    fn residual_cost(&self, p: &Path, epoch: u64) -> (f64, f64) {
        let mut link = 0.0;
        for &e in &p.edges {
            if self.mode == ObjectiveMode::PerFlowLink || self.tracker.link_users[e] == 0 {
                link += self.t.edges[e].power;
            }
        }
        let mut switch = 0.0;
        for &s in &p.switches {
            if self.tracker.switch_users[s] == 0 && self.stamp[s] != epoch {
                switch += self.t.switches[s].power;
            }
        }
        (link, switch)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::triangle;
    use crate::model::Flow;

    #[test]
    fn single_flow_direct() {
        let t = triangle();
        let sol = solve_exact_traffic(
            &t,
            &[Flow::new(0, 0, 1, 1.0)],
            ObjectiveMode::PerFlowLink,
            SolverBudget::default(),
        )
        .unwrap();
        assert_eq!(sol.objective, 3.0);
        assert_eq!(sol.routing.get(0).unwrap().switches, alloc::vec![0, 1]);
        assert_eq!(sol.optimality, Optimality::Exact);
    }

    #[test]
    fn two_heavy_flows_split() {
        let t = triangle();
        let flows = [Flow::new(0, 0, 1, 6.0), Flow::new(1, 0, 1, 6.0)];
        let sol = solve_exact_traffic(&t, &flows, ObjectiveMode::PerFlowLink, SolverBudget::default()).unwrap();
        assert_eq!(sol.objective, 6.0);
        assert!(sol.state.switch_on.iter().all(|&s| s));
        // lexicographically least optimum: flow 0 direct, flow 1 via switch 2
        assert_eq!(sol.routing.get(0).unwrap().switches, alloc::vec![0, 1]);
        assert_eq!(sol.routing.get(1).unwrap().switches, alloc::vec![0, 2, 1]);
    }

    #[test]
    fn rate_above_every_cut() {
        let t = triangle();
        let err = solve_exact_traffic(
            &t,
            &[Flow::new(0, 0, 1, 20.0)],
            ObjectiveMode::PerFlowLink,
            SolverBudget::default(),
        )
        .unwrap_err();
        let TrafficError::Infeasible(cert) = err else {
            panic!("{err:?}")
        };
        assert_eq!(cert.flows, alloc::vec![0]);
        assert_eq!(cert.saturated_edges, alloc::vec![0, 1, 2]);
        assert!(cert.proven);
    }

    #[test]
    fn jointly_infeasible() {
        let t = triangle();
        let flows = [
            Flow::new(0, 0, 1, 6.0),
            Flow::new(1, 0, 1, 6.0),
            Flow::new(2, 0, 1, 6.0),
        ];
        let err = solve_exact_traffic(&t, &flows, ObjectiveMode::PerFlowLink, SolverBudget::default()).unwrap_err();
        let TrafficError::Infeasible(cert) = err else {
            panic!("{err:?}")
        };
        assert_eq!(cert.flows, alloc::vec![0, 1, 2]);
        assert!(cert.proven);
    }

    #[test]
    fn empty_flow_set() {
        let t = triangle();
        let sol = solve_exact_traffic(&t, &[], ObjectiveMode::PerActiveLink, SolverBudget::default()).unwrap();
        assert_eq!(sol.objective, 0.0);
        assert!(sol.state.switch_on.iter().all(|&s| !s));
    }

    #[test]
    fn tiny_budget_reports_incumbent() {
        let t = triangle();
        let flows = [Flow::new(0, 0, 1, 6.0), Flow::new(1, 0, 1, 6.0)];
        let err = solve_exact_traffic(
            &t,
            &flows,
            ObjectiveMode::PerFlowLink,
            SolverBudget::new(3, 16).unwrap(),
        )
        .unwrap_err();
        match err {
            TrafficError::BudgetExhausted { incumbent, nodes } => {
                assert_eq!(nodes, 3);
                let inc = incumbent.expect("first dive reaches a leaf");
                assert_eq!(inc.optimality, Optimality::Heuristic("incumbent"));
            }
            other => panic!("{other:?}"),
        }
    }
}
