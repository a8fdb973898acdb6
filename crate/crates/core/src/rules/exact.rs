use alloc::boxed::Box;
use alloc::vec::Vec;

use super::{solution, validate_instance, Residual, RuleError, RuleSolution};
use crate::graph;
use crate::model::{EdgeId, Flow, FlowRouting, Path, Topology};
use crate::traffic::InfeasibilityCertificate;
use crate::{Optimality, SolverBudget};

/// Routing with the fewest installed rules.
///
/// Flows are branched in id order over their candidate paths, fewest
/// switches first and then by switch sequence. The bound at a node is the
/// summed switch count of each unrouted flow's shortest candidate that still
/// fits. The answer is [`Optimality::Exact`] when the search finished and
/// either every simple path was a candidate or the total equals the summed
/// fewest-hop switch counts.
pub fn solve_exact_rules(t: &Topology, flows: &[Flow], budget: SolverBudget) -> Result<RuleSolution, RuleError> {
    validate_instance(t, flows)?;
    let adj = t.adjacency();
    let mut order: Vec<&Flow> = flows.iter().collect();
    order.sort_by_key(|f| f.id);

    let mut root_bound = 0;
    let mut complete = true;
    let mut cands = Vec::with_capacity(order.len());
    for f in &order {
        let Some(shortest) = graph::lex_shortest_path(&adj, f.source, f.destination, |_| true, |_| true) else {
            return Err(RuleError::Infeasible(InfeasibilityCertificate {
                flows: alloc::vec![f.id],
                saturated_edges: Vec::new(),
                proven: true,
            }));
        };
        root_bound += shortest.switches.len();
        let set = graph::k_shortest_paths(t, &adj, f.source, f.destination, budget.k_paths);
        complete &= set.complete;
        let mut paths = set.paths;
        paths.sort_by(|a, b| {
            a.switches
                .len()
                .cmp(&b.switches.len())
                .then_with(|| a.switches.cmp(&b.switches))
        });
        cands.push(paths);
    }

    let mut search = Search {
        flows: &order,
        cands: &cands,
        residual: Residual::new(t),
        chosen: alloc::vec![0; order.len()],
        best: None,
        nodes: 0,
        max_nodes: budget.max_nodes,
        exhausted: false,
        deepest_failure: None,
    };
    search.dfs(0, 0);
    let Search {
        best,
        nodes,
        exhausted,
        deepest_failure,
        ..
    } = search;

    let Some((total, choice)) = best else {
        if exhausted {
            return Err(RuleError::BudgetExhausted { incumbent: None, nodes });
        }
        let (blocked, saturated) = deepest_failure.unwrap_or((0, Vec::new()));
        return Err(RuleError::Infeasible(InfeasibilityCertificate {
            flows: order[..=blocked].iter().map(|f| f.id).collect(),
            saturated_edges: saturated,
            proven: complete,
        }));
    };
    let mut routing = FlowRouting::new();
    for (i, f) in order.iter().enumerate() {
        routing.insert(f.id, cands[i][choice[i]].clone());
    }
    let optimality = if !exhausted && (complete || total == root_bound) {
        Optimality::Exact
    } else {
        Optimality::Heuristic("incumbent")
    };
    let sol = solution(t, flows, routing, optimality, nodes);
    if exhausted {
        return Err(RuleError::BudgetExhausted {
            incumbent: Some(Box::new(sol)),
            nodes,
        });
    }
    Ok(sol)
}

struct Search<'a> {
    flows: &'a [&'a Flow],
    cands: &'a [Vec<Path>],
    residual: Residual<'a>,
    chosen: Vec<usize>,
    best: Option<(usize, Vec<usize>)>,
    nodes: u64,
    max_nodes: u64,
    exhausted: bool,
    deepest_failure: Option<(usize, Vec<EdgeId>)>,
}

impl Search<'_> {
    fn dfs(&mut self, depth: usize, total: usize) {
        if self.exhausted {
            return;
        }
        if self.nodes >= self.max_nodes {
            self.exhausted = true;
            return;
        }
        self.nodes += 1;
        if depth == self.flows.len() {
            if self.best.as_ref().is_none_or(|(b, _)| total < *b) {
                self.best = Some((total, self.chosen.clone()));
            }
            return;
        }
        let mut bound = 0;
        for g in depth..self.flows.len() {
            let rate = self.flows[g].rate;
            // candidates are sorted by length, so the first fit is the shortest
            match self.cands[g].iter().find(|p| self.residual.fits(p, rate)) {
                Some(p) => bound += p.switches.len(),
                None => {
                    if self.deepest_failure.as_ref().is_none_or(|(d, _)| g > *d) {
                        self.deepest_failure = Some((g, self.residual.saturated_for(rate)));
                    }
                    return;
                }
            }
        }
        if self.best.as_ref().is_some_and(|(b, _)| total + bound >= *b) {
            return;
        }
        let rate = self.flows[depth].rate;
        let cands = self.cands;
        for (i, path) in cands[depth].iter().enumerate() {
            if !self.residual.fits(path, rate) {
                continue;
            }
            self.residual.add(path, rate);
            self.chosen[depth] = i;
            self.dfs(depth + 1, total + path.switches.len());
            self.residual.remove(path, rate);
            if self.exhausted {
                return;
            }
        }
    }
}
