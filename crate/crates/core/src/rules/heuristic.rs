use alloc::vec::Vec;

use super::{solution, validate_instance, Residual, RuleError, RuleSolution};
use crate::graph;
use crate::model::{Flow, FlowRouting, Topology};
use crate::traffic::InfeasibilityCertificate;
use crate::Optimality;

/// Routes flows in id order, each on its fewest-switch path through
/// switches with a free table entry and links with room for its rate,
/// ties broken by switch sequence.
pub fn heuristic_shortest_admissible(t: &Topology, flows: &[Flow]) -> Result<RuleSolution, RuleError> {
    validate_instance(t, flows)?;
    let adj = t.adjacency();
    let mut order: Vec<&Flow> = flows.iter().collect();
    order.sort_by_key(|f| f.id);

    let mut residual = Residual::new(t);
    let mut routing = FlowRouting::new();
    for (i, f) in order.iter().enumerate() {
        let path = graph::lex_shortest_path(
            &adj,
            f.source,
            f.destination,
            |s| residual.switch_ok(s),
            |e| residual.edge_ok(e, f.rate),
        );
        let Some(path) = path else {
            return Err(RuleError::Infeasible(InfeasibilityCertificate {
                flows: order[..=i].iter().map(|f| f.id).collect(),
                saturated_edges: residual.saturated_for(f.rate),
                proven: false,
            }));
        };
        residual.add(&path, f.rate);
        routing.insert(f.id, path);
    }
    Ok(solution(
        t,
        flows,
        routing,
        Optimality::Heuristic("shortest-admissible"),
        0,
    ))
}
