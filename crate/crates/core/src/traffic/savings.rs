use alloc::vec::Vec;

use super::TrafficSolution;
use crate::graph;
use crate::model::{Flow, Layer, ObjectiveMode, Topology};

/// Power of one element class under the baseline and the optimized state.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerBreakdown {
    /// `core`, `aggregation`, `edge`, `switch` (non fat-tree) or `link`.
    pub layer: &'static str,
    pub total: usize,
    pub active_baseline: usize,
    pub active_optimized: usize,
    pub baseline_watts: f64,
    pub optimized_watts: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SavingsReport {
    pub baseline_watts: f64,
    pub optimized_watts: f64,
    /// `1 - optimized / baseline`, zero when the baseline draws nothing.
    pub savings_fraction: f64,
    pub layers: Vec<LayerBreakdown>,
}

/// Compares `solution` against the always-on network: every switch and
/// link powered, each flow on its leftmost fewest-hop path.
pub fn savings_report(t: &Topology, flows: &[Flow], solution: &TrafficSolution, mode: ObjectiveMode) -> SavingsReport {
    let adj = t.adjacency();
    let mut layers = Vec::new();

    let groups: Vec<(&'static str, Option<Layer>)> =
        if t.switches.iter().all(|s| s.role.is_some()) && !t.switches.is_empty() {
            [Layer::Core, Layer::Aggregation, Layer::Edge]
                .into_iter()
                .map(|l| (l.name(), Some(l)))
                .collect()
        } else {
            alloc::vec![("switch", None)]
        };
    for (name, layer) in groups {
        let members: Vec<usize> = (0..t.switches.len())
            .filter(|&s| layer.is_none() || t.switches[s].role.map(|r| r.layer) == layer)
            .collect();
        let on: Vec<usize> = members
            .iter()
            .copied()
            .filter(|&s| solution.state.switch_on[s])
            .collect();
        layers.push(LayerBreakdown {
            layer: name,
            total: members.len(),
            active_baseline: members.len(),
            active_optimized: on.len(),
            baseline_watts: members.iter().map(|&s| t.switches[s].power).sum(),
            optimized_watts: on.iter().map(|&s| t.switches[s].power).sum(),
        });
    }

    let (baseline_links, optimized_links) = match mode {
        ObjectiveMode::PerActiveLink => (
            t.edges.iter().map(|e| e.power).sum::<f64>(),
            solution.state.active_links().map(|e| t.edges[e].power).sum::<f64>(),
        ),
        ObjectiveMode::PerFlowLink => {
            let baseline = flows
                .iter()
                .filter_map(|f| graph::lex_shortest_path(&adj, f.source, f.destination, |_| true, |_| true))
                .flat_map(|p| p.edges)
                .map(|e| t.edges[e].power)
                .sum::<f64>();
            let optimized = flows
                .iter()
                .filter_map(|f| solution.routing.get(f.id))
                .flat_map(|p| p.edges.iter())
                .map(|&e| t.edges[e].power)
                .sum::<f64>();
            (baseline, optimized)
        }
    };
    layers.push(LayerBreakdown {
        layer: "link",
        total: t.edges.len(),
        active_baseline: t.edges.len(),
        active_optimized: solution.state.active_links().count(),
        baseline_watts: baseline_links,
        optimized_watts: optimized_links,
    });

    let baseline_watts: f64 = layers.iter().map(|l| l.baseline_watts).sum();
    let optimized_watts = solution.objective;
    let savings_fraction = if baseline_watts > 0.0 {
        1.0 - optimized_watts / baseline_watts
    } else {
        0.0
    };
    SavingsReport {
        baseline_watts,
        optimized_watts,
        savings_fraction,
        layers,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::triangle;
    use crate::traffic::solve_exact_traffic;
    use crate::SolverBudget;

    #[test]
    fn triangle_single_flow() {
        let t = triangle();
        let flows = [Flow::new(0, 0, 1, 1.0)];
        let sol = solve_exact_traffic(&t, &flows, ObjectiveMode::PerFlowLink, SolverBudget::default()).unwrap();
        let r = savings_report(&t, &flows, &sol, ObjectiveMode::PerFlowLink);
        assert_eq!(r.baseline_watts, 4.0);
        assert_eq!(r.optimized_watts, 3.0);
        assert_eq!(r.savings_fraction, 0.25);
        assert_eq!(r.layers.len(), 2);
        assert_eq!(r.layers[0].active_optimized, 2);
    }

    #[test]
    fn no_savings_when_everything_is_needed() {
        let t = triangle();
        let flows = [
            Flow::new(0, 0, 1, 1.0),
            Flow::new(1, 1, 2, 1.0),
            Flow::new(2, 2, 0, 1.0),
        ];
        let sol = solve_exact_traffic(&t, &flows, ObjectiveMode::PerFlowLink, SolverBudget::default()).unwrap();
        let r = savings_report(&t, &flows, &sol, ObjectiveMode::PerFlowLink);
        assert_eq!(r.optimized_watts, r.baseline_watts);
        assert_eq!(r.savings_fraction, 0.0);
    }
}
