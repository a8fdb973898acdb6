use alloc::vec::Vec;

use super::{Placement, PlacementError, PlacementInstance, PlacementObjective};
use crate::num;

/// Provably optimal placement by depth-first branch and bound.
///
/// VMs are branched largest first and PMs in id order; a node is pruned
/// when its active-PM lower bound and (monotone) partial network cost
/// cannot beat the incumbent under `objective`.
pub fn solve_exact_placement(
    inst: &PlacementInstance,
    objective: PlacementObjective,
) -> Result<Placement, PlacementError> {
    let violations = inst.validate();
    if !violations.is_empty() {
        return Err(PlacementError::InvalidInstance(violations));
    }
    if let PlacementObjective::Weighted { alpha, beta } = objective {
        if !(alpha.is_finite() && beta.is_finite() && alpha >= 0.0 && beta >= 0.0) {
            return Err(PlacementError::InvalidWeights);
        }
    }
    let (p, v) = (inst.pm_count(), inst.vm_count());
    for vm in 0..v {
        if !(0..p).any(|pm| inst.fits_alone(vm, pm)) {
            return Err(PlacementError::Infeasible { vm: Some(vm) });
        }
    }

    let mean = inst.mean_capacity();
    let mut order: Vec<usize> = (0..v).collect();
    order.sort_by(|&a, &b| {
        inst.scalarized_demand(b, &mean)
            .total_cmp(&inst.scalarized_demand(a, &mean))
            .then(a.cmp(&b))
    });
    let mut remaining = alloc::vec![0.0; inst.resource_count()];
    for vm in 0..v {
        for (r, d) in inst.vm_demands[vm].iter().enumerate() {
            remaining[r] += d;
        }
    }

    let mut search = Search {
        inst,
        objective,
        order,
        load: alloc::vec![alloc::vec![0.0; inst.resource_count()]; p],
        count: alloc::vec![0; p],
        host: alloc::vec![usize::MAX; v],
        remaining,
        best: None,
    };
    search.dfs(0, 0, 0.0);
    match search.best {
        Some((_, _, hosts)) => Ok(Placement::from_hosts(p, &hosts)),
        None => Err(PlacementError::Infeasible { vm: None }),
    }
}

struct Search<'a> {
    inst: &'a PlacementInstance,
    objective: PlacementObjective,
    order: Vec<usize>,
    load: Vec<Vec<f64>>,
    count: Vec<usize>,
    host: Vec<usize>,
    /// Unplaced demand per resource.
    remaining: Vec<f64>,
    best: Option<(usize, f64, Vec<usize>)>,
}

impl Search<'_> {
    fn better(&self, pms: usize, cost: f64) -> bool {
        let Some((bp, bc, _)) = &self.best else { return true };
        match self.objective {
            PlacementObjective::PmsOnly => pms < *bp,
            PlacementObjective::Lexicographic => pms < *bp || (pms == *bp && num::strictly_less(cost, *bc)),
            PlacementObjective::Weighted { alpha, beta } => {
                num::strictly_less(alpha * pms as f64 + beta * cost, alpha * *bp as f64 + beta * bc)
            }
        }
    }

    /// Lower bound on active PMs of any completion.
    fn pm_bound(&self, active: usize) -> usize {
        let inst = self.inst;
        let mut extra = 0;
        for r in 0..inst.resource_count() {
            let residual: f64 = (0..inst.pm_count())
                .filter(|&pm| self.count[pm] > 0)
                .map(|pm| (inst.pm_resources[pm][r] - self.load[pm][r]).max(0.0))
                .sum();
            let mut deficit = self.remaining[r] - residual;
            if !num::strictly_less(0.0, deficit) {
                continue;
            }
            let mut idle: Vec<f64> = (0..inst.pm_count())
                .filter(|&pm| self.count[pm] == 0)
                .map(|pm| inst.pm_resources[pm][r])
                .collect();
            idle.sort_by(|a, b| b.total_cmp(a));
            let mut needed = 0;
            for cap in idle {
                if !num::strictly_less(0.0, deficit) {
                    break;
                }
                deficit -= cap;
                needed += 1;
            }
            extra = extra.max(needed);
        }
        active + extra
    }

    fn dfs(&mut self, depth: usize, active: usize, cost: f64) {
        if depth == self.order.len() {
            if self.better(active, cost) {
                self.best = Some((active, cost, self.host.clone()));
            }
            return;
        }
        if !self.better(self.pm_bound(active), cost) {
            return;
        }
        let inst = self.inst;
        let vm = self.order[depth];
        for pm in 0..inst.pm_count() {
            let fits = inst.vm_demands[vm]
                .iter()
                .enumerate()
                .all(|(r, &d)| num::fits(self.load[pm][r] + d, inst.pm_resources[pm][r]));
            if !fits {
                continue;
            }
            let mut delta = 0.0;
            for (other, &h) in self.host.iter().enumerate() {
                if h != usize::MAX {
                    let b = inst.pm_hops[pm][h] as f64;
                    delta += (inst.vm_traffic[vm][other] + inst.vm_traffic[other][vm]) * b;
                }
            }
            let opened = self.count[pm] == 0;
            for (r, &d) in inst.vm_demands[vm].iter().enumerate() {
                self.load[pm][r] += d;
                self.remaining[r] -= d;
            }
            self.count[pm] += 1;
            self.host[vm] = pm;
            self.dfs(depth + 1, active + opened as usize, cost + delta);
            self.host[vm] = usize::MAX;
            self.count[pm] -= 1;
            for (r, &d) in inst.vm_demands[vm].iter().enumerate() {
                self.load[pm][r] -= d;
                self.remaining[r] += d;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::cpu_only;
    use super::super::{check_placement, score_placement};
    use super::*;

    #[test]
    fn four_halves_need_two() {
        let inst = cpu_only(&[0.5; 4], 4, 1.0);
        let p = solve_exact_placement(&inst, PlacementObjective::PmsOnly).unwrap();
        assert!(check_placement(&inst, &p).is_empty());
        assert_eq!(score_placement(&inst, &p).unwrap().active_pms, 2);
    }

    #[test]
    fn chatty_pair_colocated() {
        let mut inst = cpu_only(&[0.5, 0.5], 2, 1.0);
        inst.vm_traffic[0][1] = 10.0;
        let p = solve_exact_placement(&inst, PlacementObjective::Lexicographic).unwrap();
        let s = score_placement(&inst, &p).unwrap();
        assert_eq!((s.active_pms, s.network_cost), (1, 0.0));
    }

    #[test]
    fn oversized_vm() {
        let inst = cpu_only(&[2.0], 3, 1.0);
        assert_eq!(
            solve_exact_placement(&inst, PlacementObjective::PmsOnly),
            Err(PlacementError::Infeasible { vm: Some(0) })
        );
    }

    #[test]
    fn joint_infeasibility() {
        let inst = cpu_only(&[0.6, 0.6, 0.6], 2, 1.0);
        assert_eq!(
            solve_exact_placement(&inst, PlacementObjective::PmsOnly),
            Err(PlacementError::Infeasible { vm: None })
        );
    }

    #[test]
    fn weighted_can_trade_pms_for_traffic() {
        // two chatty VMs that cannot share a PM; a third PM is closer
        let mut inst = cpu_only(&[0.6, 0.6], 3, 1.0);
        inst.vm_traffic[0][1] = 10.0;
        inst.pm_hops = alloc::vec![alloc::vec![0, 5, 1], alloc::vec![5, 0, 5], alloc::vec![1, 5, 0],];
        let p = solve_exact_placement(&inst, PlacementObjective::Weighted { alpha: 1.0, beta: 1.0 }).unwrap();
        assert_eq!(score_placement(&inst, &p).unwrap().network_cost, 10.0);
        assert!(matches!(
            solve_exact_placement(&inst, PlacementObjective::Weighted { alpha: -1.0, beta: 1.0 }),
            Err(PlacementError::InvalidWeights)
        ));
    }

    #[test]
    fn empty_instance() {
        let inst = cpu_only(&[], 2, 1.0);
        let p = solve_exact_placement(&inst, PlacementObjective::Lexicographic).unwrap();
        assert_eq!(p.pm_on, alloc::vec![false, false]);
    }
}
