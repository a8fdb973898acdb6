use alloc::vec::Vec;

use super::{Placement, PlacementError, PlacementInstance};
use crate::num;

/// First fit decreasing: VMs by scalarized demand (largest first, ties by
/// id), each onto the lowest-id PM with room.
pub fn heuristic_ffd(inst: &PlacementInstance) -> Result<Placement, PlacementError> {
    pack(inst, |_, fitting| fitting.first().map(|&(pm, _)| pm))
}

/// Best fit decreasing: each VM onto the powered PM with the least
/// scalarized residual after placement; a new PM is powered only when no
/// powered PM has room, again choosing the tightest fit.
pub fn heuristic_bfd(inst: &PlacementInstance) -> Result<Placement, PlacementError> {
    pack(inst, |count, fitting| {
        let tightest = |on: bool| {
            fitting
                .iter()
                .filter(|&&(pm, _)| (count[pm] > 0) == on)
                .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
                .map(|&(pm, _)| pm)
        };
        tightest(true).or_else(|| tightest(false))
    })
}

/// `choose(count, fitting)` picks a PM from the `(pm, residual)` list of
/// PMs with room, in id order.
fn pack(
    inst: &PlacementInstance,
    choose: impl Fn(&[usize], &[(usize, f64)]) -> Option<usize>,
) -> Result<Placement, PlacementError> {
    let violations = inst.validate();
    if !violations.is_empty() {
        return Err(PlacementError::InvalidInstance(violations));
    }
    let (p, v, r) = (inst.pm_count(), inst.vm_count(), inst.resource_count());
    let mean = inst.mean_capacity();
    let mut order: Vec<usize> = (0..v).collect();
    order.sort_by(|&a, &b| {
        inst.scalarized_demand(b, &mean)
            .total_cmp(&inst.scalarized_demand(a, &mean))
            .then(a.cmp(&b))
    });

    let mut load = alloc::vec![alloc::vec![0.0; r]; p];
    let mut count = alloc::vec![0usize; p];
    let mut hosts = alloc::vec![0usize; v];
    for vm in order {
        let fitting: Vec<(usize, f64)> = (0..p)
            .filter(|&pm| (0..r).all(|k| num::fits(load[pm][k] + inst.vm_demands[vm][k], inst.pm_resources[pm][k])))
            .map(|pm| {
                let residual = (0..r)
                    .filter(|&k| mean[k] > 0.0)
                    .map(|k| (inst.pm_resources[pm][k] - load[pm][k] - inst.vm_demands[vm][k]) / mean[k])
                    .sum();
                (pm, residual)
            })
            .collect();
        let pm = choose(&count, &fitting).ok_or_else(|| PlacementError::Infeasible {
            vm: (!(0..p).any(|pm| inst.fits_alone(vm, pm))).then_some(vm),
        })?;
        for k in 0..r {
            load[pm][k] += inst.vm_demands[vm][k];
        }
        count[pm] += 1;
        hosts[vm] = pm;
    }
    Ok(Placement::from_hosts(p, &hosts))
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::cpu_only;
    use super::super::{check_placement, score_placement};
    use super::*;

    fn pms(inst: &PlacementInstance, p: &Placement) -> usize {
        assert!(check_placement(inst, p).is_empty());
        score_placement(inst, p).unwrap().active_pms
    }

    #[test]
    fn ffd_packs_five_into_two() {
        let inst = cpu_only(&[0.6, 0.5, 0.4, 0.3, 0.2], 5, 1.0);
        let p = heuristic_ffd(&inst).unwrap();
        assert_eq!(pms(&inst, &p), 2);
        assert_eq!(p.host_of(0), Some(0));
        assert_eq!(p.host_of(2), Some(0));
        assert_eq!(p.host_of(1), Some(1));
    }

    #[test]
    fn halves() {
        let inst = cpu_only(&[0.5; 4], 4, 1.0);
        assert_eq!(pms(&inst, &heuristic_ffd(&inst).unwrap()), 2);
        assert_eq!(pms(&inst, &heuristic_bfd(&inst).unwrap()), 2);
    }

    #[test]
    fn bfd_prefers_tight_pm() {
        // pm0 has 0.4 left and pm1 has 0.5 left when 0.4 arrives
        let inst = cpu_only(&[0.6, 0.5, 0.4], 3, 1.0);
        let p = heuristic_bfd(&inst).unwrap();
        assert_eq!(p.host_of(2), Some(0));
    }

    #[test]
    fn bfd_opens_tightest_idle_pm() {
        let mut inst = cpu_only(&[0.5], 3, 1.0);
        inst.pm_resources[1][0] = 0.6;
        assert_eq!(heuristic_bfd(&inst).unwrap().host_of(0), Some(1));
        assert_eq!(heuristic_ffd(&inst).unwrap().host_of(0), Some(0));
    }

    #[test]
    fn infeasible() {
        let inst = cpu_only(&[1.5], 2, 1.0);
        assert_eq!(heuristic_ffd(&inst), Err(PlacementError::Infeasible { vm: Some(0) }));
        let inst = cpu_only(&[0.6, 0.6, 0.6], 2, 1.0);
        assert_eq!(heuristic_bfd(&inst), Err(PlacementError::Infeasible { vm: None }));
    }
}
