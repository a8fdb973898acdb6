//! Deterministic instance construction.
//!
//! Randomness comes from ChaCha8 seeded with `seed_from_u64`; integers in
//! `0..n` are drawn as `(next_u64() * n) >> 64` (128-bit product) and reals
//! in `[0, 1)` as `(next_u64() >> 11) * 2^-53`. Given the same seed every
//! generator yields bit-identical output on every platform.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{Edge, FatTreeRole, Flow, HostId, Layer, Switch, SwitchId, Topology};
use crate::placement::PlacementInstance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TopologyKind {
    /// Three-tier fat-tree of even arity `k`.
    FatTree(u32),
    /// Cycle of `n` switches, one host each.
    Ring(usize),
    /// Complete graph on `n` switches, one host each.
    FullMesh(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub kind: TopologyKind,
    pub switch_watts: f64,
    pub link_watts: f64,
    /// Bandwidth of every generated link, bytes per second.
    pub bandwidth: f64,
    pub rule_capacity: u32,
    pub seed: u64,
}

impl GeneratorSpec {
    pub const DEFAULT_SWITCH_WATTS: f64 = 100.0;
    pub const DEFAULT_LINK_WATTS: f64 = 5.0;
    pub const DEFAULT_BANDWIDTH: f64 = 1.0e9;
    pub const DEFAULT_RULE_CAPACITY: u32 = 1000;

    pub fn new(kind: TopologyKind) -> Self {
        GeneratorSpec {
            kind,
            switch_watts: Self::DEFAULT_SWITCH_WATTS,
            link_watts: Self::DEFAULT_LINK_WATTS,
            bandwidth: Self::DEFAULT_BANDWIDTH,
            rule_capacity: Self::DEFAULT_RULE_CAPACITY,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), GenerateError> {
        match self.kind {
            TopologyKind::FatTree(k) if k < 2 || k % 2 == 1 => return Err(GenerateError::FatTreeArity(k)),
            TopologyKind::Ring(n) | TopologyKind::FullMesh(n) if n < 3 => return Err(GenerateError::TooFewSwitches(n)),
            _ => {}
        }
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(self.switch_watts)
            || !positive(self.link_watts)
            || !positive(self.bandwidth)
            || self.rule_capacity == 0
        {
            return Err(GenerateError::NonPositiveDefault);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GenerateError {
    #[error("fat-tree arity must be even and at least 2, got {0}")]
    FatTreeArity(u32),
    #[error("ring and mesh need at least 3 switches, got {0}")]
    TooFewSwitches(usize),
    #[error("generator defaults must be positive")]
    NonPositiveDefault,
    #[error("rate fraction must lie in (0, 1], got {0}")]
    RateFraction(f64),
    #[error("pod locality needs a fat-tree topology")]
    NotFatTree,
    #[error("topology has no hosts")]
    NoHosts,
    #[error("no host pair satisfies the locality policy")]
    NoEligiblePair,
    #[error("topology has no links")]
    NoLinks,
}

pub fn generate_topology(spec: &GeneratorSpec) -> Result<Topology, GenerateError> {
    spec.validate()?;
    let mut t = Topology::default();
    let switch = |id: SwitchId| Switch::new(id, spec.switch_watts, spec.rule_capacity);
    let link = |a: SwitchId, b: SwitchId| Edge::new(a, b, spec.bandwidth, spec.link_watts);
    match spec.kind {
        TopologyKind::FatTree(k) => {
            let half = (k / 2) as usize;
            let pods = k as usize;
            let n_core = half * half;
            let agg_id = |p: usize, i: usize| n_core + p * half + i;
            let edge_id = |p: usize, i: usize| n_core + pods * half + p * half + i;
            for c in 0..n_core {
                let mut s = switch(c);
                s.role = Some(FatTreeRole {
                    layer: Layer::Core,
                    pod: None,
                    index: c as u32,
                });
                t.switches.push(s);
            }
            for (layer, base) in [(Layer::Aggregation, n_core), (Layer::Edge, n_core + pods * half)] {
                for p in 0..pods {
                    for i in 0..half {
                        let mut s = switch(base + p * half + i);
                        s.role = Some(FatTreeRole {
                            layer,
                            pod: Some(p as u32),
                            index: i as u32,
                        });
                        t.switches.push(s);
                    }
                }
            }
            for p in 0..pods {
                for e in 0..half {
                    for a in 0..half {
                        t.edges.push(link(edge_id(p, e), agg_id(p, a)));
                    }
                }
                for a in 0..half {
                    for m in 0..half {
                        t.edges.push(link(agg_id(p, a), a * half + m));
                    }
                }
            }
            for p in 0..pods {
                for e in 0..half {
                    for h in 0..half {
                        let host = ((p * half + e) * half + h) as HostId;
                        t.ingress_hosts.insert(host, edge_id(p, e));
                        t.egress_hosts.insert(host, edge_id(p, e));
                    }
                }
            }
            t.fat_tree_k = Some(k);
        }
        TopologyKind::Ring(n) => {
            t.switches = (0..n).map(switch).collect();
            t.edges = (0..n).map(|i| link(i, (i + 1) % n)).collect();
            attach_one_host_each(&mut t);
        }
        TopologyKind::FullMesh(n) => {
            t.switches = (0..n).map(switch).collect();
            for a in 0..n {
                for b in a + 1..n {
                    t.edges.push(link(a, b));
                }
            }
            attach_one_host_each(&mut t);
        }
    }
    Ok(t)
}

fn attach_one_host_each(t: &mut Topology) {
    for s in 0..t.switches.len() {
        t.ingress_hosts.insert(s as HostId, s);
        t.egress_hosts.insert(s as HostId, s);
    }
}

/// Which host pairs a generated flow may connect.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Locality {
    /// Both endpoints in the same pod, on different edge switches.
    IntraPod,
    /// Endpoints in different pods.
    CrossPod,
    /// Any two hosts on different switches.
    Uniform,
}

/// Seeded draw helpers; see the module docs for the exact reductions.
pub struct InstanceRng(ChaCha8Rng);

impl InstanceRng {
    pub fn new(seed: u64) -> Self {
        InstanceRng(ChaCha8Rng::seed_from_u64(seed))
    }

    /// Uniform integer in `0..n`; `n` must be positive.
    pub fn below(&mut self, n: usize) -> usize {
        ((self.0.next_u64() as u128 * n as u128) >> 64) as usize
    }

    /// Uniform integer in `lo..=hi`.
    pub fn between(&mut self, lo: usize, hi: usize) -> usize {
        lo + self.below(hi - lo + 1)
    }

    /// Uniform real in `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn chance(&mut self, p: f64) -> bool {
        self.unit() < p
    }
}

/// Seeded host-pair flows with rate `rate_fraction` times the smallest link
/// bandwidth.
///
/// Hosts are drawn without replacement while possible, so `count` flows
/// over `2 * count` hosts touch every host once. A draw that dead-ends with
/// hosts left over is retried from the continuing random stream; after 32
/// attempts hosts are reused.
pub fn generate_flows(
    t: &Topology,
    count: usize,
    rate_fraction: f64,
    locality: Locality,
    seed: u64,
) -> Result<Vec<Flow>, GenerateError> {
    if !(rate_fraction > 0.0 && rate_fraction <= 1.0) {
        return Err(GenerateError::RateFraction(rate_fraction));
    }
    if count == 0 {
        return Ok(Vec::new());
    }
    if locality != Locality::Uniform && t.fat_tree_k.is_none() {
        return Err(GenerateError::NotFatTree);
    }
    if t.ingress_hosts.is_empty() || t.egress_hosts.is_empty() {
        return Err(GenerateError::NoHosts);
    }
    let bandwidth = t
        .edges
        .iter()
        .map(|e| e.bandwidth)
        .min_by(f64::total_cmp)
        .ok_or(GenerateError::NoLinks)?;
    let rate = rate_fraction * bandwidth;
    let pod = |s: SwitchId| t.switches.get(s).and_then(|x| x.role).and_then(|r| r.pod);
    let eligible = |a: SwitchId, b: SwitchId| {
        a != b
            && match locality {
                Locality::Uniform => true,
                Locality::IntraPod => pod(a).is_some() && pod(a) == pod(b),
                Locality::CrossPod => pod(a).is_some() && pod(b).is_some() && pod(a) != pod(b),
            }
    };
    let sources: Vec<(HostId, SwitchId)> = t.ingress_hosts.iter().map(|(&h, &s)| (h, s)).collect();
    let sinks: Vec<(HostId, SwitchId)> = t.egress_hosts.iter().map(|(&h, &s)| (h, s)).collect();
    if !sources.iter().any(|&(_, a)| sinks.iter().any(|&(_, b)| eligible(a, b))) {
        return Err(GenerateError::NoEligiblePair);
    }

    let mut rng = InstanceRng::new(seed);
    for attempt in 0.. {
        let allow_reuse = attempt >= 32;
        let mut used: BTreeSet<HostId> = BTreeSet::new();
        let mut flows = Vec::with_capacity(count);
        let mut dead_end = false;
        while flows.len() < count {
            let mut pool: Vec<(HostId, SwitchId)> =
                sources.iter().copied().filter(|(h, _)| !used.contains(h)).collect();
            let mut picked = None;
            while !pool.is_empty() {
                let (src_host, src) = pool.swap_remove(rng.below(pool.len()));
                let dsts: Vec<(HostId, SwitchId)> = sinks
                    .iter()
                    .copied()
                    .filter(|&(h, s)| h != src_host && !used.contains(&h) && eligible(src, s))
                    .collect();
                if !dsts.is_empty() {
                    let (dst_host, dst) = dsts[rng.below(dsts.len())];
                    picked = Some((src_host, src, dst_host, dst));
                    break;
                }
            }
            match picked {
                Some((sh, src, dh, dst)) => {
                    used.insert(sh);
                    used.insert(dh);
                    flows.push(Flow::new(flows.len(), src, dst, rate));
                }
                None if used.is_empty() => return Err(GenerateError::NoEligiblePair),
                None => {
                    let left = sources.iter().filter(|(h, _)| !used.contains(h)).count();
                    if left >= 2 && !allow_reuse {
                        dead_end = true;
                        break;
                    }
                    used.clear();
                }
            }
        }
        if !dead_end {
            return Ok(flows);
        }
    }
    unreachable!("attempt loop only exits by returning")
}

/// Random connected topology with integer powers plus a flow set, for
/// property checks and benchmarks.
///
/// Switch count is drawn from `3..=max_switches`, flow count from
/// `1..=max_flows`. Bandwidth is 10 on every link and rates are drawn from
/// `{1, ..., 6}`, so capacity constraints bind regularly.
pub fn random_traffic_instance(seed: u64, max_switches: usize, max_flows: usize) -> (Topology, Vec<Flow>) {
    let mut rng = InstanceRng::new(seed);
    let n = rng.between(3, max_switches.max(3));
    let mut t = Topology::default();
    for s in 0..n {
        t.switches
            .push(Switch::new(s, rng.between(1, 5) as f64, rng.between(1, 3) as u32));
    }
    let mut pairs = BTreeSet::new();
    for s in 1..n {
        let parent = rng.below(s);
        pairs.insert((parent, s));
    }
    for a in 0..n {
        for b in a + 1..n {
            if rng.chance(0.35) {
                pairs.insert((a, b));
            }
        }
    }
    for (a, b) in pairs {
        t.edges.push(Edge::new(a, b, 10.0, rng.between(1, 3) as f64));
    }
    for s in 0..n {
        t.ingress_hosts.insert(s as HostId, s);
        t.egress_hosts.insert(s as HostId, s);
    }
    let f = rng.between(1, max_flows.max(1));
    let flows = (0..f)
        .map(|id| {
            let a = rng.below(n);
            let b = (a + 1 + rng.below(n - 1)) % n;
            Flow::new(id, a, b, rng.between(1, 6) as f64)
        })
        .collect();
    (t, flows)
}

/// Random placement instance with resources `cpu` and `memory`.
///
/// PM count is drawn from `1..=max_pms` and VM count from `0..=max_vms`,
/// then the instance is filled as in [`generate_placement`].
pub fn random_placement_instance(seed: u64, max_vms: usize, max_pms: usize) -> PlacementInstance {
    let mut rng = InstanceRng::new(seed);
    let p = rng.between(1, max_pms.max(1));
    let v = rng.between(0, max_vms);
    fill_placement(&mut rng, v, p)
}

/// Placement instance with exactly `vm_count` VMs and `pm_count` PMs.
///
/// PM capacities are 1 or 2 per resource; VM demands are multiples of 0.05
/// in `[0.1, 1.0]`; each ordered VM pair talks with probability 0.3 at an
/// integer rate in `1..=10`; hop counts between distinct PMs are symmetric
/// in `1..=5`.
pub fn generate_placement(vm_count: usize, pm_count: usize, seed: u64) -> PlacementInstance {
    fill_placement(&mut InstanceRng::new(seed), vm_count, pm_count)
}

fn fill_placement(rng: &mut InstanceRng, v: usize, p: usize) -> PlacementInstance {
    let resource_names: Vec<String> = alloc::vec!["cpu".into(), "memory".into()];
    let pm_resources = (0..p)
        .map(|_| (0..2).map(|_| rng.between(1, 2) as f64).collect())
        .collect();
    let vm_demands = (0..v)
        .map(|_| (0..2).map(|_| rng.between(2, 20) as f64 * 0.05).collect())
        .collect();
    let mut vm_traffic = alloc::vec![alloc::vec![0.0; v]; v];
    for (a, row) in vm_traffic.iter_mut().enumerate() {
        for (b, q) in row.iter_mut().enumerate() {
            if a != b && rng.chance(0.3) {
                *q = rng.between(1, 10) as f64;
            }
        }
    }
    let mut pm_hops = alloc::vec![alloc::vec![0u32; p]; p];
    for a in 0..p {
        for b in a + 1..p {
            let h = rng.between(1, 5) as u32;
            pm_hops[a][b] = h;
            pm_hops[b][a] = h;
        }
    }
    PlacementInstance {
        pm_resources,
        vm_demands,
        resource_names,
        vm_traffic,
        pm_hops,
    }
}
