//! Solver dispatch, report assembly and solution verification.

use std::time::Instant;

use sdn_energy::generate::{
    generate_flows, generate_placement, generate_topology, GenerateError, GeneratorSpec, Locality, TopologyKind,
};
use sdn_energy::graph;
use sdn_energy::placement::{
    check_placement, heuristic_bfd, heuristic_ffd, score_placement, solve_exact_placement, Placement, PlacementError,
    PlacementInstance, PlacementObjective, PlacementScore,
};
use sdn_energy::rules::{
    check_rule_constraints, heuristic_shortest_admissible, solve_exact_rules, RuleAllocation, RuleError, RuleSolution,
};
use sdn_energy::traffic::{
    check_traffic_constraints, evaluate_traffic_objective, heuristic_fattree_topology_aware, heuristic_greedy_binpack,
    heuristic_path_first, savings_report, FlowOrder, InfeasibilityCertificate, TrafficError, TrafficSolution,
};
use sdn_energy::{Flow, FlowRouting, NetworkState, ObjectiveMode, Optimality, Path, SolverBudget, Topology};

use crate::format::{digest, Instance};
use crate::report::*;

pub const EXIT_OK: u8 = 0;
pub const EXIT_INFEASIBLE: u8 = 1;
pub const EXIT_MALFORMED: u8 = 2;
pub const EXIT_UNPROVEN: u8 = 3;

pub const TRAFFIC_SOLVERS: [&str; 7] = [
    "exact",
    "greedy-binpack",
    "highest-demand-first",
    "longest-first",
    "shortest-first",
    "smallest-demand-first",
    "topology-aware",
];
pub const PLACEMENT_SOLVERS: [&str; 3] = ["bfd", "exact", "ffd"];
pub const RULE_SOLVERS: [&str; 2] = ["exact", "shortest-admissible"];

/// Input problems that map to the malformed-input exit code.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RunError {
    #[error("unknown solver `{0}`; choose one of {1}")]
    UnknownSolver(String, String),
    #[error("instance has no PLACEMENT section")]
    NoPlacement,
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("solver `topology-aware` needs a fat-tree instance")]
    NotFatTree,
    #[error("malformed solution: {0}")]
    MalformedSolution(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub solver: String,
    pub mode: ObjectiveMode,
    pub budget: SolverBudget,
    pub objective: PlacementObjective,
    pub seed: u64,
    pub deterministic: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            solver: "exact".into(),
            mode: ObjectiveMode::default(),
            budget: SolverBudget::default(),
            objective: PlacementObjective::default(),
            seed: 0,
            deterministic: false,
        }
    }
}

/// A report and the exit code it warrants.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome<R> {
    pub report: R,
    pub exit: u8,
}

pub fn objective_label(o: PlacementObjective) -> String {
    match o {
        PlacementObjective::PmsOnly => "pms".into(),
        PlacementObjective::Lexicographic => "lex".into(),
        PlacementObjective::Weighted { alpha, beta } => format!("weighted:{alpha},{beta}"),
    }
}

pub fn parse_objective(s: &str) -> Result<PlacementObjective, String> {
    match s {
        "pms" => Ok(PlacementObjective::PmsOnly),
        "lex" => Ok(PlacementObjective::Lexicographic),
        _ => {
            let rest = s
                .strip_prefix("weighted:")
                .ok_or_else(|| format!("expected pms, lex or weighted:A,B, got `{s}`"))?;
            let (a, b) = rest
                .split_once(',')
                .ok_or_else(|| format!("expected weighted:A,B, got `{s}`"))?;
            let num = |x: &str| x.trim().parse::<f64>().map_err(|_| format!("invalid weight `{x}`"));
            let (alpha, beta) = (num(a)?, num(b)?);
            if !(alpha.is_finite() && beta.is_finite() && alpha >= 0.0 && beta >= 0.0) {
                return Err("weights must be finite and non-negative".into());
            }
            Ok(PlacementObjective::Weighted { alpha, beta })
        }
    }
}

pub fn parse_mode(s: &str) -> Result<ObjectiveMode, String> {
    match s {
        "per-flow-link" => Ok(ObjectiveMode::PerFlowLink),
        "per-active-link" => Ok(ObjectiveMode::PerActiveLink),
        _ => Err(format!("expected per-flow-link or per-active-link, got `{s}`")),
    }
}

fn params(problem: Problem, opts: &SolveOptions) -> Params {
    match problem {
        Problem::Traffic => Params {
            mode: Some(opts.mode.name().into()),
            budget_nodes: Some(opts.budget.max_nodes),
            k_paths: Some(opts.budget.k_paths),
            objective: None,
            seed: opts.seed,
        },
        Problem::Placement => Params {
            objective: Some(objective_label(opts.objective)),
            seed: opts.seed,
            ..Params::default()
        },
        Problem::Rules => Params {
            budget_nodes: Some(opts.budget.max_nodes),
            k_paths: Some(opts.budget.k_paths),
            seed: opts.seed,
            ..Params::default()
        },
    }
}

fn blank_report(problem: Problem, inst: &Instance, opts: &SolveOptions, solver: &str) -> RunReport {
    RunReport {
        schema_version: SCHEMA_VERSION,
        problem,
        instance_digest: digest(inst),
        solver: solver.into(),
        params: params(problem, opts),
        status: Status::Solved,
        objective: None,
        baseline: None,
        savings_fraction: None,
        optimality: None,
        nodes_explored: 0,
        wall_time_ms: None,
        traffic: None,
        placement: None,
        rules: None,
        certificate: None,
    }
}

fn savings(objective: f64, baseline: f64) -> Option<f64> {
    (baseline > 0.0).then(|| 1.0 - objective / baseline)
}

fn timed<T>(deterministic: bool, f: impl FnOnce() -> T) -> (T, Option<f64>) {
    let start = Instant::now();
    let out = f();
    let ms = start.elapsed().as_secs_f64() * 1e3;
    (out, (!deterministic).then_some(ms))
}

fn unknown(name: &str, known: &[&str]) -> RunError {
    RunError::UnknownSolver(name.into(), known.join(", "))
}

fn traffic_certificate(c: &InfeasibilityCertificate, reason: &str) -> Certificate {
    Certificate {
        flows: c.flows.clone(),
        saturated_edges: c.saturated_edges.clone(),
        vm: None,
        proven: c.proven,
        reason: reason.into(),
    }
}

fn link_states(t: &Topology, active: &[bool], used: &[bool]) -> Vec<LinkState> {
    t.edges
        .iter()
        .enumerate()
        .map(|(id, e)| LinkState {
            id,
            a: e.a,
            b: e.b,
            active: active[id],
            used: used[id],
        })
        .collect()
}

fn routes(routing: &FlowRouting) -> Vec<Route> {
    routing
        .paths
        .iter()
        .map(|(&flow, p)| Route {
            flow,
            switches: p.switches.clone(),
        })
        .collect()
}

// ---- traffic ----

fn run_traffic_solver(
    name: &str,
    t: &Topology,
    flows: &[Flow],
    mode: ObjectiveMode,
    budget: SolverBudget,
) -> Result<Result<TrafficSolution, TrafficError>, RunError> {
    let k = budget.k_paths;
    let order = |o: FlowOrder| heuristic_path_first(t, flows, mode, o, k);
    let result = match name {
        "exact" => sdn_energy::traffic::solve_exact_traffic(t, flows, mode, budget),
        "greedy-binpack" => heuristic_greedy_binpack(t, flows, mode, k),
        "shortest-first" => order(FlowOrder::ShortestFirst),
        "longest-first" => order(FlowOrder::LongestFirst),
        "smallest-demand-first" => order(FlowOrder::SmallestDemandFirst),
        "highest-demand-first" => order(FlowOrder::HighestDemandFirst),
        "topology-aware" => heuristic_fattree_topology_aware(t, flows, mode, k),
        _ => return Err(unknown(name, &TRAFFIC_SOLVERS)),
    };
    match result {
        Err(TrafficError::InvalidTopology(v)) => Err(RunError::InvalidInstance(
            v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; "),
        )),
        Err(TrafficError::InvalidFlows(e)) => Err(RunError::InvalidInstance(e.to_string())),
        Err(TrafficError::NotFatTree) => Err(RunError::NotFatTree),
        other => Ok(other),
    }
}

fn fill_traffic(r: &mut RunReport, t: &Topology, flows: &[Flow], sol: &TrafficSolution, mode: ObjectiveMode) {
    let s = savings_report(t, flows, sol, mode);
    r.objective = Some(sol.objective);
    r.baseline = Some(s.baseline_watts);
    r.savings_fraction = savings(sol.objective, s.baseline_watts);
    r.optimality = Some(sol.optimality.label());
    r.nodes_explored = sol.nodes_explored;
    r.traffic = Some(TrafficDetail {
        switches: t
            .switches
            .iter()
            .map(|s| SwitchState {
                id: s.id,
                on: sol.state.switch_on[s.id],
                layer: s.role.map(|r| r.layer.name().to_string()),
            })
            .collect(),
        links: link_states(t, &sol.state.link_active, &sol.state.link_used),
        routes: routes(&sol.routing),
        layers: s
            .layers
            .iter()
            .map(|l| LayerRow {
                layer: l.layer.into(),
                total: l.total,
                active_baseline: l.active_baseline,
                active_optimized: l.active_optimized,
                baseline_watts: l.baseline_watts,
                optimized_watts: l.optimized_watts,
            })
            .collect(),
    });
}

pub fn solve_traffic(inst: &Instance, opts: &SolveOptions) -> Result<Outcome<RunReport>, RunError> {
    let (t, flows) = (&inst.topology, &inst.flows[..]);
    let mut r = blank_report(Problem::Traffic, inst, opts, &opts.solver);
    let (result, ms) = timed(opts.deterministic, || {
        run_traffic_solver(&opts.solver, t, flows, opts.mode, opts.budget)
    });
    r.wall_time_ms = ms;
    let exit = match result? {
        Ok(sol) => {
            fill_traffic(&mut r, t, flows, &sol, opts.mode);
            if opts.solver == "exact" && !sol.optimality.is_exact() {
                EXIT_UNPROVEN
            } else {
                EXIT_OK
            }
        }
        Err(TrafficError::Infeasible(c)) => {
            r.status = Status::Infeasible;
            r.certificate = Some(traffic_certificate(&c, "no capacity-respecting routing"));
            EXIT_INFEASIBLE
        }
        Err(TrafficError::BudgetExhausted { incumbent, nodes }) => {
            r.status = Status::BudgetExhausted;
            if let Some(sol) = incumbent {
                fill_traffic(&mut r, t, flows, &sol, opts.mode);
            }
            r.nodes_explored = nodes;
            EXIT_UNPROVEN
        }
        Err(e) => unreachable!("filtered by run_traffic_solver: {e}"),
    };
    Ok(Outcome { report: r, exit })
}

// ---- placement ----

fn placement_value(o: PlacementObjective, s: PlacementScore) -> f64 {
    match o {
        PlacementObjective::PmsOnly | PlacementObjective::Lexicographic => s.active_pms as f64,
        PlacementObjective::Weighted { alpha, beta } => alpha * s.active_pms as f64 + beta * s.network_cost,
    }
}

/// Same objective with every PM powered.
fn placement_baseline(o: PlacementObjective, pms: usize, s: PlacementScore) -> f64 {
    placement_value(o, PlacementScore { active_pms: pms, ..s })
}

fn run_placement_solver(
    name: &str,
    p: &PlacementInstance,
    objective: PlacementObjective,
) -> Result<Result<Placement, PlacementError>, RunError> {
    let result = match name {
        "exact" => solve_exact_placement(p, objective),
        "ffd" => heuristic_ffd(p),
        "bfd" => heuristic_bfd(p),
        _ => return Err(unknown(name, &PLACEMENT_SOLVERS)),
    };
    match result {
        Err(PlacementError::InvalidInstance(v)) => Err(RunError::InvalidInstance(
            v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join("; "),
        )),
        Err(PlacementError::InvalidWeights) => Err(RunError::InvalidInstance("invalid objective weights".into())),
        other => Ok(other),
    }
}

fn fill_placement(
    r: &mut RunReport,
    p: &PlacementInstance,
    pl: &Placement,
    objective: PlacementObjective,
    exact: bool,
) {
    let score = score_placement(p, pl).expect("solvers return feasible placements");
    let value = placement_value(objective, score);
    let baseline = placement_baseline(objective, p.pm_count(), score);
    r.objective = Some(value);
    r.baseline = Some(baseline);
    r.savings_fraction = savings(value, baseline);
    r.optimality = Some(if exact {
        Optimality::Exact.label()
    } else {
        format!("heuristic:{}", r.solver)
    });
    r.placement = Some(PlacementDetail {
        active_pms: score.active_pms,
        network_cost: score.network_cost,
        pms: (0..p.pm_count())
            .map(|pm| PmState {
                id: pm,
                on: pl.pm_on[pm],
                vms: (0..p.vm_count()).filter(|&vm| pl.assignment[pm][vm]).collect(),
            })
            .collect(),
    });
}

pub fn solve_placement(inst: &Instance, opts: &SolveOptions) -> Result<Outcome<RunReport>, RunError> {
    let p = inst.placement.as_ref().ok_or(RunError::NoPlacement)?;
    let mut r = blank_report(Problem::Placement, inst, opts, &opts.solver);
    let (result, ms) = timed(opts.deterministic, || {
        run_placement_solver(&opts.solver, p, opts.objective)
    });
    r.wall_time_ms = ms;
    let exit = match result? {
        Ok(pl) => {
            fill_placement(&mut r, p, &pl, opts.objective, opts.solver == "exact");
            EXIT_OK
        }
        Err(PlacementError::Infeasible { vm }) => {
            r.status = Status::Infeasible;
            r.certificate = Some(Certificate {
                flows: Vec::new(),
                saturated_edges: Vec::new(),
                vm,
                proven: true,
                reason: match vm {
                    Some(_) => "vm fits on no PM alone".into(),
                    None => "vms do not fit jointly".into(),
                },
            });
            EXIT_INFEASIBLE
        }
        Err(e) => unreachable!("filtered by run_placement_solver: {e}"),
    };
    Ok(Outcome { report: r, exit })
}

// ---- rules ----

/// Rules needed when every flow takes a fewest-hop path and tables are
/// unbounded; `None` if some flow is disconnected.
fn rules_baseline(t: &Topology, flows: &[Flow]) -> Option<f64> {
    let adj = t.adjacency();
    let mut total = 0;
    for f in flows {
        total += graph::hop_distances_to(&adj, f.destination, |_| true, |_| true)[f.source]? + 1;
    }
    Some(total as f64)
}

fn run_rule_solver(
    name: &str,
    t: &Topology,
    flows: &[Flow],
    budget: SolverBudget,
) -> Result<Result<RuleSolution, RuleError>, RunError> {
    let result = match name {
        "exact" => solve_exact_rules(t, flows, budget),
        "shortest-admissible" => heuristic_shortest_admissible(t, flows),
        _ => return Err(unknown(name, &RULE_SOLVERS)),
    };
    match result {
        Err(RuleError::InvalidTopology(v)) => Err(RunError::InvalidInstance(
            v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; "),
        )),
        Err(RuleError::InvalidFlows(e)) => Err(RunError::InvalidInstance(e.to_string())),
        other => Ok(other),
    }
}

fn fill_rules(r: &mut RunReport, t: &Topology, flows: &[Flow], sol: &RuleSolution) {
    let a = &sol.allocation;
    let value = sol.total_rules as f64;
    r.objective = Some(value);
    r.baseline = rules_baseline(t, flows);
    r.savings_fraction = r.baseline.and_then(|b| savings(value, b));
    r.optimality = Some(sol.optimality.label());
    r.nodes_explored = sol.nodes_explored;
    let mut used = vec![false; t.edges.len()];
    for p in a.routing.paths.values() {
        for &e in &p.edges {
            used[e] = true;
        }
    }
    r.rules = Some(RulesDetail {
        total_rules: sol.total_rules,
        tables: t
            .switches
            .iter()
            .map(|s| RuleTable {
                switch: s.id,
                capacity: s.rule_capacity,
                flows: flows
                    .iter()
                    .enumerate()
                    .filter(|&(col, _)| a.rules[s.id][col])
                    .map(|(_, f)| f.id)
                    .collect(),
            })
            .collect(),
        links: link_states(t, &a.link_state, &used),
        routes: routes(&a.routing),
    });
}

pub fn solve_rules(inst: &Instance, opts: &SolveOptions) -> Result<Outcome<RunReport>, RunError> {
    let (t, flows) = (&inst.topology, &inst.flows[..]);
    let mut r = blank_report(Problem::Rules, inst, opts, &opts.solver);
    let (result, ms) = timed(opts.deterministic, || {
        run_rule_solver(&opts.solver, t, flows, opts.budget)
    });
    r.wall_time_ms = ms;
    let exit = match result? {
        Ok(sol) => {
            fill_rules(&mut r, t, flows, &sol);
            if opts.solver == "exact" && !sol.optimality.is_exact() {
                EXIT_UNPROVEN
            } else {
                EXIT_OK
            }
        }
        Err(RuleError::NotAdmissible(f)) => {
            r.status = Status::Infeasible;
            r.certificate = Some(Certificate {
                flows: vec![f],
                saturated_edges: Vec::new(),
                vm: None,
                proven: true,
                reason: "flow endpoints lack an ingress or egress host".into(),
            });
            EXIT_INFEASIBLE
        }
        Err(RuleError::Infeasible(c)) => {
            r.status = Status::Infeasible;
            r.certificate = Some(traffic_certificate(&c, "no routing fits table and link capacities"));
            EXIT_INFEASIBLE
        }
        Err(RuleError::BudgetExhausted { incumbent, nodes }) => {
            r.status = Status::BudgetExhausted;
            if let Some(sol) = incumbent {
                fill_rules(&mut r, t, flows, &sol);
            }
            r.nodes_explored = nodes;
            EXIT_UNPROVEN
        }
        Err(e) => unreachable!("filtered by run_rule_solver: {e}"),
    };
    Ok(Outcome { report: r, exit })
}

// ---- dispatch, compare ----

pub fn solve(problem: Problem, inst: &Instance, opts: &SolveOptions) -> Result<Outcome<RunReport>, RunError> {
    match problem {
        Problem::Traffic => solve_traffic(inst, opts),
        Problem::Placement => solve_placement(inst, opts),
        Problem::Rules => solve_rules(inst, opts),
    }
}

pub fn solvers_for(problem: Problem) -> &'static [&'static str] {
    match problem {
        Problem::Traffic => &TRAFFIC_SOLVERS,
        Problem::Placement => &PLACEMENT_SOLVERS,
        Problem::Rules => &RULE_SOLVERS,
    }
}

/// Runs the exact solver and every heuristic concurrently. Exit code
/// follows the exact solver's outcome.
pub fn compare(problem: Problem, inst: &Instance, opts: &SolveOptions) -> Result<Outcome<CompareReport>, RunError> {
    let names = solvers_for(problem);
    let outcomes: Vec<Result<Outcome<RunReport>, RunError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = names
            .iter()
            .map(|&name| {
                let o = SolveOptions {
                    solver: name.into(),
                    ..opts.clone()
                };
                scope.spawn(move || solve(problem, inst, &o))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("solver thread panicked"))
            .collect()
    });
    let mut reports = Vec::new();
    for (&name, out) in names.iter().zip(outcomes) {
        match out {
            Ok(o) => reports.push((name, o)),
            Err(RunError::NotFatTree) => {}
            Err(e) => return Err(e),
        }
    }
    let exact = reports.iter().find(|(n, _)| *n == "exact").map(|(_, o)| o.clone());
    let exact_obj = exact.as_ref().and_then(|o| o.report.objective);
    let rows = reports
        .iter()
        .map(|(name, o)| CompareRow {
            solver: name.to_string(),
            status: o.report.status,
            objective: o.report.objective,
            gap: match (o.report.objective, exact_obj) {
                (Some(v), Some(x)) if x != 0.0 => Some((v - x) / x),
                (Some(v), Some(x)) => Some(v - x),
                _ => None,
            },
            savings_fraction: o.report.savings_fraction,
            optimality: o.report.optimality.clone(),
        })
        .collect();
    Ok(Outcome {
        report: CompareReport {
            schema_version: SCHEMA_VERSION,
            problem,
            instance_digest: digest(inst),
            params: params(problem, opts),
            rows,
        },
        exit: exact.map_or(EXIT_OK, |o| o.exit),
    })
}

/// Offered load: mean flow rate over the narrowest link for traffic and
/// rules, mean over resources of total demand over total capacity for
/// placement.
pub fn load_factor(problem: Problem, inst: &Instance) -> f64 {
    match problem {
        Problem::Traffic | Problem::Rules => {
            let bw = inst
                .topology
                .edges
                .iter()
                .map(|e| e.bandwidth)
                .fold(f64::INFINITY, f64::min);
            if inst.flows.is_empty() || !bw.is_finite() {
                return 0.0;
            }
            inst.flows.iter().map(|f| f.rate).sum::<f64>() / inst.flows.len() as f64 / bw
        }
        Problem::Placement => {
            let Some(p) = &inst.placement else { return 0.0 };
            let r = p.resource_count();
            if r == 0 {
                return 0.0;
            }
            (0..r)
                .map(|k| {
                    let demand: f64 = p.vm_demands.iter().map(|d| d[k]).sum();
                    let cap: f64 = p.pm_resources.iter().map(|c| c[k]).sum();
                    if cap > 0.0 {
                        demand / cap
                    } else {
                        0.0
                    }
                })
                .sum::<f64>()
                / r as f64
        }
    }
}

/// `load_factor,solver,savings_fraction` rows with a header line.
pub fn csv_rows(load: f64, rows: &[(String, Option<f64>)]) -> String {
    let mut out = String::from("load_factor,solver,savings_fraction\n");
    for (solver, s) in rows {
        let s = s.map_or(String::new(), |x| x.to_string());
        out.push_str(&format!("{load},{solver},{s}\n"));
    }
    out
}

// ---- verify ----

fn violation(equation: Option<u8>, message: impl Into<String>) -> Violation {
    Violation {
        equation,
        message: message.into(),
    }
}

fn rebuild_routing(t: &Topology, routes: &[Route]) -> FlowRouting {
    let mut routing = FlowRouting::new();
    for r in routes {
        let edges = r
            .switches
            .windows(2)
            .map(|w| t.edge_between(w[0], w[1]).unwrap_or(usize::MAX))
            .collect();
        routing.insert(
            r.flow,
            Path {
                switches: r.switches.clone(),
                edges,
            },
        );
    }
    routing
}

/// Switch and link flags from a listing; `None` if the listing does not
/// cover the topology exactly once.
fn listed_flags(n: usize, ids: impl Iterator<Item = (usize, bool)>) -> Option<Vec<bool>> {
    let mut out = vec![None; n];
    for (id, on) in ids {
        match out.get_mut(id) {
            Some(slot @ None) => *slot = Some(on),
            _ => return None,
        }
    }
    out.into_iter().collect()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

fn objective_check(out: &mut Vec<Violation>, reported: Option<f64>, actual: f64) {
    match reported {
        Some(v) if close(v, actual) => {}
        Some(v) => out.push(violation(
            None,
            format!("reported objective {v} differs from recomputed {actual}"),
        )),
        None => out.push(violation(None, "report carries no objective")),
    }
}

fn verify_traffic(inst: &Instance, r: &RunReport, out: &mut Vec<Violation>) -> Result<(), RunError> {
    let t = &inst.topology;
    let Some(d) = &r.traffic else {
        out.push(violation(None, "report carries no traffic solution"));
        return Ok(());
    };
    let mode = parse_mode(r.params.mode.as_deref().unwrap_or("per-flow-link")).map_err(RunError::MalformedSolution)?;
    let routing = rebuild_routing(t, &d.routes);
    let switch_on = listed_flags(t.switches.len(), d.switches.iter().map(|s| (s.id, s.on)));
    let link_active = listed_flags(t.edges.len(), d.links.iter().map(|l| (l.id, l.active)));
    let link_used = listed_flags(t.edges.len(), d.links.iter().map(|l| (l.id, l.used)));
    let (Some(switch_on), Some(link_active), Some(link_used)) = (switch_on, link_active, link_used) else {
        out.push(violation(None, "switch or link listing does not match the topology"));
        return Ok(());
    };
    let state = NetworkState {
        switch_on,
        link_active,
        link_used,
    };
    let found = check_traffic_constraints(t, &inst.flows, &routing, &state);
    if found.is_empty() {
        let value = evaluate_traffic_objective(t, &inst.flows, &routing, &state, mode).expect("checked feasible");
        objective_check(out, r.objective, value);
    }
    out.extend(found.iter().map(|v| violation(v.equation(), v.to_string())));
    Ok(())
}

fn verify_placement(inst: &Instance, r: &RunReport, out: &mut Vec<Violation>) -> Result<(), RunError> {
    let p = inst.placement.as_ref().ok_or(RunError::NoPlacement)?;
    let Some(d) = &r.placement else {
        out.push(violation(None, "report carries no placement"));
        return Ok(());
    };
    let objective =
        parse_objective(r.params.objective.as_deref().unwrap_or("lex")).map_err(RunError::MalformedSolution)?;
    let (pms, vms) = (p.pm_count(), p.vm_count());
    let Some(pm_on) = listed_flags(pms, d.pms.iter().map(|s| (s.id, s.on))) else {
        out.push(violation(None, "PM listing does not match the instance"));
        return Ok(());
    };
    let mut assignment = vec![vec![false; vms]; pms];
    for s in &d.pms {
        for &vm in &s.vms {
            match assignment[s.id].get_mut(vm) {
                Some(cell) => *cell = true,
                None => out.push(violation(None, format!("pm {} lists unknown vm {vm}", s.id))),
            }
        }
    }
    let placement = Placement { assignment, pm_on };
    let found = check_placement(p, &placement);
    if found.is_empty() {
        let score = score_placement(p, &placement).expect("checked feasible");
        objective_check(out, r.objective, placement_value(objective, score));
    }
    out.extend(found.iter().map(|v| violation(v.equation(), v.to_string())));
    Ok(())
}

fn verify_rules(inst: &Instance, r: &RunReport, out: &mut Vec<Violation>) {
    let (t, flows) = (&inst.topology, &inst.flows);
    let Some(d) = &r.rules else {
        out.push(violation(None, "report carries no rule allocation"));
        return;
    };
    let mut rules = vec![vec![false; flows.len()]; t.switches.len()];
    let mut listed = vec![false; t.switches.len()];
    for table in &d.tables {
        let Some(row) = rules.get_mut(table.switch) else {
            out.push(violation(None, format!("table for unknown switch {}", table.switch)));
            continue;
        };
        listed[table.switch] = true;
        for &fid in &table.flows {
            match flows.iter().position(|f| f.id == fid) {
                Some(col) => row[col] = true,
                None => out.push(violation(
                    None,
                    format!("switch {} holds a rule for unknown flow {fid}", table.switch),
                )),
            }
        }
    }
    let Some(link_state) = listed_flags(t.edges.len(), d.links.iter().map(|l| (l.id, l.active))) else {
        out.push(violation(None, "link listing does not match the topology"));
        return;
    };
    let alloc = RuleAllocation {
        rules,
        routing: rebuild_routing(t, &d.routes),
        link_state,
    };
    let found = check_rule_constraints(t, flows, &alloc);
    if found.is_empty() {
        objective_check(out, r.objective, alloc.total_rules() as f64);
    }
    out.extend(found.iter().map(|v| violation(v.equation(), v.to_string())));
}

/// Re-checks a report's solution against the instance. Exit 1 when any
/// violation is found.
pub fn verify(inst: &Instance, report_json: &str) -> Result<Outcome<VerifyReport>, RunError> {
    let r: RunReport = serde_json::from_str(report_json).map_err(|e| RunError::MalformedSolution(e.to_string()))?;
    if r.schema_version != SCHEMA_VERSION {
        return Err(RunError::MalformedSolution(format!(
            "unsupported schema version {}",
            r.schema_version
        )));
    }
    let mut violations = Vec::new();
    let d = digest(inst);
    if r.instance_digest != d {
        violations.push(violation(
            None,
            format!("report is for instance {}, not {d}", r.instance_digest),
        ));
    }
    if r.status == Status::Infeasible {
        violations.push(violation(None, "report declares the instance infeasible"));
    } else {
        match r.problem {
            Problem::Traffic => verify_traffic(inst, &r, &mut violations)?,
            Problem::Placement => verify_placement(inst, &r, &mut violations)?,
            Problem::Rules => verify_rules(inst, &r, &mut violations),
        }
    }
    let ok = violations.is_empty();
    Ok(Outcome {
        report: VerifyReport {
            schema_version: SCHEMA_VERSION,
            problem: r.problem,
            instance_digest: d,
            solver: r.solver,
            ok,
            violations,
        },
        exit: if ok { EXIT_OK } else { EXIT_INFEASIBLE },
    })
}

// ---- gen ----

#[derive(Debug, Clone, PartialEq)]
pub struct GenOptions {
    pub spec: GeneratorSpec,
    pub flows: usize,
    pub rate_fraction: f64,
    pub locality: Locality,
    /// VM and PM counts for an optional placement section.
    pub placement: Option<(usize, usize)>,
}

impl GenOptions {
    pub fn new(kind: TopologyKind) -> Self {
        GenOptions {
            spec: GeneratorSpec::new(kind),
            flows: 0,
            rate_fraction: 0.1,
            locality: Locality::Uniform,
            placement: None,
        }
    }
}

pub fn generate(opts: &GenOptions) -> Result<Instance, GenerateError> {
    let topology = generate_topology(&opts.spec)?;
    let flows = generate_flows(&topology, opts.flows, opts.rate_fraction, opts.locality, opts.spec.seed)?;
    let placement = opts.placement.map(|(v, p)| generate_placement(v, p, opts.spec.seed));
    Ok(Instance {
        topology,
        flows,
        placement,
    })
}
