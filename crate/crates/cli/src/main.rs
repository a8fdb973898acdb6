use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sdn_energy::generate::{GeneratorSpec, Locality, TopologyKind};
use sdn_energy::placement::PlacementObjective;
use sdn_energy::{ObjectiveMode, SolverBudget};

use sdn_energy_cli::format::{parse_instance, write_instance, Instance};
use sdn_energy_cli::report::{to_json, Problem};
use sdn_energy_cli::run::{self, GenOptions, SolveOptions, EXIT_MALFORMED};
use sdn_energy_cli::sndlib::{import_sndlib, ImportDefaults};

#[derive(Parser)]
#[command(
    name = "sdn-energy",
    version,
    about = "Energy-aware routing, VM placement and rule placement solvers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance file, or import an SNDlib network.
    Gen(GenArgs),
    /// Route flows on as few powered switches and links as possible.
    SolveTraffic(SolveArgs),
    /// Pack VMs onto as few PMs as possible.
    SolvePlacement(SolveArgs),
    /// Place forwarding rules under flow-table limits.
    SolveRules(SolveArgs),
    /// Run the exact solver and every heuristic on one instance.
    Compare(CompareArgs),
    /// Check a report's solution against its instance.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct CommonArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value = "per-flow-link", value_parser = run::parse_mode)]
    mode: ObjectiveMode,
    #[arg(long, default_value_t = SolverBudget::DEFAULT_MAX_NODES)]
    budget_nodes: u64,
    #[arg(long, default_value_t = SolverBudget::DEFAULT_K_PATHS)]
    k_paths: usize,
    /// pms, lex or weighted:A,B
    #[arg(long, default_value = "lex", value_parser = run::parse_objective)]
    objective: PlacementObjective,
    /// Recorded in the report; solvers are deterministic.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write load_factor,solver,savings_fraction rows here.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Omit wall time so repeated runs print identical bytes.
    #[arg(long)]
    deterministic: bool,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long, default_value = "exact")]
    solver: String,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProblemArg {
    Traffic,
    Placement,
    Rules,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long, value_enum, default_value = "traffic")]
    problem: ProblemArg,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    instance: PathBuf,
    /// JSON report written by a solve command.
    #[arg(long)]
    solution: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum LocalityArg {
    Uniform,
    IntraPod,
    CrossPod,
}

#[derive(Args)]
struct GenArgs {
    /// fat-tree:K, ring:N or mesh:N
    #[arg(long, required_unless_present = "sndlib", conflicts_with = "sndlib", value_parser = parse_kind)]
    topology: Option<TopologyKind>,
    /// SNDlib native network file to import; needs explicit power and
    /// rule figures.
    #[arg(long)]
    sndlib: Option<PathBuf>,
    #[arg(long)]
    switch_watts: Option<f64>,
    #[arg(long)]
    link_watts: Option<f64>,
    #[arg(long)]
    bandwidth: Option<f64>,
    #[arg(long)]
    rule_capacity: Option<u32>,
    #[arg(long, default_value_t = 0)]
    flows: usize,
    /// Flow rate as a fraction of link bandwidth.
    #[arg(long, default_value_t = 0.1)]
    rate_fraction: f64,
    #[arg(long, value_enum, default_value = "uniform")]
    locality: LocalityArg,
    /// Add a placement section with this many VMs.
    #[arg(long, requires = "pms")]
    vms: Option<usize>,
    #[arg(long, requires = "vms")]
    pms: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; standard output if absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_kind(s: &str) -> Result<TopologyKind, String> {
    let (name, n) = s
        .split_once(':')
        .ok_or_else(|| format!("expected NAME:SIZE, got `{s}`"))?;
    let bad = || format!("invalid size in `{s}`");
    match name {
        "fat-tree" => Ok(TopologyKind::FatTree(n.parse().map_err(|_| bad())?)),
        "ring" => Ok(TopologyKind::Ring(n.parse().map_err(|_| bad())?)),
        "mesh" => Ok(TopologyKind::FullMesh(n.parse().map_err(|_| bad())?)),
        _ => Err(format!("unknown topology `{name}`; use fat-tree, ring or mesh")),
    }
}

/// Error message and exit code.
struct Failure(String, u8);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string(), EXIT_MALFORMED)
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure(format!("{}: {e}", path.display()), EXIT_MALFORMED))
}

fn load(path: &Path) -> Result<Instance, Failure> {
    parse_instance(&read(path)?).map_err(|e| Failure(format!("{}: {e}", path.display()), EXIT_MALFORMED))
}

fn options(solver: &str, c: &CommonArgs) -> Result<SolveOptions, Failure> {
    Ok(SolveOptions {
        solver: solver.into(),
        mode: c.mode,
        budget: SolverBudget::new(c.budget_nodes, c.k_paths)?,
        objective: c.objective,
        seed: c.seed,
        deterministic: c.deterministic,
    })
}

fn write_csv(path: &Option<PathBuf>, text: impl FnOnce() -> String) -> Result<(), Failure> {
    if let Some(p) = path {
        fs::write(p, text()).map_err(|e| Failure(format!("{}: {e}", p.display()), EXIT_MALFORMED))?;
    }
    Ok(())
}

fn solve(problem: Problem, a: &SolveArgs) -> Result<u8, Failure> {
    let inst = load(&a.common.instance)?;
    let out = run::solve(problem, &inst, &options(&a.solver, &a.common)?)?;
    print!("{}", to_json(&out.report));
    write_csv(&a.common.csv, || {
        run::csv_rows(
            run::load_factor(problem, &inst),
            &[(out.report.solver.clone(), out.report.savings_fraction)],
        )
    })?;
    Ok(out.exit)
}

fn compare(a: &CompareArgs) -> Result<u8, Failure> {
    let problem = match a.problem {
        ProblemArg::Traffic => Problem::Traffic,
        ProblemArg::Placement => Problem::Placement,
        ProblemArg::Rules => Problem::Rules,
    };
    let inst = load(&a.common.instance)?;
    let out = run::compare(problem, &inst, &options("exact", &a.common)?)?;
    print!("{}", to_json(&out.report));
    write_csv(&a.common.csv, || {
        let rows: Vec<_> = out
            .report
            .rows
            .iter()
            .map(|r| (r.solver.clone(), r.savings_fraction))
            .collect();
        run::csv_rows(run::load_factor(problem, &inst), &rows)
    })?;
    Ok(out.exit)
}

fn verify(a: &VerifyArgs) -> Result<u8, Failure> {
    let inst = load(&a.instance)?;
    let out = run::verify(&inst, &read(&a.solution)?)?;
    print!("{}", to_json(&out.report));
    Ok(out.exit)
}

fn gen(a: &GenArgs) -> Result<u8, Failure> {
    let inst = match (&a.sndlib, a.topology) {
        (Some(path), _) => {
            let missing = |flag: &str| Failure(format!("SNDlib import needs --{flag}"), EXIT_MALFORMED);
            let defaults = ImportDefaults {
                switch_watts: a.switch_watts.ok_or_else(|| missing("switch-watts"))?,
                link_watts: a.link_watts.ok_or_else(|| missing("link-watts"))?,
                rule_capacity: a.rule_capacity.ok_or_else(|| missing("rule-capacity"))?,
            };
            import_sndlib(&read(path)?, defaults)
                .map_err(|e| Failure(format!("{}: {e}", path.display()), EXIT_MALFORMED))?
        }
        (None, Some(kind)) => {
            let mut o = GenOptions::new(kind);
            let spec: &mut GeneratorSpec = &mut o.spec;
            spec.switch_watts = a.switch_watts.unwrap_or(spec.switch_watts);
            spec.link_watts = a.link_watts.unwrap_or(spec.link_watts);
            spec.bandwidth = a.bandwidth.unwrap_or(spec.bandwidth);
            spec.rule_capacity = a.rule_capacity.unwrap_or(spec.rule_capacity);
            spec.seed = a.seed;
            o.flows = a.flows;
            o.rate_fraction = a.rate_fraction;
            o.locality = match a.locality {
                LocalityArg::Uniform => Locality::Uniform,
                LocalityArg::IntraPod => Locality::IntraPod,
                LocalityArg::CrossPod => Locality::CrossPod,
            };
            o.placement = a.vms.zip(a.pms);
            run::generate(&o)?
        }
        (None, None) => unreachable!("clap requires --topology or --sndlib"),
    };
    let text = write_instance(&inst);
    match &a.out {
        Some(p) => fs::write(p, text).map_err(|e| Failure(format!("{}: {e}", p.display()), EXIT_MALFORMED))?,
        None => print!("{text}"),
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Gen(a) => gen(a),
        Command::SolveTraffic(a) => solve(Problem::Traffic, a),
        Command::SolvePlacement(a) => solve(Problem::Placement, a),
        Command::SolveRules(a) => solve(Problem::Rules, a),
        Command::Compare(a) => compare(a),
        Command::Verify(a) => verify(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure(message, code)) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}
