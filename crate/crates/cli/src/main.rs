use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use psys_core::dsl;
use psys_core::engine::{run, RewriteMode, RuleProgram, RunError, StopCondition, Trace};
use psys_core::fssp::{
    amended_program, build_instance, default_program, fuzz, parse_node_list, verify_run,
    FuzzOptions, InstanceSpec, Variant, MAX_FUZZ_NODES,
};
use psys_core::topology::oracle;
use psys_core::topology::{NodeId, Topology};

const EXIT_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_NON_TERMINATION: u8 = 3;

/// Simulator and verifier for state-based P systems on trees, dags and
/// graphs, with two firing squad synchronization programs built in.
#[derive(Parser)]
#[command(name = "psys", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a firing squad instance and write its trace.
    Run(RunArgs),
    /// Print the level table of a structure as seen from a commander.
    Oracle(OracleArgs),
    /// Check a recorded trace against an instance file.
    Verify(VerifyArgs),
    /// Report dead-end states, unproducible objects and blocked rules.
    Lint(RulesArg),
    /// Print the state transition graph of a rule file in DOT format.
    Statechart(RulesArg),
    /// Run seeded random instances and stop at the first failure.
    Fuzz(FuzzArgs),
}

#[derive(Args)]
struct ProgramArgs {
    /// Rule file to use instead of the built-in program.
    #[arg(long)]
    rules: Option<PathBuf>,
    /// Use the built-in program with its one-rule amendment.
    #[arg(long, conflicts_with = "rules")]
    amended: bool,
    /// Rewriting mode, overriding the program's own.
    #[arg(long, value_parser = parse_mode)]
    mode: Option<RewriteMode>,
}

#[derive(Args)]
struct RunArgs {
    /// Topology file.
    #[arg(long)]
    system: PathBuf,
    #[arg(long, value_parser = parse_variant)]
    variant: Variant,
    #[arg(long)]
    commander: NodeId,
    /// Comma-separated squad cells, e.g. `1,2,5`.
    #[arg(long, value_parser = parse_squad)]
    squad: BTreeSet<NodeId>,
    /// Hard step budget; defaults to ten times the static firing time.
    #[arg(long)]
    max_steps: Option<u64>,
    /// Write the trace here instead of standard output.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[command(flatten)]
    program: ProgramArgs,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    system: PathBuf,
    #[arg(long)]
    commander: NodeId,
    /// Also check path counts against exhaustive path enumeration.
    #[arg(long)]
    brute_force: bool,
}

#[derive(Args)]
struct VerifyArgs {
    /// Trace file in TSV form.
    #[arg(long)]
    trace: PathBuf,
    /// Instance file; its `system:` path is relative to the instance file.
    #[arg(long)]
    instance: PathBuf,
    /// Also fail on objects left behind after a dynamic run.
    #[arg(long)]
    strict: bool,
    #[command(flatten)]
    program: ProgramArgs,
}

#[derive(Args)]
struct RulesArg {
    rules: PathBuf,
}

#[derive(Args)]
struct FuzzArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Number of random instances.
    #[arg(long = "n", default_value_t = 200)]
    instances: usize,
    #[arg(long, default_value_t = MAX_FUZZ_NODES)]
    max_nodes: usize,
    /// Comma-separated list of `static` and `dynamic`.
    #[arg(long, default_value = "static,dynamic", value_delimiter = ',', value_parser = parse_variant)]
    variants: Vec<Variant>,
    /// Use the built-in programs with their one-rule amendments.
    #[arg(long)]
    amended: bool,
    /// Also fail on objects left behind after a dynamic run.
    #[arg(long)]
    strict: bool,
    #[arg(long)]
    static_rules: Option<PathBuf>,
    #[arg(long)]
    dynamic_rules: Option<PathBuf>,
    /// Where a failing instance is written for replay.
    #[arg(long, default_value = ".")]
    replay_dir: PathBuf,
}

fn parse_mode(s: &str) -> Result<RewriteMode, String> {
    s.parse()
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.parse()
}

fn parse_squad(s: &str) -> Result<BTreeSet<NodeId>, String> {
    parse_node_list(s)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load_topology(path: &Path) -> Result<Topology> {
    read(path)?
        .parse()
        .with_context(|| format!("in {}", path.display()))
}

fn load_rules(path: &Path) -> Result<RuleProgram> {
    let text = read(path)?;
    let source = dsl::parse_rules(&text).with_context(|| format!("in {}", path.display()))?;
    if source.program.rules().is_empty() {
        bail!("{} contains no rules", path.display());
    }
    Ok(source.program)
}

fn select_program(args: &ProgramArgs, variant: Variant) -> Result<RuleProgram> {
    let mut program = match (&args.rules, args.amended) {
        (Some(path), _) => load_rules(path)?,
        (None, true) => amended_program(variant),
        (None, false) => default_program(variant),
    };
    if let Some(mode) = args.mode {
        program.set_mode(mode);
    }
    Ok(program)
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_run(args: RunArgs) -> Result<u8> {
    let topology = load_topology(&args.system)?;
    let program = select_program(&args.program, args.variant)?;
    let instance = build_instance(args.variant, program, &topology, args.commander, &args.squad)?;
    let mut config = instance.config.clone();
    let trace = match run(&mut config, &StopCondition::Quiescence, args.max_steps) {
        Ok(trace) => trace,
        Err(RunError::NonTermination { budget, trace }) => {
            write_output(args.trace.as_deref(), &trace.to_tsv(config.program()))?;
            eprintln!("no quiescence within {budget} steps");
            return Ok(EXIT_NON_TERMINATION);
        }
        Err(e) => return Err(e.into()),
    };
    write_output(args.trace.as_deref(), &trace.to_tsv(config.program()))?;
    let report = verify_run(&trace, &instance);
    let message = match report.firing_step {
        Some(step) => format!("fired at step {step}"),
        None => "did not fire".to_string(),
    };
    if args.trace.is_some() {
        println!("{message}");
    } else {
        eprintln!("{message}");
    }
    Ok(0)
}

fn cmd_oracle(args: OracleArgs) -> Result<u8> {
    let topology = load_topology(&args.system)?;
    let table = topology.bfs_levels(args.commander)?;
    print!("{}", table.to_tsv());
    if args.brute_force {
        let counts = oracle::brute_force_counts(&topology, args.commander)?;
        if counts != table.counts() {
            eprintln!("path counts disagree: bfs {:?}, enumeration {counts:?}", table.counts());
            return Ok(EXIT_FAILED);
        }
        eprintln!("path counts confirmed by enumeration");
    }
    Ok(0)
}

fn cmd_verify(args: VerifyArgs) -> Result<u8> {
    let spec: InstanceSpec = read(&args.instance)?
        .parse()
        .with_context(|| format!("in {}", args.instance.display()))?;
    let base = args.instance.parent().unwrap_or(Path::new("."));
    let topology = load_topology(&base.join(&spec.system))?;
    let program = select_program(&args.program, spec.variant)?;
    let instance = build_instance(spec.variant, program, &topology, spec.commander, &spec.squad)?;
    let trace = Trace::from_tsv(&read(&args.trace)?, instance.config.program())
        .with_context(|| format!("in {}", args.trace.display()))?;
    if trace.columns().len() != instance.cell_count() || !instance.matches_trace(&trace) {
        bail!("trace does not start from the initial configuration of this instance");
    }
    let report = verify_run(&trace, &instance);
    print!("{report}");
    let ok = if args.strict {
        report.passed()
    } else {
        report.contract_holds(spec.variant)
    };
    Ok(if ok { 0 } else { EXIT_FAILED })
}

fn cmd_lint(args: RulesArg) -> Result<u8> {
    let program = load_rules(&args.rules)?;
    let diagnostics = dsl::lint(&program);
    for d in &diagnostics {
        println!("{d}");
    }
    let errors = diagnostics.iter().filter(|d| !d.is_warning()).count();
    println!("{errors} error(s), {} warning(s)", diagnostics.len() - errors);
    Ok(if errors == 0 { 0 } else { EXIT_FAILED })
}

fn cmd_statechart(args: RulesArg) -> Result<u8> {
    let program = load_rules(&args.rules)?;
    print!("{}", dsl::extract_statechart(&program).to_dot());
    Ok(0)
}

fn cmd_fuzz(args: FuzzArgs) -> Result<u8> {
    if args.instances == 0 {
        bail!("--n must be at least 1");
    }
    if !(2..=MAX_FUZZ_NODES).contains(&args.max_nodes) {
        bail!("--max-nodes must be between 2 and {MAX_FUZZ_NODES}");
    }
    let mut options = if args.amended {
        FuzzOptions::amended(args.seed, args.instances, args.max_nodes)
    } else {
        FuzzOptions::new(args.seed, args.instances, args.max_nodes)
    };
    options.strict |= args.strict;
    options.variants = args.variants;
    if let Some(path) = &args.static_rules {
        options.static_program = load_rules(path)?;
    }
    if let Some(path) = &args.dynamic_rules {
        options.dynamic_program = load_rules(path)?;
    }
    match fuzz(&options) {
        Ok(summary) => {
            println!("{summary}");
            Ok(0)
        }
        Err(failure) => {
            print!("{failure}");
            fs::create_dir_all(&args.replay_dir)
                .with_context(|| format!("cannot create {}", args.replay_dir.display()))?;
            let stem = format!("fuzz-{}-{}", args.seed, failure.index);
            let top = PathBuf::from(format!("{stem}.top"));
            let inst = args.replay_dir.join(format!("{stem}.instance"));
            fs::write(args.replay_dir.join(&top), failure.topology.to_text())?;
            fs::write(&inst, failure.instance_text(&top))?;
            println!("replay: {}", inst.display());
            Ok(EXIT_FAILED)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Lint(a) => cmd_lint(a),
        Command::Statechart(a) => cmd_statechart(a),
        Command::Fuzz(a) => cmd_fuzz(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
