//! Firing squad synchronization: instance construction, runs and checks.
//!
//! Two programs are shipped. The static one works on the given structure
//! alone and fires after `6e + 7` steps, where `e` is the commander's
//! eccentricity. The dynamic one adds a sergeant cell linked to the
//! commander, grows mobile channels from it, and fires after `e + 5` steps.

use std::collections::BTreeSet;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;

use crate::dsl;
use crate::engine::{
    run, Cell, ChannelPolicy, EngineError, Multiset, RuleProgram, RunError, StateId, StopCondition,
    SystemConfig, Trace,
};
use crate::fixtures;
use crate::topology::{LevelTable, NodeId, Topology, TopologyError};

mod fuzz;
mod verify;

pub use fuzz::{fuzz, fuzz_case, FuzzCase, FuzzFailure, FuzzOptions, FuzzSummary, MAX_FUZZ_NODES};
pub use verify::{
    verify_phase_postconditions, verify_run, Check, Failure, Phase, PhaseCheck, VerificationReport,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    Dynamic,
    Static,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Dynamic => "dynamic",
            Variant::Static => "static",
        })
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dynamic" => Ok(Variant::Dynamic),
            "static" => Ok(Variant::Static),
            other => Err(format!("unknown variant `{other}` (expected static or dynamic)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FsspError {
    #[error("the squad is empty; there is nothing to synchronize")]
    EmptySquad,
    #[error("the static program needs at least two cells")]
    TooFewCells,
    #[error("squad member {0} is not a cell of this system")]
    SquadOutOfRange(NodeId),
    #[error("program lacks `{0}`")]
    MissingName(String),
    #[error("program declares no firing state")]
    NoFiringState,
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// The static program as shipped.
pub fn static_program() -> RuleProgram {
    dsl::parse_rules(fixtures::STATIC_RULES)
        .expect("shipped static program parses")
        .program
}

/// The mobile-channel program as shipped.
pub fn dynamic_program() -> RuleProgram {
    dsl::parse_rules(fixtures::DYNAMIC_RULES)
        .expect("shipped dynamic program parses")
        .program
}

/// The static program with rule 2.8 (`s2 l -> s6`) added.
pub fn static_amended_program() -> RuleProgram {
    dsl::parse_rules(fixtures::STATIC_AMENDED_RULES)
        .expect("shipped amended static program parses")
        .program
}

/// The mobile-channel program with rule 11 (`s1 phi -> s1`) added.
pub fn dynamic_amended_program() -> RuleProgram {
    dsl::parse_rules(fixtures::DYNAMIC_AMENDED_RULES)
        .expect("shipped amended dynamic program parses")
        .program
}

pub fn amended_program(variant: Variant) -> RuleProgram {
    match variant {
        Variant::Dynamic => dynamic_amended_program(),
        Variant::Static => static_amended_program(),
    }
}

pub fn default_program(variant: Variant) -> RuleProgram {
    match variant {
        Variant::Dynamic => dynamic_program(),
        Variant::Static => static_program(),
    }
}

/// A ready-to-run synchronization problem.
#[derive(Debug, Clone)]
pub struct FsspInstance {
    pub variant: Variant,
    /// The structure as given, before any sergeant is added.
    pub original: Topology,
    pub commander: NodeId,
    pub squad: BTreeSet<NodeId>,
    /// Levels for the commander on the original structure.
    pub level_table: LevelTable,
    /// Present for the dynamic variant: node `n + 1`.
    pub sergeant: Option<NodeId>,
    pub config: SystemConfig,
}

impl FsspInstance {
    pub fn firing_state(&self) -> StateId {
        self.config.program().firing().expect("checked at build time")
    }

    pub fn expected_firing_step(&self) -> u64 {
        expected_firing_step(self.variant, &self.level_table)
    }

    /// State non-squad cells must settle in.
    pub fn rest_state(&self) -> Option<StateId> {
        let name = match self.variant {
            Variant::Dynamic => "s1",
            Variant::Static => "s0",
        };
        self.config.program().state(name)
    }

    pub fn cell_count(&self) -> usize {
        self.config.topology().node_count()
    }

    /// Runs until nothing changes, within the default step budget.
    pub fn run(&self) -> Result<Trace, RunError> {
        let mut config = self.config.clone();
        run(&mut config, &StopCondition::Quiescence, None)
    }

    /// Whether `trace` starts from this instance's initial configuration.
    pub fn matches_trace(&self, trace: &Trace) -> bool {
        trace.first_step() == 0
            && trace.row(0) == Some(self.config.cells())
    }
}

/// `e + 5` for the mobile-channel program, `6e + 7` for the static one.
pub fn expected_firing_step(variant: Variant, level_table: &LevelTable) -> u64 {
    let e = level_table.eccentricity() as u64;
    match variant {
        Variant::Dynamic => e + 5,
        Variant::Static => 6 * e + 7,
    }
}

fn symbol(program: &RuleProgram, name: &str) -> Result<crate::engine::Symbol, FsspError> {
    program
        .symbol(name)
        .ok_or_else(|| FsspError::MissingName(name.to_string()))
}

fn initial_state(program: &RuleProgram) -> Result<StateId, FsspError> {
    program
        .state("s0")
        .ok_or_else(|| FsspError::MissingName("s0".into()))
}

fn check_squad(squad: &BTreeSet<NodeId>, cells: usize) -> Result<(), FsspError> {
    if squad.is_empty() {
        return Err(FsspError::EmptySquad);
    }
    match squad.iter().find(|&&x| x == 0 || x > cells) {
        Some(&x) => Err(FsspError::SquadOutOfRange(x)),
        None => Ok(()),
    }
}

/// Mobile-channel instance with the shipped program.
pub fn build_dynamic_instance(
    topology: &Topology,
    commander: NodeId,
    squad: &BTreeSet<NodeId>,
) -> Result<FsspInstance, FsspError> {
    build_dynamic_instance_with(dynamic_program(), topology, commander, squad)
}

/// Adds sergeant `n + 1` linked to the commander, marks it with `alpha` and
/// every squad cell with `f`. The squad may name the sergeant.
pub fn build_dynamic_instance_with(
    program: RuleProgram,
    topology: &Topology,
    commander: NodeId,
    squad: &BTreeSet<NodeId>,
) -> Result<FsspInstance, FsspError> {
    let level_table = topology.bfs_levels(commander)?;
    let extended = topology.with_linked_node(commander)?;
    let sergeant = extended.node_count();
    check_squad(squad, sergeant)?;
    if program.firing().is_none() {
        return Err(FsspError::NoFiringState);
    }
    let s0 = initial_state(&program)?;
    let (alpha, f) = (symbol(&program, "alpha")?, symbol(&program, "f")?);
    let policy = ChannelPolicy {
        anchor: alpha,
        mobile: BTreeSet::from([symbol(&program, "theta")?]),
        fixed: BTreeSet::from([symbol(&program, "omega")?]),
    };
    let cells = extended
        .nodes()
        .map(|x| {
            let mut m = Multiset::new();
            if x == sergeant {
                m.insert(alpha, 1).expect("fresh multiset");
            }
            if squad.contains(&x) {
                m.insert(f, 1).expect("fresh multiset");
            }
            Cell::new(s0, m)
        })
        .collect();
    let mut config = SystemConfig::new(extended, program, cells, Some(policy))?;
    config.attach_level_table(level_table.clone())?;
    Ok(FsspInstance {
        variant: Variant::Dynamic,
        original: topology.clone(),
        commander,
        squad: squad.clone(),
        level_table,
        sergeant: Some(sergeant),
        config,
    })
}

/// Static instance with the shipped program.
pub fn build_static_instance(
    topology: &Topology,
    commander: NodeId,
    squad: &BTreeSet<NodeId>,
) -> Result<FsspInstance, FsspError> {
    build_static_instance_with(static_program(), topology, commander, squad)
}

/// Marks the commander with `a` (plus `f` if it is in the squad) and every
/// other squad cell with `f`; all cells start in `s0`.
pub fn build_static_instance_with(
    program: RuleProgram,
    topology: &Topology,
    commander: NodeId,
    squad: &BTreeSet<NodeId>,
) -> Result<FsspInstance, FsspError> {
    if topology.node_count() < 2 {
        return Err(FsspError::TooFewCells);
    }
    let level_table = topology.bfs_levels(commander)?;
    check_squad(squad, topology.node_count())?;
    if program.firing().is_none() {
        return Err(FsspError::NoFiringState);
    }
    let s0 = initial_state(&program)?;
    let (a, f) = (symbol(&program, "a")?, symbol(&program, "f")?);
    let cells = topology
        .nodes()
        .map(|x| {
            let mut m = Multiset::new();
            if x == commander {
                m.insert(a, 1).expect("fresh multiset");
            }
            if squad.contains(&x) {
                m.insert(f, 1).expect("fresh multiset");
            }
            Cell::new(s0, m)
        })
        .collect();
    let mut config = SystemConfig::new(topology.clone(), program, cells, None)?;
    config.attach_level_table(level_table.clone())?;
    Ok(FsspInstance {
        variant: Variant::Static,
        original: topology.clone(),
        commander,
        squad: squad.clone(),
        level_table,
        sergeant: None,
        config,
    })
}

pub fn build_instance(
    variant: Variant,
    program: RuleProgram,
    topology: &Topology,
    commander: NodeId,
    squad: &BTreeSet<NodeId>,
) -> Result<FsspInstance, FsspError> {
    match variant {
        Variant::Dynamic => build_dynamic_instance_with(program, topology, commander, squad),
        Variant::Static => build_static_instance_with(program, topology, commander, squad),
    }
}

/// Contents of an instance file: a topology file reference, the commander,
/// the squad and the variant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceSpec {
    pub system: PathBuf,
    pub commander: NodeId,
    pub squad: BTreeSet<NodeId>,
    pub variant: Variant,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct InstanceParseError {
    pub line: usize,
    pub message: String,
}

/// Parses `1,2,5`.
pub fn parse_node_list(text: &str) -> Result<BTreeSet<NodeId>, String> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<NodeId>().map_err(|_| format!("bad node id `{s}`")))
        .collect()
}

impl FromStr for InstanceSpec {
    type Err = InstanceParseError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let err = |line: usize, message: String| InstanceParseError { line, message };
        let (mut system, mut commander, mut squad, mut variant) = (None, None, None, None);
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body
                .split_once(':')
                .ok_or_else(|| err(line, format!("expected `key: value`, found `{body}`")))?;
            let value = value.trim();
            let duplicate = || err(line, format!("duplicate `{}`", key.trim()));
            match key.trim() {
                "system" => {
                    if system.replace(PathBuf::from(value)).is_some() {
                        return Err(duplicate());
                    }
                }
                "commander" => {
                    let c = value
                        .parse::<NodeId>()
                        .map_err(|_| err(line, format!("bad commander `{value}`")))?;
                    if commander.replace(c).is_some() {
                        return Err(duplicate());
                    }
                }
                "squad" => {
                    let s = parse_node_list(value).map_err(|m| err(line, m))?;
                    if squad.replace(s).is_some() {
                        return Err(duplicate());
                    }
                }
                "variant" => {
                    let v = value.parse::<Variant>().map_err(|m| err(line, m))?;
                    if variant.replace(v).is_some() {
                        return Err(duplicate());
                    }
                }
                other => return Err(err(line, format!("unknown key `{other}`"))),
            }
        }
        let missing = |what: &str| err(0, format!("missing `{what}:` line"));
        Ok(InstanceSpec {
            system: system.ok_or_else(|| missing("system"))?,
            commander: commander.ok_or_else(|| missing("commander"))?,
            squad: squad.ok_or_else(|| missing("squad"))?,
            variant: variant.ok_or_else(|| missing("variant"))?,
        })
    }
}

impl fmt::Display for InstanceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let squad: Vec<String> = self.squad.iter().map(|x| x.to_string()).collect();
        writeln!(f, "system: {}", self.system.display())?;
        writeln!(f, "commander: {}", self.commander)?;
        writeln!(f, "squad: {}", squad.join(","))?;
        writeln!(f, "variant: {}", self.variant)
    }
}
