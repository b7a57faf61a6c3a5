use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    build_instance, dynamic_amended_program, dynamic_program, static_amended_program, static_program,
    verify_run, InstanceSpec, Variant,
};
use crate::engine::RuleProgram;
use crate::topology::random::{random_dag, random_graph, random_tree};
use crate::topology::{NodeId, Topology, TopologyKind};

/// Largest structure the fuzzer will generate.
pub const MAX_FUZZ_NODES: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum SquadShape {
    Singleton,
    Full,
    WithCommander,
    Random,
    MultiPath,
}

const SHAPES: [SquadShape; 5] = [
    SquadShape::Singleton,
    SquadShape::Full,
    SquadShape::WithCommander,
    SquadShape::Random,
    SquadShape::MultiPath,
];

#[derive(Debug, Clone)]
pub struct FuzzOptions {
    pub seed: u64,
    pub instances: usize,
    pub max_nodes: usize,
    pub variants: Vec<Variant>,
    pub static_program: RuleProgram,
    pub dynamic_program: RuleProgram,
    /// Also fail dynamic runs that leave objects other than channel
    /// endpoints behind.
    pub strict: bool,
}

impl FuzzOptions {
    /// Both variants with the shipped programs.
    pub fn new(seed: u64, instances: usize, max_nodes: usize) -> Self {
        FuzzOptions {
            seed,
            instances,
            max_nodes,
            variants: vec![Variant::Static, Variant::Dynamic],
            static_program: static_program(),
            dynamic_program: dynamic_program(),
            strict: false,
        }
    }

    /// Both variants with the amended programs and strict checking.
    pub fn amended(seed: u64, instances: usize, max_nodes: usize) -> Self {
        FuzzOptions {
            static_program: static_amended_program(),
            dynamic_program: dynamic_amended_program(),
            strict: true,
            ..FuzzOptions::new(seed, instances, max_nodes)
        }
    }

    fn program(&self, variant: Variant) -> &RuleProgram {
        match variant {
            Variant::Static => &self.static_program,
            Variant::Dynamic => &self.dynamic_program,
        }
    }
}

/// Coverage counters for a clean fuzz batch.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FuzzSummary {
    pub instances: usize,
    pub runs: usize,
    pub by_kind: BTreeMap<TopologyKind, usize>,
    pub by_variant: BTreeMap<Variant, usize>,
    pub singleton_squads: usize,
    pub full_squads: usize,
    pub commander_in_squad: usize,
    /// Runs whose squad holds a cell reached by two or more shortest paths.
    pub multi_path_squads: usize,
    pub sergeant_in_squad: usize,
    /// Dynamic runs that met the contract but left stray objects behind.
    pub dynamic_residue: usize,
    pub largest: usize,
    pub phase_checks: usize,
}

impl fmt::Display for FuzzSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "instances: {}, runs: {}, failures: 0", self.instances, self.runs)?;
        for (kind, n) in &self.by_kind {
            writeln!(f, "  {kind}: {n}")?;
        }
        for (variant, n) in &self.by_variant {
            writeln!(f, "  {variant} runs: {n}")?;
        }
        writeln!(f, "  singleton squads: {}", self.singleton_squads)?;
        writeln!(f, "  full squads: {}", self.full_squads)?;
        writeln!(f, "  commander in squad: {}", self.commander_in_squad)?;
        writeln!(f, "  multi-path squad cells: {}", self.multi_path_squads)?;
        writeln!(f, "  sergeant in squad: {}", self.sergeant_in_squad)?;
        writeln!(f, "  dynamic runs with stray objects: {}", self.dynamic_residue)?;
        writeln!(f, "  largest structure: {} cells", self.largest)?;
        write!(f, "  phase checks: {}", self.phase_checks)
    }
}

/// The first failing run of a batch, with enough to replay it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FuzzFailure {
    pub index: usize,
    pub variant: Variant,
    pub topology: Topology,
    pub commander: NodeId,
    pub squad: BTreeSet<NodeId>,
    pub reasons: Vec<String>,
}

impl FuzzFailure {
    /// Instance file text that refers to the topology at `system`.
    pub fn instance_text(&self, system: &Path) -> String {
        InstanceSpec {
            system: system.to_path_buf(),
            commander: self.commander,
            squad: self.squad.clone(),
            variant: self.variant,
        }
        .to_string()
    }
}

impl fmt::Display for FuzzFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let squad: Vec<String> = self.squad.iter().map(ToString::to_string).collect();
        writeln!(
            f,
            "instance {} ({} {}, {} cells, commander {}, squad {}) failed:",
            self.index,
            self.variant,
            self.topology.kind(),
            self.topology.node_count(),
            self.commander,
            squad.join(",")
        )?;
        for reason in &self.reasons {
            writeln!(f, "  {reason}")?;
        }
        Ok(())
    }
}

fn squad_for<R: Rng>(
    rng: &mut R,
    shape: SquadShape,
    n: usize,
    commander: NodeId,
    multi_path: &[NodeId],
) -> BTreeSet<NodeId> {
    let nodes: Vec<NodeId> = (1..=n).collect();
    let random_subset = |rng: &mut R| -> BTreeSet<NodeId> {
        let p = rng.gen_range(0.2..0.8);
        nodes.iter().copied().filter(|_| rng.gen_bool(p)).collect()
    };
    let mut squad = match shape {
        SquadShape::Singleton => BTreeSet::from([rng.gen_range(1..=n)]),
        SquadShape::Full => nodes.iter().copied().collect(),
        SquadShape::WithCommander => {
            let mut s = random_subset(rng);
            s.insert(commander);
            s
        }
        SquadShape::Random => random_subset(rng),
        SquadShape::MultiPath => {
            let mut s = random_subset(rng);
            if let Some(&x) = multi_path.choose(rng) {
                s.insert(x);
            }
            s
        }
    };
    if squad.is_empty() {
        squad.insert(rng.gen_range(1..=n));
    }
    squad
}

/// One generated structure with its commander and squad.
#[derive(Debug, Clone)]
pub struct FuzzCase {
    pub index: usize,
    pub topology: Topology,
    pub commander: NodeId,
    pub squad: BTreeSet<NodeId>,
    /// Whether the dynamic run also puts the sergeant in the squad.
    pub sergeant_in_squad: bool,
    /// Cells reached from the commander by two or more shortest paths.
    pub multi_path: Vec<NodeId>,
}

impl FuzzCase {
    pub fn squad_for(&self, variant: Variant) -> BTreeSet<NodeId> {
        let mut squad = self.squad.clone();
        if variant == Variant::Dynamic && self.sergeant_in_squad {
            squad.insert(self.topology.node_count() + 1);
        }
        squad
    }
}

/// Case `index` of the batch drawn from `seed`. Each case uses its own
/// stream of the seeded generator, so it can be rebuilt on its own.
/// Structures cycle through trees, dags and graphs; squads cycle through
/// singleton, full, commander-in-squad, random and multi-path shapes.
pub fn fuzz_case(seed: u64, index: usize, max_nodes: usize) -> FuzzCase {
    let max_nodes = max_nodes.clamp(2, MAX_FUZZ_NODES);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);

    let n = rng.gen_range(2..=max_nodes);
    let topology = match index % 3 {
        0 => random_tree(&mut rng, n),
        1 => {
            let siblings = rng.gen_bool(0.3);
            random_dag(&mut rng, n, siblings)
        }
        _ => {
            let density = rng.gen_range(0.0..0.4);
            random_graph(&mut rng, n, density)
        }
    };
    let commander = rng.gen_range(1..=n);
    let table = topology.bfs_levels(commander).expect("commander is a node");
    let multi_path: Vec<NodeId> = topology.nodes().filter(|&x| table.count(x) >= 2).collect();
    let shape = SHAPES[(index / 3) % SHAPES.len()];
    let squad = squad_for(&mut rng, shape, n, commander, &multi_path);
    let sergeant_in_squad = rng.gen_bool(0.25);
    FuzzCase { index, topology, commander, squad, sergeant_in_squad, multi_path }
}

/// Runs `options.instances` random instances, each under every requested
/// variant, and stops at the first run that violates the contract.
/// A batch is reproducible from the seed alone.
pub fn fuzz(options: &FuzzOptions) -> Result<FuzzSummary, FuzzFailure> {
    let mut summary = FuzzSummary::default();
    for index in 0..options.instances {
        let case = fuzz_case(options.seed, index, options.max_nodes);
        let FuzzCase { topology, commander, multi_path, .. } = &case;
        let (commander, n) = (*commander, topology.node_count());

        summary.instances += 1;
        *summary.by_kind.entry(topology.kind()).or_default() += 1;
        summary.largest = summary.largest.max(n);

        for &variant in &options.variants {
            let squad = case.squad_for(variant);
            if squad.contains(&(n + 1)) {
                summary.sergeant_in_squad += 1;
            }
            let fail = |reasons: Vec<String>| FuzzFailure {
                index,
                variant,
                topology: topology.clone(),
                commander,
                squad: squad.clone(),
                reasons,
            };
            let instance = build_instance(
                variant,
                options.program(variant).clone(),
                topology,
                commander,
                &squad,
            )
            .map_err(|e| fail(vec![format!("build: {e}")]))?;
            let trace = instance
                .run()
                .map_err(|e| fail(vec![format!("run: {e}")]))?;
            let report = verify_run(&trace, &instance);
            let blocking: Vec<String> = if options.strict {
                report.failures.iter().map(ToString::to_string).collect()
            } else {
                report.contract_failures(variant).iter().map(ToString::to_string).collect()
            };
            if !blocking.is_empty() {
                return Err(fail(blocking));
            }
            if !report.passed() {
                summary.dynamic_residue += 1;
            }

            summary.runs += 1;
            *summary.by_variant.entry(variant).or_default() += 1;
            summary.phase_checks += report.phase_checks.len();
            if squad.len() == 1 {
                summary.singleton_squads += 1;
            }
            if (1..=n).all(|x| squad.contains(&x)) {
                summary.full_squads += 1;
            }
            if squad.contains(&commander) {
                summary.commander_in_squad += 1;
            }
            if multi_path.iter().any(|x| squad.contains(x)) {
                summary.multi_path_squads += 1;
            }
        }
    }
    Ok(summary)
}
