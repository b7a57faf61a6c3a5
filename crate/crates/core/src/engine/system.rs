use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use super::multiset::{Multiset, MultisetError, Symbol};
use super::program::{Destination, ProgramError, RuleProgram, RuleUse, StateId};
use crate::topology::{LevelTable, NodeId, Topology, TopologyKind};

/// Symbols that act as endpoints of dynamically created channels. A cell
/// holding the anchor is linked to every cell holding a mobile or fixed
/// endpoint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelPolicy {
    pub anchor: Symbol,
    pub mobile: BTreeSet<Symbol>,
    pub fixed: BTreeSet<Symbol>,
}

impl ChannelPolicy {
    fn is_endpoint(&self, s: Symbol) -> bool {
        self.mobile.contains(&s) || self.fixed.contains(&s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Cell {
    pub state: StateId,
    pub contents: Multiset,
}

impl Cell {
    pub fn new(state: StateId, contents: Multiset) -> Self {
        Cell { state, contents }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("expected {expected} cells, got {got}")]
    CellCount { expected: usize, got: usize },
    #[error("cell {cell} is in undeclared state #{state}")]
    UnknownState { cell: NodeId, state: u16 },
    #[error("cell {cell} holds undeclared symbol #{symbol}")]
    UnknownSymbol { cell: NodeId, symbol: u16 },
    #[error("rules use up/down/side targets but the topology is a graph")]
    DirectionalOnGraph,
    #[error("channel symbols must be distinct alphabet members")]
    BadChannelPolicy,
    #[error("level table covers {table} nodes but the topology has only {nodes}")]
    LevelTableTooLarge { table: usize, nodes: usize },
    #[error("cell {cell}: {source}")]
    Rule {
        cell: NodeId,
        #[source]
        source: ProgramError,
    },
    #[error("delivery to cell {cell}: {source}")]
    Delivery {
        cell: NodeId,
        #[source]
        source: MultisetError,
    },
}

/// What happened in one cell during a step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellReport {
    pub applications: Vec<RuleUse>,
    pub target: StateId,
    pub delivered: Multiset,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepReport {
    /// Index of the configuration the step produced.
    pub step: u64,
    pub cells: Vec<CellReport>,
    pub quiescent: bool,
}

/// A full P system configuration, advanced one synchronous step at a time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemConfig {
    topology: Topology,
    program: RuleProgram,
    cells: Vec<Cell>,
    channels: Option<ChannelPolicy>,
    environment: Multiset,
    step_index: u64,
    level_table: Option<LevelTable>,
    display_order: Vec<NodeId>,
}

impl SystemConfig {
    pub fn new(
        topology: Topology,
        program: RuleProgram,
        cells: Vec<Cell>,
        channels: Option<ChannelPolicy>,
    ) -> Result<Self, EngineError> {
        if cells.len() != topology.node_count() {
            return Err(EngineError::CellCount {
                expected: topology.node_count(),
                got: cells.len(),
            });
        }
        for (i, cell) in cells.iter().enumerate() {
            if cell.state.0 as usize >= program.states().len() {
                return Err(EngineError::UnknownState { cell: i + 1, state: cell.state.0 });
            }
            if let Some((s, _)) = cell
                .contents
                .iter()
                .find(|(s, _)| s.0 as usize >= program.alphabet().len())
            {
                return Err(EngineError::UnknownSymbol { cell: i + 1, symbol: s.0 });
            }
        }
        if topology.kind() == TopologyKind::Graph && program.uses_directional_targets() {
            return Err(EngineError::DirectionalOnGraph);
        }
        if let Some(policy) = &channels {
            let in_alphabet = |s: &Symbol| (s.0 as usize) < program.alphabet().len();
            let disjoint = !policy.mobile.contains(&policy.anchor)
                && !policy.fixed.contains(&policy.anchor)
                && policy.mobile.is_disjoint(&policy.fixed);
            let all_known = in_alphabet(&policy.anchor)
                && policy.mobile.iter().all(in_alphabet)
                && policy.fixed.iter().all(in_alphabet);
            if !disjoint || !all_known {
                return Err(EngineError::BadChannelPolicy);
            }
        }
        let display_order = topology.nodes().collect();
        Ok(SystemConfig {
            topology,
            program,
            cells,
            channels,
            environment: Multiset::new(),
            step_index: 0,
            level_table: None,
            display_order,
        })
    }

    /// Attaches a level table, used for column order and the default step
    /// budget. Columns become: nodes outside the table first (by id), then
    /// table nodes by level and id.
    pub fn attach_level_table(&mut self, table: LevelTable) -> Result<(), EngineError> {
        let nodes = self.topology.node_count();
        if table.node_count() > nodes {
            return Err(EngineError::LevelTableTooLarge { table: table.node_count(), nodes });
        }
        let mut order: Vec<NodeId> = (table.node_count() + 1..=nodes).collect();
        order.extend(table.level_order());
        self.display_order = order;
        self.level_table = Some(table);
        Ok(())
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn program(&self) -> &RuleProgram {
        &self.program
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn cell(&self, node: NodeId) -> &Cell {
        &self.cells[node - 1]
    }

    pub fn channels(&self) -> Option<&ChannelPolicy> {
        self.channels.as_ref()
    }

    pub fn environment(&self) -> &Multiset {
        &self.environment
    }

    pub fn step_index(&self) -> u64 {
        self.step_index
    }

    pub fn level_table(&self) -> Option<&LevelTable> {
        self.level_table.as_ref()
    }

    pub fn display_order(&self) -> &[NodeId] {
        &self.display_order
    }

    /// Static neighbors plus the dynamic channel arcs present in the current
    /// configuration.
    pub fn effective_neighbors(&self, node: NodeId) -> BTreeSet<NodeId> {
        let mut out = self
            .topology
            .neighbors(node)
            .expect("node in range")
            .clone();
        let Some(policy) = &self.channels else {
            return out;
        };
        let holds_anchor = |c: &Cell| c.contents.count(policy.anchor) > 0;
        let holds_endpoint = |c: &Cell| c.contents.iter().any(|(s, _)| policy.is_endpoint(s));
        let me = self.cell(node);
        if holds_anchor(me) {
            out.extend(
                self.topology
                    .nodes()
                    .filter(|&t| t != node && holds_endpoint(self.cell(t))),
            );
        }
        if holds_endpoint(me) {
            out.extend(
                self.topology
                    .nodes()
                    .filter(|&a| a != node && holds_anchor(self.cell(a))),
            );
        }
        out
    }

    fn destinations(&self, node: NodeId, destination: Destination) -> Vec<NodeId> {
        let t = &self.topology;
        match destination {
            Destination::Here => vec![node],
            Destination::Go => self.effective_neighbors(node).into_iter().collect(),
            Destination::Up => t.parents(node).expect("in range").iter().copied().collect(),
            Destination::Down => t.children(node).expect("in range").iter().copied().collect(),
            Destination::Side => t.siblings(node).expect("in range").into_iter().collect(),
            Destination::Out => Vec::new(),
        }
    }

    /// One synchronous step: every cell evolves against the step-start
    /// snapshot, then all emissions are delivered at once.
    pub fn step(&mut self) -> Result<StepReport, EngineError> {
        let n = self.cells.len();
        let mut outcomes = Vec::with_capacity(n);
        for (i, cell) in self.cells.iter().enumerate() {
            let outcome = self
                .program
                .apply(cell.state, &cell.contents)
                .map_err(|source| EngineError::Rule { cell: i + 1, source })?;
            outcomes.push(outcome);
        }

        let mut delivered = vec![Multiset::new(); n];
        let mut to_environment = Multiset::new();
        for (i, outcome) in outcomes.iter().enumerate() {
            let node = i + 1;
            for (&destination, emitted) in &outcome.emissions {
                if destination == Destination::Out {
                    to_environment
                        .add(emitted)
                        .map_err(|source| EngineError::Delivery { cell: node, source })?;
                    continue;
                }
                for target in self.destinations(node, destination) {
                    delivered[target - 1]
                        .add(emitted)
                        .map_err(|source| EngineError::Delivery { cell: target, source })?;
                }
            }
        }

        let mut reports = Vec::with_capacity(n);
        let mut quiescent = true;
        let mut next_cells = Vec::with_capacity(n);
        for (i, (outcome, incoming)) in outcomes.into_iter().zip(delivered).enumerate() {
            let node = i + 1;
            let mut contents = outcome
                .kept()
                .map_err(|source| EngineError::Delivery { cell: node, source })?;
            contents
                .add(&incoming)
                .map_err(|source| EngineError::Delivery { cell: node, source })?;
            if !outcome.applications.is_empty() || !incoming.is_empty() {
                quiescent = false;
            }
            next_cells.push(Cell::new(outcome.target, contents));
            reports.push(CellReport {
                applications: outcome.applications,
                target: outcome.target,
                delivered: incoming,
            });
        }
        self.environment
            .add(&to_environment)
            .map_err(|source| EngineError::Delivery { cell: 0, source })?;
        self.cells = next_cells;
        self.step_index += 1;
        Ok(StepReport {
            step: self.step_index,
            cells: reports,
            quiescent,
        })
    }

    /// Per-node canonical cell strings, indexed by node id - 1.
    pub fn render_cells(&self) -> Vec<String> {
        self.cells
            .iter()
            .map(|c| self.program.render_cell(c.state, &c.contents))
            .collect()
    }

    /// Cells in state `state`.
    pub fn nodes_in_state(&self, state: StateId) -> BTreeMap<NodeId, &Cell> {
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, c)| c.state == state)
            .map(|(i, c)| (i + 1, c))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::program::Numbering;

    fn pair(kind: TopologyKind) -> Topology {
        Topology::new(kind, 2, [(1, 2)], false).unwrap()
    }

    fn relay_program() -> RuleProgram {
        let mut p = RuleProgram::new(["a"], ["s"], Numbering::ByState).unwrap();
        let s = p.state("s").unwrap();
        p.push_rule(s, p.objects(&[("a", 1)]), s, [(p.objects(&[("a", 1)]), Destination::Go)])
            .unwrap();
        p
    }

    #[test]
    fn two_cell_relay_takes_one_step_per_hop() {
        let p = relay_program();
        let s = p.state("s").unwrap();
        let a = p.objects(&[("a", 1)]);
        let cells = vec![Cell::new(s, a.clone()), Cell::new(s, Multiset::new())];
        let mut config = SystemConfig::new(pair(TopologyKind::Tree), p, cells, None).unwrap();
        config.step().unwrap();
        assert!(config.cell(1).contents.is_empty());
        assert_eq!(config.cell(2).contents, a);
        config.step().unwrap();
        assert_eq!(config.cell(1).contents, a);
        assert!(config.cell(2).contents.is_empty());
        assert_eq!(config.step_index(), 2);
    }

    #[test]
    fn directional_targets_are_rejected_on_graphs() {
        let mut p = RuleProgram::new(["a"], ["s"], Numbering::ByState).unwrap();
        let s = p.state("s").unwrap();
        p.push_rule(s, p.objects(&[("a", 1)]), s, [(p.objects(&[("a", 1)]), Destination::Up)])
            .unwrap();
        let cells = vec![Cell::new(s, Multiset::new()); 2];
        let err = SystemConfig::new(pair(TopologyKind::Graph), p.clone(), cells.clone(), None).unwrap_err();
        assert_eq!(err, EngineError::DirectionalOnGraph);
        assert!(SystemConfig::new(pair(TopologyKind::Dag), p, cells, None).is_ok());
    }

    #[test]
    fn up_down_and_out_routing() {
        let mut p = RuleProgram::new(["a", "u", "d", "o"], ["s"], Numbering::ByState).unwrap();
        let s = p.state("s").unwrap();
        p.push_rule(
            s,
            p.objects(&[("a", 1)]),
            s,
            [
                (p.objects(&[("u", 1)]), Destination::Up),
                (p.objects(&[("d", 1)]), Destination::Down),
                (p.objects(&[("o", 1)]), Destination::Out),
            ],
        )
        .unwrap();
        // 1 -> 2 -> 3
        let t = Topology::new(TopologyKind::Dag, 3, [(1, 2), (2, 3)], false).unwrap();
        let cells = vec![
            Cell::new(s, Multiset::new()),
            Cell::new(s, p.objects(&[("a", 2)])),
            Cell::new(s, Multiset::new()),
        ];
        let mut config = SystemConfig::new(t, p.clone(), cells, None).unwrap();
        config.step().unwrap();
        assert_eq!(config.cell(1).contents, p.objects(&[("u", 2)]));
        assert_eq!(config.cell(3).contents, p.objects(&[("d", 2)]));
        assert_eq!(config.environment(), &p.objects(&[("o", 2)]));
    }

    #[test]
    fn sideways_routing_reaches_siblings_only() {
        let mut p = RuleProgram::new(["a", "x"], ["s"], Numbering::ByState).unwrap();
        let s = p.state("s").unwrap();
        p.push_rule(s, p.objects(&[("a", 1)]), s, [(p.objects(&[("x", 1)]), Destination::Side)])
            .unwrap();
        let t = Topology::new(TopologyKind::Dag, 4, [(1, 2), (1, 3), (4, 3)], false).unwrap();
        let mut cells = vec![Cell::new(s, Multiset::new()); 4];
        cells[1].contents = p.objects(&[("a", 1)]);
        let mut config = SystemConfig::new(t, p.clone(), cells, None).unwrap();
        config.step().unwrap();
        assert_eq!(config.cell(3).contents, p.objects(&[("x", 1)]));
        assert!(config.cell(1).contents.is_empty() && config.cell(4).contents.is_empty());
    }

    #[test]
    fn idle_system_is_quiescent() {
        let p = relay_program();
        let s = p.state("s").unwrap();
        let cells = vec![Cell::new(s, Multiset::new()); 2];
        let mut config = SystemConfig::new(pair(TopologyKind::Tree), p, cells, None).unwrap();
        let before = config.clone();
        let report = config.step().unwrap();
        assert!(report.quiescent);
        assert_eq!(config.cells(), before.cells());
        assert_eq!(config.step_index(), 1);
    }

    #[test]
    fn channel_policy_must_be_disjoint() {
        let p = relay_program();
        let s = p.state("s").unwrap();
        let cells = vec![Cell::new(s, Multiset::new()); 2];
        let policy = ChannelPolicy {
            anchor: Symbol(0),
            mobile: BTreeSet::from([Symbol(0)]),
            fixed: BTreeSet::new(),
        };
        let err = SystemConfig::new(pair(TopologyKind::Tree), p, cells, Some(policy)).unwrap_err();
        assert_eq!(err, EngineError::BadChannelPolicy);
    }
}
