//! Cell structures: rooted trees, dags and symmetric digraphs.
//!
//! Nodes are numbered `1..=node_count`. Every structure is weakly connected;
//! this is checked when the topology is built.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub mod oracle;
pub mod random;

/// A cell identifier, 1-based.
pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TopologyKind {
    Tree,
    Dag,
    Graph,
}

impl fmt::Display for TopologyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TopologyKind::Tree => "tree",
            TopologyKind::Dag => "dag",
            TopologyKind::Graph => "graph",
        })
    }
}

impl FromStr for TopologyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tree" => Ok(TopologyKind::Tree),
            "dag" => Ok(TopologyKind::Dag),
            "graph" => Ok(TopologyKind::Graph),
            other => Err(format!("unknown topology kind `{other}` (expected tree, dag or graph)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TopologyError {
    #[error("a topology needs at least one node")]
    Empty,
    #[error("arc {0}->{1} has an endpoint outside 1..={2}")]
    ArcOutOfRange(NodeId, NodeId, usize),
    #[error("node {0} is outside 1..={1}")]
    NodeOutOfRange(NodeId, usize),
    #[error("arc {0}->{1} closes a cycle")]
    Cycle(NodeId, NodeId),
    #[error("self-loop on node {0}")]
    SelfLoop(NodeId),
    #[error("tree node {node} has several parents ({parents:?})")]
    MultipleParents { node: NodeId, parents: Vec<NodeId> },
    #[error("tree has several roots ({0:?})")]
    MultipleRoots(Vec<NodeId>),
    #[error("node {0} is not connected to node 1")]
    Disconnected(NodeId),
}

/// A validated cell structure plus the `Neighbor` relation it induces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    kind: TopologyKind,
    node_count: usize,
    arcs: BTreeSet<(NodeId, NodeId)>,
    include_siblings: bool,
    parents: Vec<BTreeSet<NodeId>>,
    children: Vec<BTreeSet<NodeId>>,
    neighbors: Vec<BTreeSet<NodeId>>,
}

impl Topology {
    /// Validates and builds a structure. For [`TopologyKind::Graph`] the
    /// stored arc set is the symmetric closure of `arcs`.
    pub fn new<I>(
        kind: TopologyKind,
        node_count: usize,
        arcs: I,
        include_siblings: bool,
    ) -> Result<Self, TopologyError>
    where
        I: IntoIterator<Item = (NodeId, NodeId)>,
    {
        if node_count == 0 {
            return Err(TopologyError::Empty);
        }
        let mut set = BTreeSet::new();
        for (u, v) in arcs {
            if u == 0 || v == 0 || u > node_count || v > node_count {
                return Err(TopologyError::ArcOutOfRange(u, v, node_count));
            }
            if u == v {
                return Err(match kind {
                    TopologyKind::Graph => TopologyError::SelfLoop(u),
                    _ => TopologyError::Cycle(u, v),
                });
            }
            set.insert((u, v));
            if kind == TopologyKind::Graph {
                set.insert((v, u));
            }
        }

        let mut parents = vec![BTreeSet::new(); node_count];
        let mut children = vec![BTreeSet::new(); node_count];
        for &(u, v) in &set {
            children[u - 1].insert(v);
            parents[v - 1].insert(u);
        }

        match kind {
            TopologyKind::Tree => {
                check_acyclic(node_count, &children)?;
                check_tree_parents(&parents)?;
            }
            TopologyKind::Dag => check_acyclic(node_count, &children)?,
            TopologyKind::Graph => {}
        }

        let neighbors = (0..node_count)
            .map(|i| {
                let node = i + 1;
                let mut out: BTreeSet<NodeId> = children[i].union(&parents[i]).copied().collect();
                if kind == TopologyKind::Dag && include_siblings {
                    for &p in &parents[i] {
                        out.extend(children[p - 1].iter().copied());
                    }
                }
                out.remove(&node);
                out
            })
            .collect::<Vec<_>>();

        check_connected(&neighbors)?;

        Ok(Topology {
            kind,
            node_count,
            arcs: set,
            include_siblings: include_siblings && kind == TopologyKind::Dag,
            parents,
            children,
            neighbors,
        })
    }

    pub fn kind(&self) -> TopologyKind {
        self.kind
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        1..=self.node_count
    }

    pub fn arcs(&self) -> &BTreeSet<(NodeId, NodeId)> {
        &self.arcs
    }

    /// Whether siblings count as neighbors. Only ever true for dags.
    pub fn include_siblings(&self) -> bool {
        self.include_siblings
    }

    pub fn contains(&self, node: NodeId) -> bool {
        node >= 1 && node <= self.node_count
    }

    fn index(&self, node: NodeId) -> Result<usize, TopologyError> {
        if self.contains(node) {
            Ok(node - 1)
        } else {
            Err(TopologyError::NodeOutOfRange(node, self.node_count))
        }
    }

    /// The `Neighbor` relation: parent and children for trees, parents and
    /// children (plus siblings when enabled) for dags, adjacency for graphs.
    pub fn neighbors(&self, node: NodeId) -> Result<&BTreeSet<NodeId>, TopologyError> {
        Ok(&self.neighbors[self.index(node)?])
    }

    pub fn parents(&self, node: NodeId) -> Result<&BTreeSet<NodeId>, TopologyError> {
        Ok(&self.parents[self.index(node)?])
    }

    pub fn children(&self, node: NodeId) -> Result<&BTreeSet<NodeId>, TopologyError> {
        Ok(&self.children[self.index(node)?])
    }

    /// Children of the node's parents, excluding the node itself.
    pub fn siblings(&self, node: NodeId) -> Result<BTreeSet<NodeId>, TopologyError> {
        let i = self.index(node)?;
        let mut out = BTreeSet::new();
        for &p in &self.parents[i] {
            out.extend(self.children[p - 1].iter().copied());
        }
        out.remove(&node);
        Ok(out)
    }

    /// Adds a fresh node `node_count + 1` linked to `target`: one arc from the
    /// new node for trees and dags, a symmetric pair for graphs. A tree turns
    /// into a dag since `target` may end up with two parents.
    pub fn with_linked_node(&self, target: NodeId) -> Result<Topology, TopologyError> {
        self.index(target)?;
        let fresh = self.node_count + 1;
        let kind = match self.kind {
            TopologyKind::Tree | TopologyKind::Dag => TopologyKind::Dag,
            TopologyKind::Graph => TopologyKind::Graph,
        };
        let arcs = self.arcs.iter().copied().chain(std::iter::once((fresh, target)));
        Topology::new(kind, fresh, arcs, self.include_siblings)
    }

    /// Renders the line-oriented topology file format.
    pub fn to_text(&self) -> String {
        let mut out = format!("kind: {}\nnodes: {}\n", self.kind, self.node_count);
        if self.kind == TopologyKind::Dag {
            out.push_str(&format!("siblings: {}\n", self.include_siblings));
        }
        for &(u, v) in &self.arcs {
            if self.kind == TopologyKind::Graph && u > v {
                continue;
            }
            out.push_str(&format!("arc: {u} {v}\n"));
        }
        out
    }

    /// Computes levels, level-preserving path counts and the induced virtual
    /// dag for `commander`, by breadth-first search in ascending node order.
    pub fn bfs_levels(&self, commander: NodeId) -> Result<LevelTable, TopologyError> {
        let c = self.index(commander)?;
        let n = self.node_count;
        let mut level: Vec<Option<usize>> = vec![None; n];
        let mut count = vec![0u64; n];
        let mut queue = VecDeque::new();
        level[c] = Some(0);
        count[c] = 1;
        queue.push_back(c);
        while let Some(x) = queue.pop_front() {
            let lx = level[x].expect("queued nodes have a level");
            for &y in &self.neighbors[x] {
                let y = y - 1;
                if level[y].is_none() {
                    level[y] = Some(lx + 1);
                    queue.push_back(y);
                }
                if level[y] == Some(lx + 1) {
                    count[y] = count[y]
                        .checked_add(count[x])
                        .expect("level-preserving path count overflows u64");
                }
            }
        }
        let levels: Vec<usize> = level
            .into_iter()
            .map(|l| l.expect("topologies are connected"))
            .collect();

        let mut predecessors = vec![BTreeSet::new(); n];
        let mut successors = vec![BTreeSet::new(); n];
        let mut peers = vec![BTreeSet::new(); n];
        for x in 0..n {
            for &y in &self.neighbors[x] {
                let ly = levels[y - 1];
                if ly == levels[x] + 1 {
                    successors[x].insert(y);
                    predecessors[y - 1].insert(x + 1);
                } else if ly == levels[x] {
                    peers[x].insert(y);
                }
            }
        }
        let eccentricity = levels.iter().copied().max().unwrap_or(0);

        Ok(LevelTable {
            commander,
            levels,
            counts: count,
            predecessors,
            successors,
            peers,
            eccentricity,
        })
    }
}

fn check_acyclic(n: usize, children: &[BTreeSet<NodeId>]) -> Result<(), TopologyError> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Open,
        Done,
    }
    let mut mark = vec![Mark::New; n];
    for start in 0..n {
        if mark[start] != Mark::New {
            continue;
        }
        // iterative DFS; the stack holds (node, remaining children)
        let mut stack: Vec<(usize, Vec<NodeId>)> =
            vec![(start, children[start].iter().copied().collect())];
        mark[start] = Mark::Open;
        while let Some((u, pending)) = stack.last_mut() {
            let u = *u;
            match pending.pop() {
                Some(v) => match mark[v - 1] {
                    Mark::Open => return Err(TopologyError::Cycle(u + 1, v)),
                    Mark::New => {
                        mark[v - 1] = Mark::Open;
                        stack.push((v - 1, children[v - 1].iter().copied().collect()));
                    }
                    Mark::Done => {}
                },
                None => {
                    mark[u] = Mark::Done;
                    stack.pop();
                }
            }
        }
    }
    Ok(())
}

fn check_tree_parents(parents: &[BTreeSet<NodeId>]) -> Result<(), TopologyError> {
    if let Some((i, p)) = parents.iter().enumerate().find(|(_, p)| p.len() > 1) {
        return Err(TopologyError::MultipleParents {
            node: i + 1,
            parents: p.iter().copied().collect(),
        });
    }
    let roots: Vec<NodeId> = parents
        .iter()
        .enumerate()
        .filter(|(_, p)| p.is_empty())
        .map(|(i, _)| i + 1)
        .collect();
    if roots.len() > 1 {
        return Err(TopologyError::MultipleRoots(roots));
    }
    Ok(())
}

fn check_connected(neighbors: &[BTreeSet<NodeId>]) -> Result<(), TopologyError> {
    let mut seen = vec![false; neighbors.len()];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    while let Some(x) = queue.pop_front() {
        for &y in &neighbors[x] {
            if !seen[y - 1] {
                seen[y - 1] = true;
                queue.push_back(y - 1);
            }
        }
    }
    match seen.iter().position(|s| !s) {
        Some(i) => Err(TopologyError::Disconnected(i + 1)),
        None => Ok(()),
    }
}

/// Levels, level-preserving path counts and the virtual dag induced by a
/// commander.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelTable {
    commander: NodeId,
    levels: Vec<usize>,
    counts: Vec<u64>,
    predecessors: Vec<BTreeSet<NodeId>>,
    successors: Vec<BTreeSet<NodeId>>,
    peers: Vec<BTreeSet<NodeId>>,
    eccentricity: usize,
}

impl LevelTable {
    pub fn commander(&self) -> NodeId {
        self.commander
    }

    pub fn node_count(&self) -> usize {
        self.levels.len()
    }

    pub fn contains(&self, node: NodeId) -> bool {
        node >= 1 && node <= self.levels.len()
    }

    pub fn level(&self, node: NodeId) -> usize {
        self.levels[node - 1]
    }

    pub fn count(&self, node: NodeId) -> u64 {
        self.counts[node - 1]
    }

    pub fn levels(&self) -> &[usize] {
        &self.levels
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn predecessors(&self, node: NodeId) -> &BTreeSet<NodeId> {
        &self.predecessors[node - 1]
    }

    pub fn successors(&self, node: NodeId) -> &BTreeSet<NodeId> {
        &self.successors[node - 1]
    }

    pub fn peers(&self, node: NodeId) -> &BTreeSet<NodeId> {
        &self.peers[node - 1]
    }

    /// Maximum level, which equals the commander's eccentricity.
    pub fn eccentricity(&self) -> usize {
        self.eccentricity
    }

    /// Nodes sorted by level, ties broken by ascending id.
    pub fn level_order(&self) -> Vec<NodeId> {
        let mut nodes: Vec<NodeId> = (1..=self.levels.len()).collect();
        nodes.sort_by_key(|&x| (self.levels[x - 1], x));
        nodes
    }

    /// Tab-separated table: node, level, predecessors, successors, peers, count.
    pub fn to_tsv(&self) -> String {
        fn set(s: &BTreeSet<NodeId>) -> String {
            if s.is_empty() {
                "-".to_string()
            } else {
                s.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
            }
        }
        let mut out = String::from("node\tlevel\tpredecessors\tsuccessors\tpeers\tcount\n");
        for x in 1..=self.levels.len() {
            out.push_str(&format!(
                "{x}\t{}\t{}\t{}\t{}\t{}\n",
                self.level(x),
                set(self.predecessors(x)),
                set(self.successors(x)),
                set(self.peers(x)),
                self.count(x)
            ));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TopologyParseError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("{0}")]
    Invalid(#[from] TopologyError),
}

impl FromStr for Topology {
    type Err = TopologyParseError;

    /// Parses `kind:`, `nodes:`, optional `siblings:` and `arc: u v` lines.
    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let syntax = |line: usize, message: String| TopologyParseError::Syntax { line, message };
        let mut kind = None;
        let mut nodes = None;
        let mut siblings = None;
        let mut arcs = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body
                .split_once(':')
                .ok_or_else(|| syntax(line, format!("expected `key: value`, found `{body}`")))?;
            let value = value.trim();
            match key.trim() {
                "kind" => {
                    if kind.is_some() {
                        return Err(syntax(line, "duplicate `kind`".into()));
                    }
                    kind = Some(value.parse::<TopologyKind>().map_err(|m| syntax(line, m))?);
                }
                "nodes" => {
                    if nodes.is_some() {
                        return Err(syntax(line, "duplicate `nodes`".into()));
                    }
                    nodes = Some(
                        value
                            .parse::<usize>()
                            .map_err(|_| syntax(line, format!("bad node count `{value}`")))?,
                    );
                }
                "siblings" => {
                    if siblings.is_some() {
                        return Err(syntax(line, "duplicate `siblings`".into()));
                    }
                    siblings = Some(match value {
                        "true" => true,
                        "false" => false,
                        _ => return Err(syntax(line, format!("bad boolean `{value}`"))),
                    });
                }
                "arc" => {
                    let ends: Vec<&str> = value.split_whitespace().collect();
                    let parse = |s: &str| {
                        s.parse::<NodeId>()
                            .map_err(|_| syntax(line, format!("bad node id `{s}`")))
                    };
                    match ends.as_slice() {
                        [u, v] => {
                            let (u, v) = (parse(u)?, parse(v)?);
                            if let Some(n) = nodes {
                                if u == 0 || v == 0 || u > n || v > n {
                                    return Err(syntax(
                                        line,
                                        format!("arc {u}->{v} has an endpoint outside 1..={n}"),
                                    ));
                                }
                            }
                            arcs.push((u, v));
                        }
                        _ => return Err(syntax(line, format!("expected `arc: u v`, found `{body}`"))),
                    }
                }
                other => return Err(syntax(line, format!("unknown key `{other}`"))),
            }
        }
        let kind = kind.ok_or_else(|| syntax(0, "missing `kind:` line".into()))?;
        let nodes = nodes.ok_or_else(|| syntax(0, "missing `nodes:` line".into()))?;
        Ok(Topology::new(kind, nodes, arcs, siblings.unwrap_or(false))?)
    }
}
