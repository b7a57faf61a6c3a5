//! Exhaustive cross-checks for [`Topology::bfs_levels`].
//!
//! Nothing here shares code with the breadth-first search: distances come
//! from Floyd-Warshall over the `Neighbor` relation and path counts from
//! explicit enumeration.

use thiserror::Error;

use super::{NodeId, Topology, TopologyError};

/// Largest structure [`brute_force_counts`] accepts.
pub const BRUTE_FORCE_LIMIT: usize = 15;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("brute-force enumeration is limited to {BRUTE_FORCE_LIMIT} nodes, got {0}")]
    TooLarge(usize),
    #[error(transparent)]
    Topology(#[from] TopologyError),
}

/// All-pairs shortest path lengths over the `Neighbor` relation, indexed
/// `[from - 1][to - 1]`. `None` marks unreachable pairs.
pub fn all_pairs_distances(topology: &Topology) -> Vec<Vec<Option<usize>>> {
    let n = topology.node_count();
    let mut dist = vec![vec![None; n]; n];
    for x in topology.nodes() {
        dist[x - 1][x - 1] = Some(0);
        for &y in topology.neighbors(x).expect("node in range") {
            dist[x - 1][y - 1] = Some(1);
        }
    }
    for k in 0..n {
        for i in 0..n {
            let Some(ik) = dist[i][k] else { continue };
            for j in 0..n {
                if let Some(kj) = dist[k][j] {
                    if dist[i][j].is_none_or(|d| ik + kj < d) {
                        dist[i][j] = Some(ik + kj);
                    }
                }
            }
        }
    }
    dist
}

/// Maximum shortest-path distance from `node` to any reachable node.
pub fn eccentricity(topology: &Topology, node: NodeId) -> Result<usize, TopologyError> {
    topology.neighbors(node)?;
    let dist = all_pairs_distances(topology);
    Ok(dist[node - 1].iter().flatten().copied().max().unwrap_or(0))
}

/// Counts, per node, the paths `c = x0, x1, ..., xk = y` with
/// `x_i ∈ Neighbor(x_{i-1})` and `dist(c, x_i) = i`, by walking every such
/// path one at a time.
pub fn brute_force_counts(topology: &Topology, commander: NodeId) -> Result<Vec<u64>, OracleError> {
    let n = topology.node_count();
    if n > BRUTE_FORCE_LIMIT {
        return Err(OracleError::TooLarge(n));
    }
    topology.neighbors(commander)?;
    let dist = all_pairs_distances(topology);
    let level = |x: NodeId| dist[commander - 1][x - 1];

    let mut counts = vec![0u64; n];
    let mut stack: Vec<(NodeId, usize)> = vec![(commander, 0)];
    while let Some((x, depth)) = stack.pop() {
        counts[x - 1] += 1;
        for &y in topology.neighbors(x)? {
            if level(y) == Some(depth + 1) {
                stack.push((y, depth + 1));
            }
        }
    }
    Ok(counts)
}
