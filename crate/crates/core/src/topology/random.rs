//! Seeded generators for connected trees, layered dags and graphs.

use rand::seq::SliceRandom;
use rand::Rng;

use super::{NodeId, Topology, TopologyKind};

/// A random rooted tree on `n` nodes with shuffled labels.
pub fn random_tree<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Topology {
    let labels = shuffled_labels(rng, n);
    let arcs = (1..n).map(|i| {
        let parent = rng.gen_range(0..i);
        (labels[parent], labels[i])
    });
    let arcs: Vec<_> = arcs.collect();
    Topology::new(TopologyKind::Tree, n, arcs, false).expect("generated tree is valid")
}

/// A random layered dag on `n` nodes. Every node below the first layer gets
/// at least one parent in the layer just above it, each layer is joined to
/// the ones above it, and extra arcs between
/// adjacent or skipped layers create multiple level-preserving paths. Arc
/// directions follow layer order, so the result is acyclic.
pub fn random_dag<R: Rng + ?Sized>(rng: &mut R, n: usize, include_siblings: bool) -> Topology {
    let labels = shuffled_labels(rng, n);
    let mut layers: Vec<Vec<usize>> = Vec::new();
    let mut next = 0;
    while next < n {
        let room = if next == 0 { n.saturating_sub(1).max(1) } else { n - next };
        let width = rng.gen_range(1..=3).min(room);
        layers.push((next..next + width).collect());
        next += width;
    }
    let mut arcs: Vec<(usize, usize)> = Vec::new();
    let mut component: Vec<usize> = (0..n).collect();
    for depth in 1..layers.len() {
        let above = &layers[depth - 1];
        for &node in &layers[depth] {
            let first = *above.choose(rng).expect("layers are non-empty");
            arcs.push((first, node));
            for &other in above {
                if other != first && rng.gen_bool(0.4) {
                    arcs.push((other, node));
                }
            }
            if depth >= 2 && rng.gen_bool(0.15) {
                let skip = rng.gen_range(0..depth - 1);
                let from = *layers[skip].choose(rng).expect("layers are non-empty");
                arcs.push((from, node));
            }
        }
        for &(u, v) in &arcs {
            union(&mut component, u, v);
        }
        let anchor = layers[depth][0];
        for &parent in above {
            if find(&mut component, parent) != find(&mut component, anchor) {
                arcs.push((parent, anchor));
                union(&mut component, parent, anchor);
            }
        }
    }
    let mut arcs: Vec<(NodeId, NodeId)> = arcs.into_iter().map(|(u, v)| (labels[u], labels[v])).collect();
    // reverse every arc inside a prefix of layers so sources are not confined
    // to the first layer; arcs leaving the prefix keep their direction
    if layers.len() > 2 && rng.gen_bool(0.5) {
        let cut = rng.gen_range(1..layers.len());
        let boundary: usize = layers[..cut].iter().map(Vec::len).sum();
        for arc in &mut arcs {
            let (u, v) = *arc;
            let (iu, iv) = (position(&labels, u), position(&labels, v));
            if iu < boundary && iv < boundary {
                *arc = (v, u);
            }
        }
    }
    Topology::new(TopologyKind::Dag, n, arcs, include_siblings).expect("generated dag is valid")
}

/// A random connected symmetric graph: a random spanning tree plus extra
/// edges drawn with probability `density`.
pub fn random_graph<R: Rng + ?Sized>(rng: &mut R, n: usize, density: f64) -> Topology {
    let labels = shuffled_labels(rng, n);
    let mut edges = Vec::new();
    for i in 1..n {
        let j = rng.gen_range(0..i);
        edges.push((labels[j], labels[i]));
    }
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(density) {
                edges.push((labels[i], labels[j]));
            }
        }
    }
    Topology::new(TopologyKind::Graph, n, edges, false).expect("generated graph is valid")
}

fn find(component: &mut [usize], x: usize) -> usize {
    let mut root = x;
    while component[root] != root {
        root = component[root];
    }
    component[x] = root;
    root
}

fn union(component: &mut [usize], a: usize, b: usize) {
    let (ra, rb) = (find(component, a), find(component, b));
    component[ra] = rb;
}

fn shuffled_labels<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<NodeId> {
    let mut labels: Vec<NodeId> = (1..=n).collect();
    labels.shuffle(rng);
    labels
}

fn position(labels: &[NodeId], node: NodeId) -> usize {
    labels.iter().position(|&l| l == node).expect("label exists")
}
