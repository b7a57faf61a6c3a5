use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use psys_core::fixtures::{FIG1_LEVELS, FIG1_TREE, FIG2_DAG, FIG2_LEVELS, FIG3_GRAPH, FIG3_LEVELS};
use psys_core::topology::oracle::{all_pairs_distances, brute_force_counts};
use psys_core::topology::random::{random_dag, random_graph, random_tree};
use psys_core::topology::{Topology, TopologyError, TopologyKind};

fn load(text: &str) -> Topology {
    text.parse().unwrap()
}

#[test]
fn reference_level_tables_are_reproduced() {
    for (top, c, table) in [
        (FIG1_TREE, 3, FIG1_LEVELS),
        (FIG2_DAG, 6, FIG2_LEVELS),
        (FIG3_GRAPH, 1, FIG3_LEVELS),
    ] {
        assert_eq!(load(top).bfs_levels(c).unwrap().to_tsv(), table);
    }
}

#[test]
fn tree_levels_from_the_root() {
    let t = load(FIG1_TREE).bfs_levels(3).unwrap();
    assert_eq!(t.levels(), [1, 2, 0, 1, 1, 1, 2]);
    assert!(t.counts().iter().all(|&k| k == 1));
    assert_eq!(t.eccentricity(), 2);
}

#[test]
fn graph_node_six_has_four_paths() {
    let g = load(FIG3_GRAPH);
    let t = g.bfs_levels(1).unwrap();
    assert_eq!((t.level(6), t.count(6)), (3, 4));
    assert_eq!(t.predecessors(6), &[4, 5].into());
    assert_eq!((t.level(4), t.count(4)), (2, 2));
    assert_eq!(t.peers(4), &[2].into());
    assert_eq!(t.eccentricity(), 3);
    let brute = brute_force_counts(&g, 1).unwrap();
    assert_eq!(brute[6 - 1], 4);
    assert_eq!(brute[1 - 1], 1);
}

#[test]
fn dag_levels_from_an_inner_commander() {
    let t = load(FIG2_DAG).bfs_levels(6).unwrap();
    assert_eq!((t.level(1), t.count(1)), (2, 2));
    assert_eq!(t.predecessors(1), &[2, 3].into());
    assert_eq!((t.level(10), t.count(10)), (3, 1));
    assert_eq!(t.eccentricity(), 3);
}

#[test]
fn neighbor_examples() {
    assert_eq!(load(FIG1_TREE).neighbors(6).unwrap(), &[3, 7].into());
    let single = Topology::new(TopologyKind::Graph, 1, [], false).unwrap();
    assert!(single.neighbors(1).unwrap().is_empty());
    assert!(load(FIG2_DAG).neighbors(7).unwrap().contains(&8));
}

#[test]
fn build_examples() {
    let tree = Topology::new(
        TopologyKind::Tree,
        7,
        [(3, 1), (1, 2), (3, 4), (3, 5), (3, 6), (6, 7)],
        false,
    );
    assert!(tree.is_ok());
    assert_eq!(
        Topology::new(TopologyKind::Dag, 2, [(1, 2), (2, 1)], false),
        Err(TopologyError::Cycle(2, 1))
    );
    let g = Topology::new(TopologyKind::Graph, 2, [(1, 2)], false).unwrap();
    assert_eq!(g.arcs(), &[(1, 2), (2, 1)].into());
}

fn random_structure(seed: u64) -> Topology {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = (seed % 12) as usize + 1;
    match (seed / 12) % 4 {
        0 => random_tree(&mut rng, n),
        1 => random_dag(&mut rng, n, false),
        2 => random_dag(&mut rng, n, true),
        _ => random_graph(&mut rng, n, 0.3),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn bfs_agrees_with_independent_oracles(seed in any::<u64>(), pick in any::<prop::sample::Index>()) {
        let top = random_structure(seed);
        let c = pick.index(top.node_count()) + 1;
        let table = top.bfs_levels(c).unwrap();

        let brute = brute_force_counts(&top, c).unwrap();
        prop_assert_eq!(table.counts(), &brute[..]);

        let dist = all_pairs_distances(&top);
        let far = top.nodes().map(|y| dist[c - 1][y - 1].unwrap()).max().unwrap();
        prop_assert_eq!(table.eccentricity(), far);
        for y in top.nodes() {
            prop_assert_eq!(Some(table.level(y)), dist[c - 1][y - 1]);
        }

        for y in top.nodes() {
            let nbrs = top.neighbors(y).unwrap();
            prop_assert!(!nbrs.contains(&y));
            for &z in nbrs {
                prop_assert!(top.neighbors(z).unwrap().contains(&y));
            }
            prop_assert!(table.peers(y).is_disjoint(table.successors(y)));
            if y != c {
                let sum: u64 = table.predecessors(y).iter().map(|&x| table.count(x)).sum();
                prop_assert_eq!(table.count(y), sum);
            }
        }
    }
}
