use std::collections::BTreeSet;

use proptest::prelude::*;
use psys_core::dsl::parse_rules;
use psys_core::engine::{
    run, Cell, Destination, Multiset, RewriteMode, RuleProgram, RunError, StopCondition, Trace,
};
use psys_core::fixtures::{TABLE1_TRACE, TABLE2_TRACE, FIG1_TREE, FIG2_DAG};
use psys_core::fssp::{
    build_dynamic_instance, build_static_instance, dynamic_program, static_program,
};
use psys_core::topology::{Topology, TopologyKind};

fn cell_in(trace: &str, program: &RuleProgram, step: usize, column: &str) -> (String, Multiset) {
    let mut lines = trace.lines();
    let header: Vec<&str> = lines.next().unwrap().split('\t').collect();
    let col = header.iter().position(|h| *h == column).unwrap();
    let row = lines.nth(step).unwrap();
    let text = row.split('\t').nth(col).unwrap();
    let (state, contents) = program.parse_cell(text).unwrap();
    (program.state_name(state).to_string(), contents)
}

fn labels(program: &RuleProgram, uses: &[psys_core::engine::RuleUse]) -> Vec<(String, u64)> {
    uses.iter()
        .map(|u| (program.rules()[u.rule].label.clone(), u.times))
        .collect()
}

#[test]
fn sergeant_drains_four_thetas_in_one_step() {
    let p = dynamic_program();
    let (state, contents) = cell_in(TABLE1_TRACE, &p, 3, "sigma8");
    assert_eq!(p.render_cell(p.state(&state).unwrap(), &contents), "s3 alpha theta^4");

    let out = p.apply(p.state(&state).unwrap(), &contents).unwrap();
    assert_eq!(p.state_name(out.target), "s3");
    assert_eq!(labels(&p, &out.applications), vec![("6".to_string(), 4)]);
    assert!(out.emissions.is_empty());
    assert_eq!(p.render_cell(out.target, &out.kept().unwrap()), "s3 alpha");
}

#[test]
fn sergeant_sends_the_final_phi() {
    let p = dynamic_program();
    let (state, contents) = cell_in(TABLE1_TRACE, &p, 5, "sigma8");
    let out = p.apply(p.state(&state).unwrap(), &contents).unwrap();
    assert_eq!(p.state_name(out.target), "s1");
    assert_eq!(labels(&p, &out.applications), vec![("8".to_string(), 1)]);
    assert_eq!(out.emissions.get(&Destination::Go), Some(&p.objects(&[("phi", 1)])));
    let (_, next) = cell_in(TABLE1_TRACE, &p, 6, "sigma8");
    assert_eq!(out.kept().unwrap(), next);
}

#[test]
fn commander_counts_successor_d_objects() {
    let p = static_program();
    let (state, contents) = cell_in(TABLE2_TRACE, &p, 5, "sigma6");
    assert_eq!(p.render_cell(p.state(&state).unwrap(), &contents), "s4 a d^3 e^5 f");

    let out = p.apply(p.state(&state).unwrap(), &contents).unwrap();
    assert_eq!(p.state_name(out.target), "s4");
    assert_eq!(
        labels(&p, &out.applications),
        vec![("4.2".to_string(), 1), ("4.3".to_string(), 2)]
    );
    // The commander receives nothing at this step, so its next row is
    // exactly what it keeps.
    let (_, next) = cell_in(TABLE2_TRACE, &p, 6, "sigma6");
    assert_eq!(out.kept().unwrap(), next);
    assert_eq!(p.render_multiset(&next), "a d^3 e^6 f");
}

#[test]
fn commander_starts_the_second_broadcast() {
    let p = static_program();
    let (state, contents) = cell_in(TABLE2_TRACE, &p, 17, "sigma6");
    let out = p.apply(p.state(&state).unwrap(), &contents).unwrap();
    assert_eq!(p.state_name(out.target), "s7");
    assert_eq!(
        labels(&p, &out.applications),
        vec![("6.1".to_string(), 1), ("6.2".to_string(), 4)]
    );
    assert_eq!(out.emissions.get(&Destination::Go), Some(&p.objects(&[("e", 4)])));
    assert_eq!(p.render_cell(out.target, &out.kept().unwrap()), "s7 a b^4 f k");
    let (_, next) = cell_in(TABLE2_TRACE, &p, 18, "sigma6");
    assert_eq!(out.kept().unwrap(), next);
}

#[test]
fn commander_collects_nine_e_from_three_children() {
    let mut config = build_static_instance(&FIG2_DAG.parse().unwrap(), 6, &[4, 5, 6, 7, 9, 10].into())
        .unwrap()
        .config;
    let trace = run(&mut config, &StopCondition::Steps(19), None).unwrap();
    let text = trace.to_tsv(config.program());
    let lines: Vec<&str> = text.lines().collect();
    let golden: Vec<&str> = TABLE2_TRACE.lines().collect();
    assert_eq!(lines[19], golden[19]);
    assert_eq!(lines[20], golden[20]);
    let p = config.program();
    let (_, at19) = cell_in(&text, p, 19, "sigma6");
    assert_eq!(at19.count(p.symbol("e").unwrap()), 9);
}

#[test]
fn empty_cell_with_no_rules_is_identity() {
    for p in [static_program(), dynamic_program()] {
        let s0 = p.state("s0").unwrap();
        let out = p.apply(s0, &Multiset::new()).unwrap();
        assert_eq!(out.target, s0);
        assert!(out.leftover.is_empty() && out.produced_here.is_empty());
        assert!(out.emissions.is_empty() && out.applications.is_empty());
    }
}

#[test]
fn first_dynamic_step_only_touches_the_commander() {
    let mut config = build_dynamic_instance(&FIG1_TREE.parse().unwrap(), 3, &(1..=5).collect())
        .unwrap()
        .config;
    let before = config.render_cells();
    config.step().unwrap();
    let after = config.render_cells();
    let changed: Vec<usize> = (0..before.len()).filter(|&i| before[i] != after[i]).collect();
    // Index 2 is cell 3 and index 7 is the sergeant, which moves s0 -> s2.
    assert_eq!(changed, vec![2, 7]);
    assert_eq!(after[2], "s0 f theta");
}

fn table_run(dynamic: bool) -> (Trace, RuleProgram, String) {
    let instance = if dynamic {
        build_dynamic_instance(&FIG1_TREE.parse().unwrap(), 3, &(1..=5).collect()).unwrap()
    } else {
        build_static_instance(&FIG2_DAG.parse().unwrap(), 6, &[4, 5, 6, 7, 9, 10].into()).unwrap()
    };
    let trace = instance.run().unwrap();
    let text = trace.to_tsv(instance.config.program());
    (trace, instance.config.program().clone(), text)
}

#[test]
fn quiescent_runs_match_the_golden_traces() {
    let (t1, _, text1) = table_run(true);
    assert_eq!(t1.len(), 8);
    assert_eq!(text1, TABLE1_TRACE);
    let (t2, _, text2) = table_run(false);
    assert_eq!(t2.len(), 26);
    assert_eq!(text2, TABLE2_TRACE);
}

#[test]
fn short_budget_reports_non_termination() {
    let instance =
        build_static_instance(&FIG2_DAG.parse().unwrap(), 6, &[4, 5, 6, 7, 9, 10].into()).unwrap();
    let mut config = instance.config.clone();
    match run(&mut config, &StopCondition::Quiescence, Some(3)) {
        Err(RunError::NonTermination { budget, trace }) => {
            assert_eq!(budget, 3);
            assert_eq!(trace.last_step(), Some(3));
        }
        other => panic!("expected non-termination, got {other:?}"),
    }
}

#[test]
fn runs_are_deterministic() {
    let (_, _, a) = table_run(false);
    let (_, _, b) = table_run(false);
    assert_eq!(a, b);
}

#[test]
fn min_mode_applies_each_rule_once() {
    let mut p = static_program();
    p.set_mode(RewriteMode::Min);
    let s4 = p.state("s4").unwrap();
    let out = p
        .apply(s4, &p.objects(&[("a", 1), ("d", 3), ("e", 5), ("f", 1)]))
        .unwrap();
    assert_eq!(
        labels(&p, &out.applications),
        vec![("4.2".to_string(), 1), ("4.3".to_string(), 1)]
    );
}

fn doubling_system(n: usize) -> psys_core::engine::SystemConfig {
    let p = parse_rules("alphabet: a\nstates: s\ns a -> s a a\n").unwrap().program;
    let topology = Topology::new(TopologyKind::Graph, n, [], false).unwrap();
    let a = p.symbol("a").unwrap();
    let s = p.state("s").unwrap();
    let cells = (0..n)
        .map(|_| Cell::new(s, [(a, 1)].into_iter().collect()))
        .collect();
    psys_core::engine::SystemConfig::new(topology, p, cells, None).unwrap()
}

#[test]
fn max_mode_doubles_every_step() {
    let mut config = doubling_system(1);
    let a = config.program().symbol("a").unwrap();
    for t in 0..20u32 {
        assert_eq!(config.cell(1).contents.count(a), 1u64 << t);
        config.step().unwrap();
    }
}

#[test]
fn doubling_eventually_overflows_loudly() {
    let mut config = doubling_system(1);
    let err = (0..70).find_map(|_| config.step().err());
    assert!(err.is_some());
}

fn star_relay(leaves: usize) -> psys_core::engine::SystemConfig {
    let text = "alphabet: m x\nstates: s0 s1\ns0 x -> s1 m_go\ns0 m -> s1\n";
    let p = parse_rules(text).unwrap().program;
    let arcs: Vec<(usize, usize)> = (2..=leaves + 1).map(|i| (1, i)).collect();
    let topology = Topology::new(TopologyKind::Graph, leaves + 1, arcs, false).unwrap();
    let s0 = p.state("s0").unwrap();
    let x = p.symbol("x").unwrap();
    let mut cells: Vec<Cell> = (0..=leaves).map(|_| Cell::new(s0, Multiset::new())).collect();
    cells[0].contents.insert(x, 3).unwrap();
    psys_core::engine::SystemConfig::new(topology, p, cells, None).unwrap()
}

proptest! {
    #[test]
    fn every_neighbor_gets_one_copy_per_application(leaves in 1usize..8) {
        let mut config = star_relay(leaves);
        let m = config.program().symbol("m").unwrap();
        config.step().unwrap();
        for leaf in 2..=leaves + 1 {
            prop_assert_eq!(config.cell(leaf).contents.count(m), 3);
        }
        prop_assert_eq!(config.cell(1).contents.count(m), 0);
    }

    #[test]
    fn applied_rules_share_the_first_target(
        a in 0u64..4, d in 0u64..4, e in 0u64..6, c in 0u64..4, f in 0u64..2, state in 0usize..10
    ) {
        let p = static_program();
        let s = p.state(&format!("s{state}")).unwrap();
        let contents = p.objects(&[("a", a), ("d", d), ("e", e), ("c", c), ("f", f)]);
        let out = p.apply(s, &contents).unwrap();
        if let Some(first) = out.applications.first() {
            prop_assert_eq!(out.target, p.rules()[first.rule].target);
            let targets: BTreeSet<_> = out.applications.iter().map(|u| p.rules()[u.rule].target).collect();
            prop_assert_eq!(targets.len(), 1);
        } else {
            prop_assert_eq!(out.target, s);
        }
    }
}
