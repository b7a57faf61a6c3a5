use psys_core::dsl::{extract_statechart, lint, parse_rules, serialize, Diagnostic};
use psys_core::engine::Destination;
use psys_core::fixtures::{
    DYNAMIC_AMENDED_RULES, DYNAMIC_RULES, STATIC_AMENDED_RULES, STATIC_RULES, STATIC_STATECHART,
};

const SHIPPED: [&str; 4] = [STATIC_RULES, DYNAMIC_RULES, STATIC_AMENDED_RULES, DYNAMIC_AMENDED_RULES];

#[test]
fn shipped_programs_round_trip() {
    for text in SHIPPED {
        let first = parse_rules(text).unwrap().program;
        let again = parse_rules(&serialize(&first)).unwrap().program;
        assert_eq!(first, again);
    }
}

#[test]
fn shipped_programs_have_the_expected_sizes() {
    let count = |t| parse_rules(t).unwrap().program.rules().len();
    assert_eq!(count(STATIC_RULES), 50);
    assert_eq!(count(DYNAMIC_RULES), 10);
    assert_eq!(count(STATIC_AMENDED_RULES), 51);
    assert_eq!(count(DYNAMIC_AMENDED_RULES), 11);
}

#[test]
fn printed_rules_parse_to_the_right_shape() {
    let p = parse_rules(STATIC_RULES).unwrap().program;
    let (_, r) = p.rule_by_label("0.1").unwrap();
    assert_eq!(p.state_name(r.source), "s0");
    assert_eq!(p.render_multiset(&r.lhs), "a");
    assert_eq!(p.state_name(r.target), "s1");
    assert_eq!(r.productions.len(), 2);
    assert_eq!(p.render_multiset(r.produced(Destination::Here).unwrap()), "a e");
    assert_eq!(p.render_multiset(r.produced(Destination::Go).unwrap()), "d");

    let (_, r) = p.rule_by_label("8.2").unwrap();
    assert_eq!(p.render_multiset(&r.lhs), "a f");
    assert_eq!(p.state_name(r.target), "s9");
    assert!(r.productions.is_empty());

    let d = parse_rules(DYNAMIC_RULES).unwrap().program;
    let (_, r) = d.rule_by_label("7").unwrap();
    assert_eq!(d.render_multiset(&r.lhs), "f alpha");
    assert_eq!(d.state_name(r.target), "s4");
    assert_eq!(d.render_multiset(r.produced(Destination::Here).unwrap()), "f alpha phi");
    assert_eq!(d.render_multiset(r.produced(Destination::Go).unwrap()), "phi");
}

#[test]
fn static_statechart_matches_the_fixture() {
    let p = parse_rules(STATIC_RULES).unwrap().program;
    let chart = extract_statechart(&p);
    assert_eq!(chart.to_dot(), STATIC_STATECHART);
    assert_eq!(chart.arc("s6", "s7"), Some(&["6.1".to_string(), "6.2".to_string()][..]));
    assert_eq!(chart.arc("s2", "s2"), Some(&["2.1".to_string(), "2.7".to_string()][..]));
}

#[test]
fn dynamic_statechart_has_six_states() {
    let p = parse_rules(DYNAMIC_RULES).unwrap().program;
    let chart = extract_statechart(&p);
    assert_eq!(
        chart.used_states().into_iter().collect::<Vec<_>>(),
        ["s0", "s1", "s2", "s3", "s4", "s_phi"]
    );
    assert_eq!(chart.arc("s3", "s1"), Some(&["8".to_string()][..]));
}

#[test]
fn static_lint_warns_about_the_final_countdown() {
    let diags = lint(&parse_rules(STATIC_RULES).unwrap().program);
    assert!(diags.iter().all(Diagnostic::is_warning));
    assert!(diags.contains(&Diagnostic::Shadowed { earlier: "8.3".into(), later: "8.4".into() }));
    assert!(lint(&parse_rules(DYNAMIC_RULES).unwrap().program).is_empty());
}

#[test]
fn unused_state_is_a_dead_end() {
    let p = parse_rules("alphabet: a\nstates: s0 s_x\nfiring: s0\n").unwrap().program;
    assert_eq!(lint(&p), vec![Diagnostic::DeadEnd { state: "s_x".into() }]);
}

#[test]
fn unknown_symbol_is_a_parse_error() {
    let e = parse_rules("alphabet: a\nstates: s0\ns0 z -> s0\n").unwrap_err();
    assert_eq!(e.line, 3);
}
