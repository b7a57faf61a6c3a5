//! Text format for rule programs, statechart extraction and linting.
//!
//! ```text
//! # comments run to end of line
//! mode: max
//! alphabet: a b c d
//! states: s0 s1 s2
//! firing: s2
//! s0 a -> s1 a b d_go
//! s1 b^2 -> s2
//! ```
//!
//! Rules are listed in priority order. The first token after `->` is the
//! target state; every other token is an object, optionally repeated with
//! `^n` and routed with a `_go`, `_up`, `_down`, `_side` or `_out` suffix.
//! Untagged objects stay in the cell.
//!
//! Optional headers: `numbering: state|sequential` picks the label scheme,
//! `terminal:` lists states that may lack rules, and `inputs:` lists objects
//! that can be present initially (enables the unproducible-object lint).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::engine::{Destination, Multiset, Numbering, RewriteMode, RuleProgram, StateId, Symbol};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

/// A parsed program together with its text and where each rule came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceProgram {
    pub text: String,
    pub program: RuleProgram,
    /// Source line of each rule, parallel to `program.rules()`.
    pub rule_lines: Vec<usize>,
}

#[derive(Default)]
struct Headers {
    mode: Option<RewriteMode>,
    numbering: Option<Numbering>,
    alphabet: Option<Vec<String>>,
    states: Option<Vec<String>>,
    firing: Option<(usize, String)>,
    terminal: Option<(usize, Vec<String>)>,
    inputs: Option<(usize, Vec<String>)>,
}

fn strip_comment(line: &str) -> &str {
    line.split('#').next().unwrap_or("").trim()
}

pub fn parse_rules(text: &str) -> Result<SourceProgram, ParseError> {
    let err = |line: usize, message: String| ParseError { line, message };
    let mut headers = Headers::default();
    let mut program: Option<RuleProgram> = None;
    let mut rule_lines = Vec::new();
    let mut saw_anything = false;

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = strip_comment(raw);
        if body.is_empty() {
            continue;
        }
        saw_anything = true;

        if !body.contains("->") {
            let (key, value) = body
                .split_once(':')
                .ok_or_else(|| err(line, format!("expected a header or a rule, found `{body}`")))?;
            let words: Vec<String> = value.split_whitespace().map(str::to_string).collect();
            let key = key.trim();
            if program.is_some() {
                return Err(err(line, format!("header `{key}` must come before the first rule")));
            }
            macro_rules! once {
                ($slot:expr, $value:expr) => {{
                    if $slot.is_some() {
                        return Err(err(line, format!("duplicate `{key}` header")));
                    }
                    $slot = Some($value);
                }};
            }
            match key {
                "mode" => {
                    let m = value.trim().parse::<RewriteMode>().map_err(|m| err(line, m))?;
                    once!(headers.mode, m)
                }
                "numbering" => {
                    let n = match value.trim() {
                        "state" => Numbering::ByState,
                        "sequential" => Numbering::Sequential,
                        other => {
                            return Err(err(line, format!("unknown numbering `{other}` (expected state or sequential)")))
                        }
                    };
                    once!(headers.numbering, n)
                }
                "alphabet" => once!(headers.alphabet, words),
                "states" => once!(headers.states, words),
                "firing" => {
                    if words.len() != 1 {
                        return Err(err(line, "`firing` takes exactly one state".into()));
                    }
                    once!(headers.firing, (line, words[0].clone()))
                }
                "terminal" => once!(headers.terminal, (line, words)),
                "inputs" => once!(headers.inputs, (line, words)),
                other => return Err(err(line, format!("unknown header `{other}`"))),
            }
            continue;
        }

        if program.is_none() {
            program = Some(start_program(&headers, line)?);
        }
        let p = program.as_mut().expect("initialised above");
        let (lhs_text, rhs_text) = body.split_once("->").expect("checked above");
        let mut lhs_tokens = lhs_text.split_whitespace();
        let source_name = lhs_tokens
            .next()
            .ok_or_else(|| err(line, "rule has no source state".into()))?;
        let source = p
            .state(source_name)
            .ok_or_else(|| err(line, format!("unknown state `{source_name}`")))?;
        let mut lhs = Multiset::new();
        for token in lhs_tokens {
            let (symbol, n, destination) = parse_object(p, token).map_err(|m| err(line, m))?;
            if destination != Destination::Here {
                return Err(err(line, format!("left-hand side object `{token}` cannot carry a target")));
            }
            lhs.insert(symbol, n).map_err(|e| err(line, e.to_string()))?;
        }
        if lhs.is_empty() {
            return Err(err(line, "rule has an empty left-hand side".into()));
        }
        let mut rhs_tokens = rhs_text.split_whitespace();
        let target_name = rhs_tokens
            .next()
            .ok_or_else(|| err(line, "rule has no target state".into()))?;
        let target = p
            .state(target_name)
            .ok_or_else(|| err(line, format!("unknown state `{target_name}`")))?;
        let mut productions: Vec<(Multiset, Destination)> = Vec::new();
        for token in rhs_tokens {
            let (symbol, n, destination) = parse_object(p, token).map_err(|m| err(line, m))?;
            let mut m = Multiset::new();
            m.insert(symbol, n).map_err(|e| err(line, e.to_string()))?;
            productions.push((m, destination));
        }
        p.push_rule(source, lhs, target, productions)
            .map_err(|e| err(line, e.to_string()))?;
        rule_lines.push(line);
    }

    if !saw_anything {
        return Err(err(1, "empty rule file".into()));
    }
    let program = match program {
        Some(p) => p,
        None => start_program(&headers, text.lines().count().max(1))?,
    };
    Ok(SourceProgram {
        text: text.to_string(),
        program,
        rule_lines,
    })
}

fn start_program(headers: &Headers, line: usize) -> Result<RuleProgram, ParseError> {
    let err = |line: usize, message: String| ParseError { line, message };
    let alphabet = headers
        .alphabet
        .clone()
        .ok_or_else(|| err(line, "missing `alphabet:` header before the first rule".into()))?;
    let states = headers
        .states
        .clone()
        .ok_or_else(|| err(line, "missing `states:` header before the first rule".into()))?;
    let mut p = RuleProgram::new(alphabet, states, headers.numbering.unwrap_or_default())
        .map_err(|e| err(line, e.to_string()))?;
    p.set_mode(headers.mode.unwrap_or_default());
    if let Some((l, name)) = &headers.firing {
        let s = p
            .state(name)
            .ok_or_else(|| err(*l, format!("unknown firing state `{name}`")))?;
        p.set_firing(Some(s)).map_err(|e| err(*l, e.to_string()))?;
    }
    if let Some((l, names)) = &headers.terminal {
        let states = names
            .iter()
            .map(|n| p.state(n).ok_or_else(|| err(*l, format!("unknown state `{n}`"))))
            .collect::<Result<Vec<_>, _>>()?;
        p.set_terminal(states).map_err(|e| err(*l, e.to_string()))?;
    }
    if let Some((l, names)) = &headers.inputs {
        let symbols = names
            .iter()
            .map(|n| p.symbol(n).ok_or_else(|| err(*l, format!("unknown object `{n}`"))))
            .collect::<Result<Vec<_>, _>>()?;
        p.set_inputs(Some(symbols)).map_err(|e| err(*l, e.to_string()))?;
    }
    Ok(p)
}

/// `name`, `name^n`, `name_tag` or `name^n_tag`.
fn parse_object(p: &RuleProgram, token: &str) -> Result<(Symbol, u64, Destination), String> {
    let (body, destination) = match token.split_once('_') {
        Some((body, tag)) => (
            body,
            Destination::from_tag(tag).ok_or_else(|| format!("unknown target tag `_{tag}` in `{token}`"))?,
        ),
        None => (token, Destination::Here),
    };
    let (name, n) = match body.split_once('^') {
        Some((name, n)) => {
            let n: u64 = n
                .parse()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| format!("bad multiplicity in `{token}`"))?;
            (name, n)
        }
        None => (body, 1),
    };
    let symbol = p.symbol(name).ok_or_else(|| format!("unknown object `{name}`"))?;
    Ok((symbol, n, destination))
}

fn render_objects(p: &RuleProgram, m: &Multiset, tag: Option<&str>) -> Vec<String> {
    m.iter()
        .map(|(s, n)| {
            let mut t = p.symbol_name(s).to_string();
            if n > 1 {
                t.push_str(&format!("^{n}"));
            }
            if let Some(tag) = tag {
                t.push('_');
                t.push_str(tag);
            }
            t
        })
        .collect()
}

/// Canonical text for `program`; [`parse_rules`] reads it back to an equal
/// program.
pub fn serialize(program: &RuleProgram) -> String {
    let mut out = String::new();
    out.push_str(&format!("mode: {}\n", program.mode()));
    if program.numbering() == Numbering::Sequential {
        out.push_str("numbering: sequential\n");
    }
    out.push_str(&format!("alphabet: {}\n", program.alphabet().join(" ")));
    out.push_str(&format!("states: {}\n", program.states().join(" ")));
    if let Some(f) = program.firing() {
        out.push_str(&format!("firing: {}\n", program.state_name(f)));
    }
    if !program.terminal().is_empty() {
        let names: Vec<&str> = program.terminal().iter().map(|&s| program.state_name(s)).collect();
        out.push_str(&format!("terminal: {}\n", names.join(" ")));
    }
    if let Some(inputs) = program.inputs() {
        let names: Vec<&str> = inputs.iter().map(|&s| program.symbol_name(s)).collect();
        out.push_str(&format!("inputs: {}\n", names.join(" ")));
    }
    for rule in program.rules() {
        let mut tokens = vec![program.state_name(rule.source).to_string()];
        tokens.extend(render_objects(program, &rule.lhs, None));
        tokens.push("->".into());
        tokens.push(program.state_name(rule.target).to_string());
        for (m, d) in &rule.productions {
            tokens.extend(render_objects(program, m, d.tag()));
        }
        out.push_str(&tokens.join(" "));
        out.push('\n');
    }
    out
}

/// State-transition view of a program: one arc per (source, target) pair,
/// labelled with the rules that make that transition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Statechart {
    pub states: Vec<String>,
    pub arcs: BTreeMap<(String, String), Vec<String>>,
}

pub fn extract_statechart(program: &RuleProgram) -> Statechart {
    let mut arcs: BTreeMap<(String, String), Vec<String>> = BTreeMap::new();
    for rule in program.rules() {
        arcs.entry((
            program.state_name(rule.source).to_string(),
            program.state_name(rule.target).to_string(),
        ))
        .or_default()
        .push(rule.label.clone());
    }
    Statechart {
        states: program.states().to_vec(),
        arcs,
    }
}

impl Statechart {
    pub fn arc(&self, from: &str, to: &str) -> Option<&[String]> {
        self.arcs
            .get(&(from.to_string(), to.to_string()))
            .map(Vec::as_slice)
    }

    /// States that appear on at least one arc.
    pub fn used_states(&self) -> BTreeSet<&str> {
        self.arcs
            .keys()
            .flat_map(|(a, b)| [a.as_str(), b.as_str()])
            .collect()
    }

    /// Graphviz DOT rendering.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph statechart {\n");
        for s in &self.states {
            out.push_str(&format!("  \"{s}\";\n"));
        }
        for ((from, to), labels) in &self.arcs {
            out.push_str(&format!(
                "  \"{from}\" -> \"{to}\" [label=\"{}\"];\n",
                labels.join(", ")
            ));
        }
        out.push_str("}\n");
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Diagnostic {
    /// A state with no rules that is neither terminal nor firing.
    DeadEnd { state: String },
    /// A rule needing an object that no rule produces and that is not an
    /// input.
    Unproducible { rule: String, object: String },
    /// An earlier rule with the same source and a smaller left-hand side
    /// leads elsewhere, so it can block the later rule.
    Shadowed { earlier: String, later: String },
}

impl Diagnostic {
    pub fn is_warning(&self) -> bool {
        matches!(self, Diagnostic::Shadowed { .. })
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::DeadEnd { state } => {
                write!(f, "error: state {state} has no rules and is not terminal or firing")
            }
            Diagnostic::Unproducible { rule, object } => write!(
                f,
                "error: rule {rule} needs `{object}`, which no rule produces and which is not an input"
            ),
            Diagnostic::Shadowed { earlier, later } => write!(
                f,
                "warning: rule {earlier} may block rule {later} (same source, smaller left-hand side, different target)"
            ),
        }
    }
}

pub fn lint(program: &RuleProgram) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let rules = program.rules();

    for (i, name) in program.states().iter().enumerate() {
        let s = StateId(i as u16);
        let exempt = program.firing() == Some(s) || program.terminal().contains(&s);
        if !exempt && !rules.iter().any(|r| r.source == s) {
            out.push(Diagnostic::DeadEnd { state: name.clone() });
        }
    }

    if let Some(inputs) = program.inputs() {
        let mut available: BTreeSet<Symbol> = inputs.iter().copied().collect();
        for r in rules {
            for (m, _) in &r.productions {
                available.extend(m.iter().map(|(s, _)| s));
            }
        }
        for r in rules {
            for (s, _) in r.lhs.iter() {
                if !available.contains(&s) {
                    out.push(Diagnostic::Unproducible {
                        rule: r.label.clone(),
                        object: program.symbol_name(s).to_string(),
                    });
                }
            }
        }
    }

    for (i, earlier) in rules.iter().enumerate() {
        for later in &rules[i + 1..] {
            if earlier.source == later.source
                && earlier.target != later.target
                && later.lhs.contains(&earlier.lhs)
            {
                out.push(Diagnostic::Shadowed {
                    earlier: earlier.label.clone(),
                    later: later.label.clone(),
                });
            }
        }
    }
    out
}
