use std::fmt;

use super::{FsspInstance, Variant};
use crate::engine::{Cell, Multiset, RuleProgram, Trace};
use crate::topology::NodeId;

/// Outcome of checking a trace against the synchronization contract.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerificationReport {
    /// Some recorded step has every squad cell in the firing state.
    pub fired: bool,
    /// The first such step.
    pub firing_step: Option<u64>,
    /// Every squad cell enters the firing state exactly at `firing_step`.
    pub simultaneous: bool,
    /// No cell is in the firing state before `firing_step`.
    pub first_time: bool,
    /// Non-squad cells never fire and end in their rest state.
    pub non_squad_clean: bool,
    /// Static: every cell is empty at the firing step. Dynamic: only the
    /// channel endpoints remain (`alpha` at the sergeant, `omega` at squad
    /// cells) and every other non-squad cell is empty.
    pub empty_at_end: bool,
    pub formula_match: bool,
    /// Per-cell phase boundary checks; empty for the dynamic variant.
    pub phase_checks: Vec<PhaseCheck>,
    pub failures: Vec<Failure>,
}

impl VerificationReport {
    /// Every check holds, including the dynamic residue check.
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    /// Every check holds except possibly leftover objects after a dynamic
    /// run. The dynamic program only promises that non-squad cells end in
    /// `s1`; a commander outside the squad keeps the `phi` that the
    /// sergeant sends it.
    pub fn contract_holds(&self, variant: Variant) -> bool {
        self.failures
            .iter()
            .all(|f| variant == Variant::Dynamic && f.check == Check::Residue)
    }

    /// Failures that break [`VerificationReport::contract_holds`].
    pub fn contract_failures(&self, variant: Variant) -> Vec<&Failure> {
        self.failures
            .iter()
            .filter(|f| !(variant == Variant::Dynamic && f.check == Check::Residue))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Check {
    Fired,
    Simultaneous,
    FirstTime,
    Formula,
    NonSquad,
    Residue,
    Phase,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Check::Fired => "fired",
            Check::Simultaneous => "simultaneity",
            Check::FirstTime => "first time",
            Check::Formula => "formula",
            Check::NonSquad => "non-squad",
            Check::Residue => "residue",
            Check::Phase => "phase",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    pub check: Check,
    pub message: String,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.check, self.message)
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let step = self
            .firing_step
            .map_or_else(|| "none".to_string(), |s| s.to_string());
        writeln!(f, "fired: {} (step {step})", self.fired)?;
        writeln!(f, "simultaneous: {}", self.simultaneous)?;
        writeln!(f, "first_time: {}", self.first_time)?;
        writeln!(f, "non_squad_clean: {}", self.non_squad_clean)?;
        writeln!(f, "empty_at_end: {}", self.empty_at_end)?;
        writeln!(f, "formula_match: {}", self.formula_match)?;
        if !self.phase_checks.is_empty() {
            let ok = self.phase_checks.iter().filter(|c| c.ok()).count();
            writeln!(f, "phase_checks: {ok}/{} passed", self.phase_checks.len())?;
        }
        for failure in &self.failures {
            writeln!(f, "FAIL {failure}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Phase {
    Broadcast,
    Convergecast,
    Rebroadcast,
    Fire,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Broadcast => "I",
            Phase::Convergecast => "II",
            Phase::Rebroadcast => "III",
            Phase::Fire => "IV",
        })
    }
}

/// Expected versus recorded content of one cell at one phase boundary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhaseCheck {
    pub node: NodeId,
    pub phase: Phase,
    pub step: u64,
    pub expected: String,
    /// `None` when the trace has no row for `step`.
    pub actual: Option<String>,
}

impl PhaseCheck {
    pub fn ok(&self) -> bool {
        self.actual.as_deref() == Some(self.expected.as_str())
    }
}

impl fmt::Display for PhaseCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "phase {} cell {} step {}: expected `{}`, found `{}`",
            self.phase,
            self.node,
            self.step,
            self.expected,
            self.actual.as_deref().unwrap_or("<no row>")
        )
    }
}

fn cells_at(trace: &Trace, step: u64) -> Option<&[Cell]> {
    trace.row(step)
}

/// Checks `trace` against the synchronization contract of `instance`.
/// Phase boundary checks are included for the static variant.
pub fn verify_run(trace: &Trace, instance: &FsspInstance) -> VerificationReport {
    let program = instance.config.program();
    let firing = instance.firing_state();
    let rest = instance.rest_state();
    let expected = instance.expected_firing_step();
    let n = instance.cell_count();
    let mut failures = Vec::new();
    let fail = |check, message| Failure { check, message };

    let in_firing = |row: &[Cell], node: NodeId| row[node - 1].state == firing;
    let steps = || (0..trace.len() as u64).map(|i| trace.first_step() + i);

    let firing_step = steps().find(|&s| {
        let row = cells_at(trace, s).expect("step in range");
        instance.squad.iter().all(|&x| in_firing(row, x))
    });
    let fired = firing_step.is_some();
    if !fired {
        failures.push(fail(
            Check::Fired,
            format!("squad cells never all in {} together", program.state_name(firing)),
        ));
    }

    let mut simultaneous = fired;
    let mut first_time = fired;
    if let Some(f) = firing_step {
        for &x in &instance.squad {
            let first = steps()
                .find(|&s| in_firing(cells_at(trace, s).expect("step in range"), x))
                .expect("fired implies entry");
            if first != f {
                simultaneous = false;
                failures.push(fail(Check::Simultaneous, format!(
                    "cell {x} enters the firing state at step {first}, squad fires at {f}"
                )));
            }
        }
        for s in steps().take_while(|&s| s < f) {
            let row = cells_at(trace, s).expect("step in range");
            if let Some(x) = (1..=n).find(|&x| in_firing(row, x)) {
                first_time = false;
                failures.push(fail(
                    Check::FirstTime,
                    format!("cell {x} is in the firing state at step {s} < {f}"),
                ));
                break;
            }
        }
    }

    let formula_match = firing_step == Some(expected);
    if fired && !formula_match {
        failures.push(fail(
            Check::Formula,
            format!("fired at step {}, expected {expected}", firing_step.expect("fired")),
        ));
    }

    let mut non_squad_clean = true;
    let non_squad: Vec<NodeId> = (1..=n).filter(|x| !instance.squad.contains(x)).collect();
    for &x in &non_squad {
        if let Some(s) = steps().find(|&s| in_firing(cells_at(trace, s).expect("step in range"), x)) {
            non_squad_clean = false;
            failures.push(fail(
                Check::NonSquad,
                format!("cell {x} enters the firing state at step {s}"),
            ));
        }
    }
    if let Some(last) = trace.rows().last() {
        for &x in &non_squad {
            if Some(last[x - 1].state) != rest {
                non_squad_clean = false;
                failures.push(fail(
                    Check::NonSquad,
                    format!("cell {x} ends in {}", program.state_name(last[x - 1].state)),
                ));
            }
        }
    }

    let mut empty_at_end = fired;
    if let Some(row) = firing_step.and_then(|f| cells_at(trace, f)) {
        for x in 1..=n {
            let leftover = residue(instance, program, x, &row[x - 1].contents);
            if !leftover.is_empty() {
                empty_at_end = false;
                failures.push(fail(
                    Check::Residue,
                    format!(
                        "cell {x} holds `{}` at the firing step",
                        program.render_multiset(&leftover)
                    ),
                ));
            }
            if instance.variant == Variant::Dynamic
                && !instance.squad.contains(&x)
                && Some(x) != instance.sergeant
                && Some(row[x - 1].state) != rest
            {
                empty_at_end = false;
                failures.push(fail(
                    Check::Residue,
                    format!("cell {x} is in {} at the firing step", program.state_name(row[x - 1].state)),
                ));
            }
        }
    }

    let phase_checks = match instance.variant {
        Variant::Static => verify_phase_postconditions(trace, instance),
        Variant::Dynamic => Vec::new(),
    };
    failures.extend(
        phase_checks
            .iter()
            .filter(|c| !c.ok())
            .map(|c| fail(Check::Phase, c.to_string())),
    );

    VerificationReport {
        fired,
        firing_step,
        simultaneous,
        first_time,
        non_squad_clean,
        empty_at_end,
        formula_match,
        phase_checks,
        failures,
    }
}

/// Objects in `contents` that are not allowed to remain at the firing step.
fn residue(instance: &FsspInstance, program: &RuleProgram, node: NodeId, contents: &Multiset) -> Multiset {
    let mut left = contents.clone();
    if instance.variant == Variant::Dynamic {
        if Some(node) == instance.sergeant {
            if let Some(alpha) = program.symbol("alpha") {
                left.remove(alpha, left.count(alpha)).expect("count held");
            }
        }
        if instance.squad.contains(&node) {
            if let Some(omega) = program.symbol("omega") {
                left.remove(omega, left.count(omega)).expect("count held");
            }
        }
    }
    left
}

/// Per-cell checks at the four phase boundaries of the static program.
/// With level `L`, path count `K` and eccentricity `E`:
///
/// * step `L + 2`: `s2` with `a^K k^K l^u d^v`, `e^2` at the commander and
///   `f` in the squad, where `u` sums the counts of the cell's peers and `v`
///   those of its successors;
/// * step `5E + 2`: `s6` with `a^K`, `e^(E+2)` at the commander, `f` in the
///   squad;
/// * step `5E + 5 + L`: `s8` with `a^K b^((E+1-L)K)`, `f` in the squad;
/// * step `6E + 7`: `s9` in the squad, `s0` elsewhere, and empty.
///
/// Returns an empty list for the dynamic variant.
pub fn verify_phase_postconditions(trace: &Trace, instance: &FsspInstance) -> Vec<PhaseCheck> {
    if instance.variant != Variant::Static {
        return Vec::new();
    }
    let program = instance.config.program();
    let table = &instance.level_table;
    let e = table.eccentricity() as u64;
    let sym = |name: &str| program.symbol(name).expect("static alphabet");
    let st = |name: &str| program.state(name).expect("static states");

    let mut checks = Vec::new();
    for x in 1..=table.node_count() {
        let level = table.level(x) as u64;
        let k = table.count(x);
        let is_commander = x == table.commander();
        let in_squad = instance.squad.contains(&x);
        let sum = |nodes: &std::collections::BTreeSet<NodeId>| nodes.iter().map(|&y| table.count(y)).sum::<u64>();

        let objects = |pairs: &[(&str, u64)]| {
            let mut m = Multiset::new();
            for &(name, count) in pairs {
                m.insert(sym(name), count).expect("phase counts fit");
            }
            if in_squad {
                m.insert(sym("f"), 1).expect("phase counts fit");
            }
            m
        };

        let phase1 = objects(&[
            ("a", k),
            ("k", k),
            ("l", sum(table.peers(x))),
            ("d", sum(table.successors(x))),
            ("e", if is_commander { 2 } else { 0 }),
        ]);
        let phase2 = objects(&[("a", k), ("e", if is_commander { e + 2 } else { 0 })]);
        let phase3 = objects(&[("a", k), ("b", (e + 1 - level) * k)]);
        let fire_state = if in_squad { st("s9") } else { st("s0") };

        let expectations = [
            (Phase::Broadcast, level + 2, st("s2"), phase1),
            (Phase::Convergecast, 5 * e + 2, st("s6"), phase2),
            (Phase::Rebroadcast, 5 * e + 5 + level, st("s8"), phase3),
            (Phase::Fire, 6 * e + 7, fire_state, Multiset::new()),
        ];
        for (phase, step, state, contents) in expectations {
            let actual = trace
                .row(step)
                .map(|row| program.render_cell(row[x - 1].state, &row[x - 1].contents));
            checks.push(PhaseCheck {
                node: x,
                phase,
                step,
                expected: program.render_cell(state, &contents),
                actual,
            });
        }
    }
    checks
}
