use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use super::multiset::{Multiset, MultisetError, Symbol};

/// Index into the program's state list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateId(pub u16);

/// Where a produced multiset goes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Destination {
    Here,
    Go,
    Up,
    Down,
    Side,
    Out,
}

impl Destination {
    pub const TAGGED: [Destination; 5] = [
        Destination::Go,
        Destination::Up,
        Destination::Down,
        Destination::Side,
        Destination::Out,
    ];

    /// The suffix used in rule text, `None` for `here`.
    pub fn tag(self) -> Option<&'static str> {
        match self {
            Destination::Here => None,
            Destination::Go => Some("go"),
            Destination::Up => Some("up"),
            Destination::Down => Some("down"),
            Destination::Side => Some("side"),
            Destination::Out => Some("out"),
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        Self::TAGGED.into_iter().find(|d| d.tag() == Some(tag))
    }

    /// Whether routing needs a parent/child orientation.
    pub fn is_directional(self) -> bool {
        matches!(self, Destination::Up | Destination::Down | Destination::Side)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum RewriteMode {
    /// Every applicable rule is applied as many times as its left-hand side fits.
    #[default]
    Max,
    /// Every applicable rule is applied at most once per step.
    Min,
}

impl fmt::Display for RewriteMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RewriteMode::Max => "max",
            RewriteMode::Min => "min",
        })
    }
}

impl std::str::FromStr for RewriteMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "max" => Ok(RewriteMode::Max),
            "min" => Ok(RewriteMode::Min),
            other => Err(format!("unknown rewrite mode `{other}` (expected max or min)")),
        }
    }
}

/// How rule labels are generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Numbering {
    /// `<source state index>.<ordinal among rules of that state>`, e.g. `4.2`.
    #[default]
    ByState,
    /// `1`, `2`, ... in file order.
    Sequential,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Rule {
    pub label: String,
    pub source: StateId,
    pub lhs: Multiset,
    pub target: StateId,
    /// At most one entry per destination, `here` first when present.
    pub productions: Vec<(Multiset, Destination)>,
}

impl Rule {
    pub fn produced(&self, destination: Destination) -> Option<&Multiset> {
        self.productions
            .iter()
            .find(|(_, d)| *d == destination)
            .map(|(m, _)| m)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProgramError {
    #[error("duplicate symbol `{0}` in alphabet")]
    DuplicateSymbol(String),
    #[error("duplicate state `{0}`")]
    DuplicateState(String),
    #[error("invalid object name `{0}`")]
    BadSymbolName(String),
    #[error("invalid state name `{0}`")]
    BadStateName(String),
    #[error("rule has an empty left-hand side")]
    EmptyLhs,
    #[error("state #{0} is not declared")]
    UnknownState(u16),
    #[error("symbol #{0} is not in the alphabet")]
    UnknownSymbol(u16),
    #[error("rule {label}: {source}")]
    Overflow {
        label: String,
        #[source]
        source: MultisetError,
    },
}

/// Alphabet, states and a priority-ordered rule list shared by every cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleProgram {
    alphabet: Vec<String>,
    states: Vec<String>,
    firing: Option<StateId>,
    terminal: Vec<StateId>,
    inputs: Option<Vec<Symbol>>,
    rules: Vec<Rule>,
    mode: RewriteMode,
    numbering: Numbering,
}

/// One rule's contribution to a cell step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RuleUse {
    pub rule: usize,
    pub times: u64,
}

/// Result of evolving one cell against its step-start contents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellOutcome {
    pub target: StateId,
    pub leftover: Multiset,
    pub produced_here: Multiset,
    pub emissions: BTreeMap<Destination, Multiset>,
    pub applications: Vec<RuleUse>,
}

impl CellOutcome {
    /// Contents the cell keeps for the next step, before deliveries.
    pub fn kept(&self) -> Result<Multiset, MultisetError> {
        let mut next = self.leftover.clone();
        next.add(&self.produced_here)?;
        Ok(next)
    }
}

fn valid_object_name(name: &str) -> bool {
    !name.is_empty()
        && name.chars().all(|c| c.is_alphanumeric())
        && !name.chars().next().is_some_and(|c| c.is_ascii_digit())
}

fn valid_state_name(name: &str) -> bool {
    !name.is_empty()
        && name.chars().all(|c| c.is_alphanumeric() || c == '_')
        && !name.starts_with(|c: char| c.is_ascii_digit())
}

impl RuleProgram {
    pub fn new<A, S>(alphabet: A, states: S, numbering: Numbering) -> Result<Self, ProgramError>
    where
        A: IntoIterator,
        A::Item: Into<String>,
        S: IntoIterator,
        S::Item: Into<String>,
    {
        let alphabet: Vec<String> = alphabet.into_iter().map(Into::into).collect();
        let states: Vec<String> = states.into_iter().map(Into::into).collect();
        for (i, s) in alphabet.iter().enumerate() {
            if !valid_object_name(s) {
                return Err(ProgramError::BadSymbolName(s.clone()));
            }
            if alphabet[..i].contains(s) {
                return Err(ProgramError::DuplicateSymbol(s.clone()));
            }
        }
        for (i, s) in states.iter().enumerate() {
            if !valid_state_name(s) {
                return Err(ProgramError::BadStateName(s.clone()));
            }
            if states[..i].contains(s) {
                return Err(ProgramError::DuplicateState(s.clone()));
            }
        }
        Ok(RuleProgram {
            alphabet,
            states,
            firing: None,
            terminal: Vec::new(),
            inputs: None,
            rules: Vec::new(),
            mode: RewriteMode::Max,
            numbering,
        })
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn mode(&self) -> RewriteMode {
        self.mode
    }

    pub fn set_mode(&mut self, mode: RewriteMode) {
        self.mode = mode;
    }

    pub fn numbering(&self) -> Numbering {
        self.numbering
    }

    pub fn firing(&self) -> Option<StateId> {
        self.firing
    }

    pub fn set_firing(&mut self, state: Option<StateId>) -> Result<(), ProgramError> {
        if let Some(s) = state {
            self.check_state(s)?;
        }
        self.firing = state;
        Ok(())
    }

    /// States allowed to have no outgoing rules besides the firing state.
    pub fn terminal(&self) -> &[StateId] {
        &self.terminal
    }

    pub fn set_terminal(&mut self, states: Vec<StateId>) -> Result<(), ProgramError> {
        for &s in &states {
            self.check_state(s)?;
        }
        self.terminal = states;
        Ok(())
    }

    /// Objects that may be present before the first step, if declared.
    pub fn inputs(&self) -> Option<&[Symbol]> {
        self.inputs.as_deref()
    }

    pub fn set_inputs(&mut self, inputs: Option<Vec<Symbol>>) -> Result<(), ProgramError> {
        for &s in inputs.iter().flatten() {
            self.check_symbol(s)?;
        }
        self.inputs = inputs;
        Ok(())
    }

    pub fn symbol(&self, name: &str) -> Option<Symbol> {
        self.alphabet.iter().position(|s| s == name).map(|i| Symbol(i as u16))
    }

    pub fn state(&self, name: &str) -> Option<StateId> {
        self.states.iter().position(|s| s == name).map(|i| StateId(i as u16))
    }

    pub fn symbol_name(&self, symbol: Symbol) -> &str {
        &self.alphabet[symbol.0 as usize]
    }

    pub fn state_name(&self, state: StateId) -> &str {
        &self.states[state.0 as usize]
    }

    fn check_state(&self, s: StateId) -> Result<(), ProgramError> {
        if (s.0 as usize) < self.states.len() {
            Ok(())
        } else {
            Err(ProgramError::UnknownState(s.0))
        }
    }

    fn check_symbol(&self, s: Symbol) -> Result<(), ProgramError> {
        if (s.0 as usize) < self.alphabet.len() {
            Ok(())
        } else {
            Err(ProgramError::UnknownSymbol(s.0))
        }
    }

    /// Appends a rule at the lowest priority so far. Productions are merged
    /// per destination; empty ones are dropped.
    pub fn push_rule(
        &mut self,
        source: StateId,
        lhs: Multiset,
        target: StateId,
        productions: impl IntoIterator<Item = (Multiset, Destination)>,
    ) -> Result<&Rule, ProgramError> {
        self.check_state(source)?;
        self.check_state(target)?;
        if lhs.is_empty() {
            return Err(ProgramError::EmptyLhs);
        }
        for (s, _) in lhs.iter() {
            self.check_symbol(s)?;
        }
        let mut merged: Vec<(Multiset, Destination)> = Vec::new();
        for (m, d) in productions {
            for (s, _) in m.iter() {
                self.check_symbol(s)?;
            }
            if m.is_empty() {
                continue;
            }
            match merged.iter_mut().find(|(_, dd)| *dd == d) {
                Some((acc, _)) => acc.add(&m).map_err(|source| ProgramError::Overflow {
                    label: String::new(),
                    source,
                })?,
                None => merged.push((m, d)),
            }
        }
        merged.sort_by_key(|(_, d)| *d != Destination::Here);
        let label = match self.numbering {
            Numbering::Sequential => (self.rules.len() + 1).to_string(),
            Numbering::ByState => {
                let ordinal = self.rules.iter().filter(|r| r.source == source).count() + 1;
                format!("{}.{}", source.0, ordinal)
            }
        };
        self.rules.push(Rule {
            label,
            source,
            lhs,
            target,
            productions: merged,
        });
        Ok(self.rules.last().expect("just pushed"))
    }

    /// Drops one rule, keeping every other rule's label.
    pub fn remove_rule(&mut self, index: usize) -> Rule {
        self.rules.remove(index)
    }

    pub fn rule_by_label(&self, label: &str) -> Option<(usize, &Rule)> {
        self.rules.iter().enumerate().find(|(_, r)| r.label == label)
    }

    /// Whether any rule sends objects up, down or sideways.
    pub fn uses_directional_targets(&self) -> bool {
        self.rules
            .iter()
            .any(|r| r.productions.iter().any(|(_, d)| d.is_directional()))
    }

    /// Evolves one cell under weak priorities. Rules are scanned in order;
    /// the first one that applies commits the target state and later rules
    /// only apply if they lead to the same state. Objects produced in this
    /// step are not visible to any rule until the next step.
    pub fn apply(&self, state: StateId, contents: &Multiset) -> Result<CellOutcome, ProgramError> {
        let mut available = contents.clone();
        let mut committed: Option<StateId> = None;
        let mut produced_here = Multiset::new();
        let mut emissions: BTreeMap<Destination, Multiset> = BTreeMap::new();
        let mut applications = Vec::new();

        for (index, rule) in self.rules.iter().enumerate() {
            if rule.source != state {
                continue;
            }
            if committed.is_some_and(|t| t != rule.target) {
                continue;
            }
            let fits = available.multiplicity_of(&rule.lhs);
            let times = match self.mode {
                RewriteMode::Max => fits,
                RewriteMode::Min => fits.min(1),
            };
            if times == 0 {
                continue;
            }
            let overflow = |source| ProgramError::Overflow {
                label: rule.label.clone(),
                source,
            };
            available
                .subtract_scaled(&rule.lhs, times)
                .map_err(overflow)?;
            for (m, d) in &rule.productions {
                match d {
                    Destination::Here => produced_here.add_scaled(m, times).map_err(overflow)?,
                    _ => emissions
                        .entry(*d)
                        .or_default()
                        .add_scaled(m, times)
                        .map_err(overflow)?,
                }
            }
            committed.get_or_insert(rule.target);
            applications.push(RuleUse { rule: index, times });
        }

        Ok(CellOutcome {
            target: committed.unwrap_or(state),
            leftover: available,
            produced_here,
            emissions,
            applications,
        })
    }

    /// `state obj obj^n ...` with objects in alphabet order.
    pub fn render_cell(&self, state: StateId, contents: &Multiset) -> String {
        let mut out = self.state_name(state).to_string();
        for (s, n) in contents.iter() {
            out.push(' ');
            out.push_str(self.symbol_name(s));
            if n > 1 {
                out.push('^');
                out.push_str(&n.to_string());
            }
        }
        out
    }

    pub fn render_multiset(&self, contents: &Multiset) -> String {
        contents
            .iter()
            .map(|(s, n)| {
                if n > 1 {
                    format!("{}^{n}", self.symbol_name(s))
                } else {
                    self.symbol_name(s).to_string()
                }
            })
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Parses the output of [`RuleProgram::render_cell`]. Repeated objects
    /// accumulate, so `a a^2` reads as three copies of `a`.
    pub fn parse_cell(&self, text: &str) -> Result<(StateId, Multiset), String> {
        let mut tokens = text.split_whitespace();
        let state_name = tokens.next().ok_or("empty cell")?;
        let state = self
            .state(state_name)
            .ok_or_else(|| format!("unknown state `{state_name}`"))?;
        let mut contents = Multiset::new();
        for token in tokens {
            let (name, n) = match token.split_once('^') {
                Some((name, n)) => (
                    name,
                    n.parse::<u64>()
                        .map_err(|_| format!("bad multiplicity in `{token}`"))?,
                ),
                None => (token, 1),
            };
            let s = self
                .symbol(name)
                .ok_or_else(|| format!("unknown object `{name}`"))?;
            contents.insert(s, n).map_err(|e| e.to_string())?;
        }
        Ok((state, contents))
    }

    /// Builds a multiset from object names; panics on unknown names.
    pub fn objects(&self, names: &[(&str, u64)]) -> Multiset {
        names
            .iter()
            .map(|&(name, n)| {
                let s = self
                    .symbol(name)
                    .unwrap_or_else(|| panic!("unknown object `{name}`"));
                (s, n)
            })
            .collect()
    }
}
