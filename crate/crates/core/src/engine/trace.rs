use std::fmt;

use thiserror::Error;

use super::program::RuleProgram;
use super::system::{Cell, EngineError, SystemConfig};
use crate::topology::NodeId;

/// Recorded configurations, one row per step starting with the initial one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    first_step: u64,
    columns: Vec<NodeId>,
    rows: Vec<Vec<Cell>>,
}

impl Trace {
    pub fn new(first_step: u64, columns: Vec<NodeId>) -> Self {
        Trace { first_step, columns, rows: Vec::new() }
    }

    /// Appends a row of cells indexed by node id - 1.
    pub fn push(&mut self, cells: Vec<Cell>) {
        self.rows.push(cells);
    }

    pub fn first_step(&self) -> u64 {
        self.first_step
    }

    /// Node ids in column order.
    pub fn columns(&self) -> &[NodeId] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Row for `step`, if recorded.
    pub fn row(&self, step: u64) -> Option<&[Cell]> {
        let i = step.checked_sub(self.first_step)?;
        self.rows.get(usize::try_from(i).ok()?).map(Vec::as_slice)
    }

    pub fn last_step(&self) -> Option<u64> {
        (!self.rows.is_empty()).then(|| self.first_step + self.rows.len() as u64 - 1)
    }

    /// Drops every row after `step`.
    pub fn truncate_after(&mut self, step: u64) {
        let keep = step.saturating_sub(self.first_step) as usize + 1;
        self.rows.truncate(keep);
    }

    pub fn column_label(node: NodeId) -> String {
        format!("sigma{node}")
    }

    /// Tab-separated rendering: a header of cell labels, then one row per
    /// step with the step index first.
    pub fn to_tsv(&self, program: &RuleProgram) -> String {
        let mut out = String::from("step");
        for &node in &self.columns {
            out.push('\t');
            out.push_str(&Self::column_label(node));
        }
        out.push('\n');
        for (i, row) in self.rows.iter().enumerate() {
            out.push_str(&(self.first_step + i as u64).to_string());
            for &node in &self.columns {
                let cell = &row[node - 1];
                out.push('\t');
                out.push_str(&program.render_cell(cell.state, &cell.contents));
            }
            out.push('\n');
        }
        out
    }

    /// Parses [`Trace::to_tsv`] output. Columns may come in any order but
    /// must cover nodes `1..=n` exactly once, and steps must be consecutive.
    pub fn from_tsv(text: &str, program: &RuleProgram) -> Result<Trace, TraceParseError> {
        let err = |line: usize, message: String| TraceParseError { line, message };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l))
            .filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or_else(|| err(1, "empty trace".into()))?;
        let mut fields = header.split('\t');
        if fields.next().map(str::trim) != Some("step") {
            return Err(err(1, "header must start with `step`".into()));
        }
        let mut columns = Vec::new();
        for label in fields {
            let node = label
                .trim()
                .strip_prefix("sigma")
                .and_then(|n| n.parse::<NodeId>().ok())
                .ok_or_else(|| err(1, format!("bad column label `{label}`")))?;
            columns.push(node);
        }
        let n = columns.len();
        let mut sorted = columns.clone();
        sorted.sort_unstable();
        if sorted != (1..=n).collect::<Vec<_>>() {
            return Err(err(1, "columns must name nodes 1..=n exactly once".into()));
        }

        let mut trace: Option<Trace> = None;
        for (line, text) in lines {
            let fields: Vec<&str> = text.split('\t').collect();
            if fields.len() != n + 1 {
                return Err(err(line, format!("expected {} fields, found {}", n + 1, fields.len())));
            }
            let step: u64 = fields[0]
                .trim()
                .parse()
                .map_err(|_| err(line, format!("bad step index `{}`", fields[0])))?;
            let trace = trace.get_or_insert_with(|| Trace::new(step, columns.clone()));
            let expected = trace.first_step + trace.rows.len() as u64;
            if step != expected {
                return Err(err(line, format!("expected step {expected}, found {step}")));
            }
            let mut row = vec![None; n];
            for (&node, field) in columns.iter().zip(&fields[1..]) {
                let (state, contents) = program.parse_cell(field).map_err(|m| err(line, m))?;
                row[node - 1] = Some(Cell::new(state, contents));
            }
            trace.push(row.into_iter().map(|c| c.expect("every column filled")).collect());
        }
        trace.ok_or_else(|| err(1, "trace has no rows".into()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct TraceParseError {
    pub line: usize,
    pub message: String,
}

/// When [`run`] stops, besides the hard step budget.
pub enum StopCondition {
    /// Stop once a step changes nothing; that step is not recorded.
    Quiescence,
    /// Run exactly this many steps.
    Steps(u64),
    /// Stop at the first configuration (including the initial one) that
    /// satisfies the predicate.
    Predicate(Box<dyn Fn(&SystemConfig) -> bool + Send + Sync>),
}

impl fmt::Debug for StopCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StopCondition::Quiescence => f.write_str("Quiescence"),
            StopCondition::Steps(n) => write!(f, "Steps({n})"),
            StopCondition::Predicate(_) => f.write_str("Predicate(..)"),
        }
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("no stop condition reached within {budget} steps")]
    NonTermination { budget: u64, trace: Box<Trace> },
    #[error("a step budget is required when no level table is attached")]
    NoBudget,
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// Default hard budget: ten times the static synchronization time.
pub fn default_budget(config: &SystemConfig) -> Option<u64> {
    config
        .level_table()
        .map(|t| 10 * (6 * t.eccentricity() as u64 + 7))
}

/// Steps `config` until `stop` holds, recording every configuration.
/// `budget` caps the number of steps; `None` falls back to
/// [`default_budget`].
pub fn run(config: &mut SystemConfig, stop: &StopCondition, budget: Option<u64>) -> Result<Trace, RunError> {
    let mut trace = Trace::new(config.step_index(), config.display_order().to_vec());
    trace.push(config.cells().to_vec());

    if let StopCondition::Steps(n) = stop {
        for _ in 0..*n {
            config.step()?;
            trace.push(config.cells().to_vec());
        }
        return Ok(trace);
    }

    let budget = budget.or_else(|| default_budget(config)).ok_or(RunError::NoBudget)?;
    if let StopCondition::Predicate(p) = stop {
        if p(config) {
            return Ok(trace);
        }
    }
    for _ in 0..budget {
        let report = config.step()?;
        match stop {
            StopCondition::Quiescence if report.quiescent => return Ok(trace),
            StopCondition::Predicate(p) => {
                trace.push(config.cells().to_vec());
                if p(config) {
                    return Ok(trace);
                }
            }
            _ => trace.push(config.cells().to_vec()),
        }
    }
    Err(RunError::NonTermination { budget, trace: Box::new(trace) })
}
