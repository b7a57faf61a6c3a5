//! Synchronous evolution of state-based P systems.
//!
//! Every cell runs the same [`RuleProgram`] under weak priorities. A step
//! evaluates all cells against the step-start snapshot, then delivers every
//! emission at once; objects sent with `go` are replicated to each
//! neighbor, including neighbors reached through mobile channels.

mod multiset;
mod program;
mod system;
mod trace;

pub use multiset::{Multiset, MultisetError, Symbol};
pub use program::{
    CellOutcome, Destination, Numbering, ProgramError, RewriteMode, Rule, RuleProgram, RuleUse,
    StateId,
};
pub use system::{Cell, CellReport, ChannelPolicy, EngineError, StepReport, SystemConfig};
pub use trace::{default_budget, run, RunError, StopCondition, Trace, TraceParseError};
