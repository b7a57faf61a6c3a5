//! Worked examples shipped with the crate: the three reference structures,
//! their reference level tables, and golden traces for both
//! synchronization programs.

/// Tree on 7 nodes rooted at 3.
pub const FIG1_TREE: &str = include_str!("../fixtures/fig1.top");
/// Dag on 10 nodes, siblings excluded; commander 6 has eccentricity 3.
pub const FIG2_DAG: &str = include_str!("../fixtures/fig2.top");
/// Symmetric graph on 7 nodes; commander 1 has eccentricity 3.
pub const FIG3_GRAPH: &str = include_str!("../fixtures/fig3.top");

pub const FIG1_LEVELS: &str = include_str!("../fixtures/fig1_levels.tsv");
pub const FIG2_LEVELS: &str = include_str!("../fixtures/fig2_levels.tsv");
pub const FIG3_LEVELS: &str = include_str!("../fixtures/fig3_levels.tsv");

/// Mobile-channel run on [`FIG1_TREE`], commander 3, squad 1..=5.
pub const TABLE1_TRACE: &str = include_str!("../fixtures/table1.tsv");
pub const TABLE1_INSTANCE: &str = include_str!("../fixtures/table1.instance");
/// Static run on [`FIG2_DAG`], commander 6, squad {4, 5, 6, 7, 9, 10}.
pub const TABLE2_TRACE: &str = include_str!("../fixtures/table2.tsv");
pub const TABLE2_INSTANCE: &str = include_str!("../fixtures/table2.instance");

pub const STATIC_RULES: &str = include_str!("../programs/static.rules");
pub const DYNAMIC_RULES: &str = include_str!("../programs/dynamic.rules");
/// [`STATIC_RULES`] plus one rule that empties terminal cells with peers.
pub const STATIC_AMENDED_RULES: &str = include_str!("../programs/static-amended.rules");
/// [`DYNAMIC_RULES`] plus one rule that drops a stray `phi` at the commander.
pub const DYNAMIC_AMENDED_RULES: &str = include_str!("../programs/dynamic-amended.rules");

/// State transition graph of [`STATIC_RULES`] in DOT form.
pub const STATIC_STATECHART: &str = include_str!("../fixtures/static_statechart.dot");
