//! Simulation and verification of state-based membrane systems on trees,
//! dags and symmetric graphs, with two firing squad synchronization
//! programs: one that grows mobile channels from an extra cell and one that
//! works on the static structure alone.

pub mod dsl;
pub mod engine;
pub mod fixtures;
pub mod fssp;
pub mod topology;
