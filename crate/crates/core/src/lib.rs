//! Fixed-capacity, data-parallel agent-based modeling.
//!
//! Agents live in an [`agents::AgentSet`]: a structure-of-arrays collection
//! whose capacity never changes, with inactive placeholder slots standing in
//! for agents that do not exist yet or have died. The [`kernels`] module
//! pairs a runtime-sized subset of agents with a runtime-sized batch of
//! updates without ever changing an array length, either with Rank-Match
//! (prefix-sum ranks matched in parallel) or Sort-Count-Iterate (stable
//! compaction plus a bounded loop). The [`models`] are built entirely from
//! those pieces, and [`batch`] runs independent replicas in parallel.

pub mod agents;
pub mod batch;
pub mod cli;
pub mod error;
pub mod field;
pub mod kernels;
pub mod models;
pub mod rng;
pub mod toy;

pub use error::{Error, Result};
