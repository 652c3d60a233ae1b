//! Table completion over an in-memory knowledge graph.
//!
//! Given a subject entity, two column names and one example row, the crate
//! enumerates meta-paths that connect the example entities, selects the best
//! `[P1 - P2]` chain with a pluggable scorer, executes the chain as a path
//! query and ranks the retrieved tuples with a LambdaMART model.
//!
//! Everything here is pure computation over `alloc` collections. File
//! formats, configuration and the command-line driver live in the
//! `tabcomplete` crate.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod dataset;
pub mod error;
pub mod eval;
pub mod graph;
pub mod path;
pub mod query;
pub mod ranker;
pub mod selector;
pub mod synthetic;
pub mod text;

pub use error::{Error, Result};
pub use graph::{EntityId, GraphBuilder, KnowledgeGraph, PredicateToken};
pub use path::{ChainPair, MetaPath};
pub use query::{QueryBudget, TupleSet};
