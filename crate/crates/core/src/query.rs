//! Chain execution and SPARQL rendering.
//!
//! A chain `[P1 - P2]` rooted at a subject entity selects the distinct
//! pairs `(x, y)` with `x` reachable from the subject along `P1` and `y`
//! reachable from `x` along `P2`. Evaluation expands a deduplicated frontier
//! one hop at a time, so memory is bounded by distinct entities rather than
//! by the number of paths.

use alloc::collections::BTreeSet;
use alloc::string::String;
use core::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EntityId, KnowledgeGraph, PredicateToken};
use crate::path::{ChainPair, MetaPath};

pub const DEFAULT_MAX_ROWS: usize = 10_000;
pub const DEFAULT_MAX_STEPS: usize = 2_000_000;

/// Work limits for one query. `max_steps` counts (node, hop) expansions and
/// stands in for a wall-clock timeout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QueryBudget {
    pub max_rows: usize,
    pub max_steps: usize,
}

impl QueryBudget {
    pub fn new(max_rows: usize, max_steps: usize) -> Result<Self> {
        if max_rows == 0 || max_steps == 0 {
            return Err(Error::Config("query budget limits must be positive".into()));
        }
        Ok(Self { max_rows, max_steps })
    }

    pub fn unlimited() -> Self {
        Self {
            max_rows: usize::MAX,
            max_steps: usize::MAX,
        }
    }
}

impl Default for QueryBudget {
    fn default() -> Self {
        Self {
            max_rows: DEFAULT_MAX_ROWS,
            max_steps: DEFAULT_MAX_STEPS,
        }
    }
}

/// Distinct `(x, y)` pairs retrieved by a chain.
pub type TupleSet = BTreeSet<(EntityId, EntityId)>;

struct Meter {
    steps: usize,
    max_steps: usize,
}

impl Meter {
    fn new(budget: &QueryBudget) -> Self {
        Self {
            steps: 0,
            max_steps: budget.max_steps,
        }
    }

    fn tick(&mut self, rows: usize) -> Result<()> {
        self.steps += 1;
        if self.steps > self.max_steps {
            return Err(Error::BudgetExceeded { rows, steps: self.steps });
        }
        Ok(())
    }
}

fn walk(
    g: &KnowledgeGraph,
    start: BTreeSet<EntityId>,
    path: &[PredicateToken],
    meter: &mut Meter,
    rows: usize,
) -> Result<BTreeSet<EntityId>> {
    let mut frontier = start;
    for token in path {
        let Some((pred, inverse)) = g.resolve(token) else {
            return Ok(BTreeSet::new());
        };
        let mut next = BTreeSet::new();
        for node in frontier {
            meter.tick(rows)?;
            next.extend(g.step(node, pred, inverse).iter().map(|e| e.target));
        }
        if next.is_empty() {
            return Ok(next);
        }
        frontier = next;
    }
    Ok(frontier)
}

/// Entities reachable from `from` along `path`, without limits.
pub fn reach(g: &KnowledgeGraph, from: EntityId, path: &MetaPath) -> BTreeSet<EntityId> {
    let mut meter = Meter::new(&QueryBudget::unlimited());
    walk(g, BTreeSet::from([from]), path.tokens(), &mut meter, 0).unwrap_or_default()
}

/// True when `path` leads from `from` to `to`.
pub fn connects(g: &KnowledgeGraph, from: EntityId, to: EntityId, path: &MetaPath) -> bool {
    reach(g, from, path).contains(&to)
}

/// Distinct entities reached from `se` along `p1`.
pub fn execute_prefix(
    g: &KnowledgeGraph,
    se: EntityId,
    p1: &MetaPath,
    budget: &QueryBudget,
) -> Result<BTreeSet<EntityId>> {
    if !g.contains(se) {
        return Err(Error::EntityNotFound(alloc::format!("#{}", se.0)));
    }
    let mut meter = Meter::new(budget);
    let xs = walk(g, BTreeSet::from([se]), p1.tokens(), &mut meter, 0)?;
    if xs.len() > budget.max_rows {
        return Err(Error::BudgetExceeded {
            rows: xs.len(),
            steps: meter.steps,
        });
    }
    Ok(xs)
}

/// Distinct `(x, y)` pairs selected by `chain` rooted at `se`. Exceeding the
/// budget discards everything found so far.
pub fn execute_chain(
    g: &KnowledgeGraph,
    se: EntityId,
    chain: &ChainPair,
    budget: &QueryBudget,
) -> Result<TupleSet> {
    if !g.contains(se) {
        return Err(Error::EntityNotFound(alloc::format!("#{}", se.0)));
    }
    let mut meter = Meter::new(budget);
    let xs = walk(g, BTreeSet::from([se]), chain.p1.tokens(), &mut meter, 0)?;
    let mut pairs = TupleSet::new();
    for x in xs {
        let ys = walk(g, BTreeSet::from([x]), chain.p2.tokens(), &mut meter, pairs.len())?;
        for y in ys {
            pairs.insert((x, y));
            if pairs.len() > budget.max_rows {
                return Err(Error::BudgetExceeded {
                    rows: pairs.len(),
                    steps: meter.steps,
                });
            }
        }
    }
    Ok(pairs)
}

pub const SPARQL_PREFIX: &str = "prefix a: <http://rdf.basekb.com/ns/>";

fn push_property_path(out: &mut String, path: &MetaPath) {
    for (i, token) in path.tokens().iter().enumerate() {
        if i > 0 {
            out.push('/');
        }
        if token.is_inverse() {
            out.push('^');
        }
        out.push_str("a:");
        out.push_str(token.name());
    }
}

/// SPARQL text for `chain` rooted at the entity `se_mid`.
pub fn render_sparql(se_mid: &str, chain: &ChainPair) -> String {
    let mut out = String::new();
    out.push_str(SPARQL_PREFIX);
    out.push('\n');
    out.push_str("SELECT DISTINCT ?x ?y WHERE{\n");
    let _ = write!(out, "a:{se_mid} ");
    push_property_path(&mut out, &chain.p1);
    out.push_str(" ?x .\n?x ");
    push_property_path(&mut out, &chain.p2);
    out.push_str(" ?y.\n}\n");
    out
}
