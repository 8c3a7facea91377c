//! Star-shaped conjunctive select queries and their generation from shapes.
//!
//! Every query this module produces binds one entity variable `?x` and, per
//! constraint, a block of fresh value variables attached to `?x` through a
//! single predicate. Cardinality is encoded structurally: a `min n`
//! constraint contributes `n` value variables made pairwise unequal, so a row
//! exists exactly when an entity has at least `n` distinct values; a `max n`
//! violation query uses `n + 1` such variables, so a row is a counterexample.
//!
//! Verdict lists of already-evaluated shapes can be pushed into a query as an
//! [`InstanceFilter`] over one neighbor variable, restricting retrieval to
//! conforming (`VALUES`) or not-yet-refuted (`NOT IN`) entities. Oversized
//! filters are partitioned into several query parts under an endpoint length
//! budget by [`partition_plan`].

pub mod text;

use std::fmt;

use crate::schema::{Shape, TargetDefinition, ValueFilter};
use crate::term::{Term, RDF_TYPE};

/// A SPARQL-style variable, stored without the leading `?`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Variable(String);

impl Variable {
    pub fn new(name: impl Into<String>) -> Self {
        let name = name.into();
        debug_assert!(
            !name.is_empty() && !name.starts_with('?'),
            "variable names are stored bare, got {name:?}"
        );
        Variable(name)
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "?{}", self.0)
    }
}

/// The entity variable shared by all generated queries.
pub const ENTITY_VAR: &str = "x";

#[derive(Debug, Clone, PartialEq)]
pub enum PatternObject {
    Var(Variable),
    Term(Term),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriplePattern {
    pub subject: Variable,
    pub predicate: String,
    pub object: PatternObject,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterMode {
    /// `VALUES ?v { ... }` — keep only bindings from the list.
    Include,
    /// `FILTER(?v NOT IN (...))` — drop bindings from the list.
    Exclude,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceFilter {
    pub variable: Variable,
    pub mode: FilterMode,
    pub entities: Vec<Term>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectQuery {
    /// Projected variables; the first is always the entity variable.
    pub projection: Vec<Variable>,
    pub patterns: Vec<TriplePattern>,
    /// Pairwise distinctness requirements between value variables.
    pub unequal_pairs: Vec<(Variable, Variable)>,
    /// Per-variable literal datatype requirements.
    pub datatype_filters: Vec<(Variable, String)>,
    pub instance_filter: Option<InstanceFilter>,
    pub order_by: bool,
    pub limit: Option<u64>,
    pub offset: Option<u64>,
}

impl SelectQuery {
    fn empty() -> Self {
        SelectQuery {
            projection: vec![Variable::new(ENTITY_VAR)],
            patterns: Vec::new(),
            unequal_pairs: Vec::new(),
            datatype_filters: Vec::new(),
            instance_filter: None,
            order_by: true,
            limit: None,
            offset: None,
        }
    }

    pub fn entity_variable(&self) -> &Variable {
        &self.projection[0]
    }

    /// Clone with paging applied; `offset` 0 is left implicit.
    pub fn with_page(&self, limit: u64, offset: u64) -> SelectQuery {
        let mut q = self.clone();
        q.limit = Some(limit);
        q.offset = (offset > 0).then_some(offset);
        q
    }

    pub fn serialize(&self) -> String {
        text::serialize_query(self)
    }
}

/// The retrieval query for a shape's target set, if it has one. Class targets
/// become a single `rdf:type` pattern; explicit target queries are used as
/// written, with ordering forced on for deterministic paging.
pub fn target_query(shape: &Shape) -> Option<SelectQuery> {
    match &shape.target {
        None => None,
        Some(TargetDefinition::Class(class)) => {
            let mut q = SelectQuery::empty();
            q.patterns.push(TriplePattern {
                subject: q.entity_variable().clone(),
                predicate: RDF_TYPE.to_string(),
                object: PatternObject::Term(Term::iri(class)),
            });
            Some(q)
        }
        Some(TargetDefinition::Query(q)) => {
            let mut q = q.clone();
            q.order_by = true;
            Some(q)
        }
    }
}

/// A variable of the min query that enumerates candidate neighbors for one
/// shape-referencing constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct InterMinVar {
    pub variable: Variable,
    /// Index of the constraint in the shape's constraint list.
    pub constraint: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinQuery {
    pub query: SelectQuery,
    pub inter_vars: Vec<InterMinVar>,
}

/// The single conjunctive query deciding all of a shape's `min` constraints
/// at once: an entity appears as a row subject exactly when every `min`
/// constraint has enough distinct values on its path.
///
/// For each shape-referencing `min` constraint, the first of its value
/// variables is co-projected so the engine can enumerate candidate neighbors
/// (every path value appears in that column once the entity has rows at all);
/// the remaining variables stay unprojected to keep row counts linear in the
/// number of values rather than combinatorial.
pub fn min_query(shape: &Shape) -> Option<MinQuery> {
    shape.min_constraints().next()?;
    let mut q = SelectQuery::empty();
    let mut inter_vars = Vec::new();
    let mut fresh = 0usize;
    for (cidx, c) in shape.min_constraints() {
        if let Some(ValueFilter::Constant(value)) = &c.value_filter {
            // Count normalized to 1 at parse time: the pattern itself is the
            // existence check.
            q.patterns.push(TriplePattern {
                subject: q.projection[0].clone(),
                predicate: c.path.clone(),
                object: PatternObject::Term(value.clone()),
            });
            continue;
        }
        let vars: Vec<Variable> = (0..c.count)
            .map(|_| {
                let v = Variable::new(format!("p{fresh}"));
                fresh += 1;
                v
            })
            .collect();
        for v in &vars {
            q.patterns.push(TriplePattern {
                subject: q.projection[0].clone(),
                predicate: c.path.clone(),
                object: PatternObject::Var(v.clone()),
            });
            if let Some(ValueFilter::Datatype(dt)) = &c.value_filter {
                q.datatype_filters.push((v.clone(), dt.clone()));
            }
        }
        for i in 0..vars.len() {
            for j in (i + 1)..vars.len() {
                q.unequal_pairs.push((vars[i].clone(), vars[j].clone()));
            }
        }
        if c.is_inter_shape() {
            q.projection.push(vars[0].clone());
            inter_vars.push(InterMinVar {
                variable: vars[0].clone(),
                constraint: cidx,
            });
        }
    }
    Some(MinQuery {
        query: q,
        inter_vars,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum MaxQueryKind {
    /// Projects the entity alone; any row refutes the constraint.
    Violator(SelectQuery),
    /// Projects the entity and one neighbor variable; the constraint fails
    /// once more than `count` distinct conforming neighbors are seen.
    ConformingPairs {
        query: SelectQuery,
        variable: Variable,
    },
    /// No retrieval needed: at most one distinct value can ever match a
    /// constant filter, so `max n >= 1` cannot be violated.
    TriviallySatisfied,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxQuery {
    /// Index of the constraint in the shape's constraint list.
    pub constraint: usize,
    pub kind: MaxQueryKind,
}

/// One retrieval per `max` constraint. Intra-shape bounds get a violation
/// query; shape-referencing bounds get a pair query, because whether a value
/// counts depends on the referenced shape's verdict for it.
pub fn max_queries(shape: &Shape) -> Vec<MaxQuery> {
    let mut out = Vec::new();
    for (cidx, c) in shape.max_constraints() {
        if c.is_inter_shape() {
            let mut q = SelectQuery::empty();
            let v = Variable::new("p0");
            q.patterns.push(TriplePattern {
                subject: q.projection[0].clone(),
                predicate: c.path.clone(),
                object: PatternObject::Var(v.clone()),
            });
            q.projection.push(v.clone());
            out.push(MaxQuery {
                constraint: cidx,
                kind: MaxQueryKind::ConformingPairs { query: q, variable: v },
            });
            continue;
        }
        if let Some(ValueFilter::Constant(value)) = &c.value_filter {
            if c.count == 0 {
                let mut q = SelectQuery::empty();
                q.patterns.push(TriplePattern {
                    subject: q.projection[0].clone(),
                    predicate: c.path.clone(),
                    object: PatternObject::Term(value.clone()),
                });
                out.push(MaxQuery {
                    constraint: cidx,
                    kind: MaxQueryKind::Violator(q),
                });
            } else {
                out.push(MaxQuery {
                    constraint: cidx,
                    kind: MaxQueryKind::TriviallySatisfied,
                });
            }
            continue;
        }
        let mut q = SelectQuery::empty();
        let vars: Vec<Variable> = (0..=c.count)
            .map(|i| Variable::new(format!("p{i}")))
            .collect();
        for v in &vars {
            q.patterns.push(TriplePattern {
                subject: q.projection[0].clone(),
                predicate: c.path.clone(),
                object: PatternObject::Var(v.clone()),
            });
            if let Some(ValueFilter::Datatype(dt)) = &c.value_filter {
                q.datatype_filters.push((v.clone(), dt.clone()));
            }
        }
        for i in 0..vars.len() {
            for j in (i + 1)..vars.len() {
                q.unequal_pairs.push((vars[i].clone(), vars[j].clone()));
            }
        }
        out.push(MaxQuery {
            constraint: cidx,
            kind: MaxQueryKind::Violator(q),
        });
    }
    out
}

/// Attach a verdict-list filter to one variable of `query`, choosing the mode
/// with the shorter entity list; an empty list never wins over a non-empty
/// one, and with both lists empty the query is left unfiltered.
///
/// Soundness contract for the caller: `valid` must be the *complete*
/// conformance list of the filtering shape (pass `&[]` when it is not), while
/// `invalid` entries are final refutations and always safe to exclude.
pub fn push_instance_filter(
    query: &mut SelectQuery,
    variable: &Variable,
    valid: &[Term],
    invalid: &[Term],
) -> Option<FilterMode> {
    debug_assert!(
        query.instance_filter.is_none(),
        "at most one instance filter per query"
    );
    let (mode, entities) = match (valid.is_empty(), invalid.is_empty()) {
        (true, true) => return None,
        (true, false) => (FilterMode::Exclude, invalid),
        (false, true) => (FilterMode::Include, valid),
        (false, false) => {
            if valid.len() <= invalid.len() {
                (FilterMode::Include, valid)
            } else {
                (FilterMode::Exclude, invalid)
            }
        }
    };
    query.instance_filter = Some(InstanceFilter {
        variable: variable.clone(),
        mode,
        entities: entities.to_vec(),
    });
    Some(mode)
}

/// An executable unit: one or more query parts whose result union equals the
/// original query's results (parts differ only in their filter slice).
#[derive(Debug, Clone, PartialEq)]
pub struct QueryPlan {
    pub parts: Vec<SelectQuery>,
    /// True when a filter was discarded because even `max_parts` slices could
    /// not fit the length budget.
    pub dropped_filter: bool,
}

impl QueryPlan {
    pub fn single(query: SelectQuery) -> Self {
        QueryPlan {
            parts: vec![query],
            dropped_filter: false,
        }
    }
}

/// Room reserved in the length budget for ` LIMIT <n> OFFSET <n>` suffixes
/// appended at execution time.
const PAGING_RESERVE: usize = 64;

/// Split an instance-filtered query into parts that each serialize within
/// `max_query_len` (paging suffix included). Only inclusion filters are
/// split; an oversized exclusion filter is truncated to the prefix that fits
/// (excluding less is sound) or dropped when nothing fits. Needing more than
/// `max_parts` slices means the filter costs more requests than it can save,
/// so it is dropped and the plain query runs as a single part. Unfiltered
/// queries are
/// never split: their length is fixed by the schema, not by data volume.
pub fn partition_plan(query: SelectQuery, max_query_len: usize, max_parts: usize) -> QueryPlan {
    let budget = max_query_len.saturating_sub(PAGING_RESERVE);
    if query.instance_filter.is_none() || query.serialize().len() <= budget {
        return QueryPlan::single(query);
    }
    let filter = query.instance_filter.as_ref().expect("checked above");
    let mut bare = query.clone();
    bare.instance_filter = None;

    // Serialized length = bare query + filter scaffold + per-entity tokens.
    let scaffold = {
        let mut probe = bare.clone();
        probe.instance_filter = Some(InstanceFilter {
            variable: filter.variable.clone(),
            mode: filter.mode,
            entities: Vec::new(),
        });
        probe.serialize().len()
    };
    let entity_cost = |i_in_chunk: usize, t: &Term| -> usize {
        let sep = match filter.mode {
            FilterMode::Include => 1,                                // " "
            FilterMode::Exclude => if i_in_chunk == 0 { 0 } else { 2 }, // ", "
        };
        sep + t.to_token().len()
    };

    if filter.mode == FilterMode::Exclude {
        // An exclusion list must not be split across parts: the union of
        // partially-excluded result sets re-admits every row excluded by
        // only one part. Excluding less is sound, though — the re-admitted
        // candidates merely cost another membership check downstream — so
        // keep the longest prefix that fits, or drop the filter entirely.
        let mut kept: Vec<Term> = Vec::new();
        let mut used = scaffold;
        for t in &filter.entities {
            let cost = entity_cost(kept.len(), t);
            if used + cost > budget {
                break;
            }
            used += cost;
            kept.push(t.clone());
        }
        if kept.is_empty() {
            return QueryPlan {
                parts: vec![bare],
                dropped_filter: true,
            };
        }
        let variable = filter.variable.clone();
        let mut part = bare;
        part.instance_filter = Some(InstanceFilter {
            variable,
            mode: FilterMode::Exclude,
            entities: kept,
        });
        return QueryPlan {
            parts: vec![part],
            dropped_filter: false,
        };
    }

    let mut chunks: Vec<Vec<Term>> = Vec::new();
    let mut current: Vec<Term> = Vec::new();
    let mut used = scaffold;
    for t in &filter.entities {
        let cost = entity_cost(current.len(), t);
        if !current.is_empty() && used + cost > budget {
            chunks.push(std::mem::take(&mut current));
            used = scaffold;
        }
        used += entity_cost(current.len(), t);
        current.push(t.clone());
    }
    if !current.is_empty() {
        chunks.push(current);
    }

    if chunks.len() > max_parts {
        return QueryPlan {
            parts: vec![bare],
            dropped_filter: true,
        };
    }
    let parts = chunks
        .into_iter()
        .map(|entities| {
            let mut part = bare.clone();
            part.instance_filter = Some(InstanceFilter {
                variable: filter.variable.clone(),
                mode: filter.mode,
                entities,
            });
            part
        })
        .collect();
    QueryPlan {
        parts,
        dropped_filter: false,
    }
}

/// Cheap static selectivity estimate, ordered most-selective-first: filtered
/// queries beat unfiltered ones, then more patterns beat fewer.
pub fn selectivity_rank(query: &SelectQuery) -> (bool, i64) {
    (
        query.instance_filter.is_none(),
        -(query.patterns.len() as i64),
    )
}

#[cfg(test)]
mod tests;
