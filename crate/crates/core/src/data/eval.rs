//! Embedded evaluation of generated queries against an in-memory [`Graph`].
//!
//! The evaluator covers exactly the star-shaped fragment the query generator
//! emits: every pattern hangs off the one entity variable, value variables
//! are grouped per constraint into complete distinctness cliques, and at most
//! one instance filter restricts either the entity or a projected value
//! variable. Within that fragment it is exact: distinctness is decided by
//! counting candidates per clique instead of enumerating assignments, and
//! only projected columns are ever materialized, so result sizes stay linear
//! in the data.
//!
//! Results are rendered in total sorted order, deduplicated, and cut to
//! `OFFSET`/`LIMIT` and the evaluator's hard answer cap — mirroring how an
//! external endpoint with a configured result ceiling behaves. The `truncated`
//! flag reports whether the cap hit; honest callers page, careless ones
//! silently lose rows.

use std::collections::{HashMap, HashSet};

use super::{DataError, Graph};
use crate::query::{FilterMode, PatternObject, SelectQuery, Variable};
use crate::term::Term;

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOutcome {
    pub rows: Vec<Vec<Term>>,
    /// True when rows were cut by `max_answers` rather than by the query's
    /// own LIMIT.
    pub truncated: bool,
}

struct Clique<'q> {
    predicate: &'q str,
    size: usize,
    datatypes: Vec<&'q str>,
    /// Position of the clique member carrying the instance filter, if any.
    filtered: Option<&'q Variable>,
}

pub fn evaluate(
    query: &SelectQuery,
    graph: &Graph,
    max_answers: usize,
) -> Result<EvalOutcome, DataError> {
    let unsupported = |m: &str| DataError::Unsupported(m.to_string());
    let entity = &query.projection[0];

    // --- static shape checks -------------------------------------------------
    let mut var_pred: HashMap<&Variable, &str> = HashMap::new();
    let mut constants: Vec<(&str, &Term)> = Vec::new();
    for p in &query.patterns {
        if &p.subject != entity {
            return Err(unsupported(
                "all pattern subjects must be the entity variable",
            ));
        }
        match &p.object {
            PatternObject::Term(t) => constants.push((p.predicate.as_str(), t)),
            PatternObject::Var(v) => {
                if v == entity {
                    return Err(unsupported("entity variable cannot be a pattern object"));
                }
                if var_pred.insert(v, p.predicate.as_str()).is_some() {
                    return Err(unsupported("value variables must be pattern-unique"));
                }
            }
        }
    }
    for v in &query.projection[1..] {
        if !var_pred.contains_key(v) {
            return Err(unsupported("projected variables must appear in a pattern"));
        }
    }
    let mut datatype_of: HashMap<&Variable, Vec<&str>> = HashMap::new();
    for (v, dt) in &query.datatype_filters {
        if !var_pred.contains_key(v) {
            return Err(unsupported("datatype filter on unknown variable"));
        }
        datatype_of.entry(v).or_default().push(dt.as_str());
    }

    // Union value variables into distinctness cliques.
    let vars: Vec<&Variable> = {
        let mut vs: Vec<&Variable> = var_pred.keys().copied().collect();
        vs.sort();
        vs
    };
    let index_of: HashMap<&Variable, usize> =
        vars.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut parent: Vec<usize> = (0..vars.len()).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let root = find(parent, parent[i]);
            parent[i] = root;
        }
        parent[i]
    }
    let mut pair_set: HashSet<(usize, usize)> = HashSet::new();
    for (a, b) in &query.unequal_pairs {
        let (&ia, &ib) = match (index_of.get(a), index_of.get(b)) {
            (Some(ia), Some(ib)) if ia != ib => (ia, ib),
            _ => return Err(unsupported("distinctness filter on unknown or equal variables")),
        };
        pair_set.insert((ia.min(ib), ia.max(ib)));
        let (ra, rb) = (find(&mut parent, ia), find(&mut parent, ib));
        if ra != rb {
            parent[ra] = rb;
        }
    }

    let filter = query.instance_filter.as_ref();
    let filter_on_entity = filter.is_some_and(|f| &f.variable == entity);
    if let Some(f) = filter {
        if !filter_on_entity && !query.projection[1..].contains(&f.variable) {
            return Err(unsupported(
                "instance filter must target the entity or a projected variable",
            ));
        }
    }

    let mut cliques: Vec<(usize, Clique)> = Vec::new(); // keyed by root
    for (i, &v) in vars.iter().enumerate() {
        let root = find(&mut parent, i);
        let entry = cliques.iter_mut().find(|(r, _)| *r == root);
        let member_filtered = filter
            .filter(|f| !filter_on_entity && &f.variable == v)
            .map(|f| &f.variable);
        match entry {
            None => cliques.push((
                root,
                Clique {
                    predicate: var_pred[v],
                    size: 1,
                    datatypes: datatype_of.get(v).cloned().unwrap_or_default(),
                    filtered: member_filtered,
                },
            )),
            Some((_, c)) => {
                if c.predicate != var_pred[v] {
                    return Err(unsupported(
                        "a distinctness clique must stay on a single predicate",
                    ));
                }
                let dts = datatype_of.get(v).cloned().unwrap_or_default();
                if dts != c.datatypes {
                    return Err(unsupported(
                        "a distinctness clique must share one datatype filter",
                    ));
                }
                c.size += 1;
                if member_filtered.is_some() {
                    c.filtered = member_filtered;
                }
            }
        }
    }
    // Count-based satisfiability is only exact for complete cliques.
    for (root, c) in &cliques {
        let members: Vec<usize> = (0..vars.len())
            .filter(|&i| find(&mut parent, i) == *root)
            .collect();
        let expected = c.size * (c.size - 1) / 2;
        let actual = members
            .iter()
            .flat_map(|&a| members.iter().map(move |&b| (a.min(b), a.max(b))))
            .filter(|(a, b)| a < b)
            .collect::<HashSet<_>>()
            .iter()
            .filter(|p| pair_set.contains(p))
            .count();
        if actual != expected {
            return Err(unsupported(
                "distinctness filters must form complete cliques",
            ));
        }
    }
    if pair_set.len() != cliques.iter().map(|(_, c)| c.size * (c.size - 1) / 2).sum::<usize>() {
        return Err(unsupported("distinctness filters must stay within cliques"));
    }
    // Projected columns are enumerated independently, which is only exact
    // when no two projected variables share a clique.
    for (root, _) in &cliques {
        let projected_members = query.projection[1..]
            .iter()
            .filter(|v| find(&mut parent, index_of[*v]) == *root)
            .count();
        if projected_members > 1 {
            return Err(unsupported(
                "at most one projected variable per distinctness clique",
            ));
        }
    }

    let filter_set: HashSet<&Term> = filter.map(|f| f.entities.iter().collect()).unwrap_or_default();
    let passes_filter = |t: &Term| -> bool {
        match filter.map(|f| f.mode) {
            None => true,
            Some(FilterMode::Include) => filter_set.contains(t),
            Some(FilterMode::Exclude) => !filter_set.contains(t),
        }
    };

    // --- per-subject matching ------------------------------------------------
    let mut rows: Vec<Vec<Term>> = Vec::new();
    'subjects: for subject in graph.subjects() {
        if filter_on_entity && !passes_filter(subject) {
            continue;
        }
        for (pred, term) in &constants {
            if !graph.objects(subject, pred).contains(term) {
                continue 'subjects;
            }
        }
        // Candidate values per clique, post datatype filtering.
        let mut clique_values: HashMap<usize, Vec<&Term>> = HashMap::new();
        for (root, c) in &cliques {
            let base: Vec<&Term> = graph
                .objects(subject, c.predicate)
                .iter()
                .filter(|t| {
                    c.datatypes.iter().all(|dt| match t {
                        Term::Literal(l) => l.datatype.as_deref() == Some(*dt),
                        _ => false,
                    })
                })
                .collect();
            if base.len() < c.size {
                continue 'subjects;
            }
            if c.filtered.is_some() && !base.iter().any(|t| passes_filter(t)) {
                continue 'subjects;
            }
            clique_values.insert(*root, base);
        }
        // Enumerate projected columns: each co-projected variable ranges over
        // its clique's candidates (restricted by the filter when it carries
        // it); distinct siblings always exist because the clique passed the
        // count check.
        let mut columns: Vec<Vec<&Term>> = Vec::with_capacity(query.projection.len() - 1);
        for v in &query.projection[1..] {
            let i = index_of[v];
            let root = find(&mut parent, i);
            let candidates = &clique_values[&root];
            let filtered_here = filter
                .map(|f| !filter_on_entity && &f.variable == v)
                .unwrap_or(false);
            let values: Vec<&Term> = candidates
                .iter()
                .copied()
                .filter(|t| !filtered_here || passes_filter(t))
                .collect();
            columns.push(values);
        }
        // Cartesian product over the projected columns.
        let mut assignments: Vec<Vec<&Term>> = vec![Vec::new()];
        for col in &columns {
            let mut next = Vec::with_capacity(assignments.len() * col.len());
            for partial in &assignments {
                for &value in col {
                    let mut row = partial.clone();
                    row.push(value);
                    next.push(row);
                }
            }
            assignments = next;
        }
        for assignment in assignments {
            let mut row = Vec::with_capacity(1 + assignment.len());
            row.push(subject.clone());
            row.extend(assignment.into_iter().cloned());
            rows.push(row);
        }
    }

    rows.sort();
    rows.dedup();

    let offset = query.offset.unwrap_or(0) as usize;
    let rows = if offset >= rows.len() {
        Vec::new()
    } else {
        rows.split_off(offset)
    };
    let requested = query
        .limit
        .map(|l| l as usize)
        .unwrap_or(usize::MAX)
        .min(rows.len());
    let effective = requested.min(max_answers);
    let truncated = effective < requested.min(rows.len());
    let mut rows = rows;
    rows.truncate(effective);
    Ok(EvalOutcome { rows, truncated })
}

#[cfg(test)]
mod tests;
