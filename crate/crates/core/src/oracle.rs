//! A deliberately naive reference validator.
//!
//! [`validate_naive`] computes the minimal-fixpoint verdict for every graph
//! subject under every shape by brute force: stratum by stratum, it
//! re-evaluates all constraints of all (shape, subject) pairs until nothing
//! changes, then refutes whatever stayed undecided. No queries, no
//! traversal, no filters, no incremental state — it exists to cross-check
//! the engine, so it shares as little machinery with it as possible (only
//! the schema model, stratifier, and embedded query evaluator for non-class
//! target retrieval).

use std::collections::BTreeMap;

use crate::data::eval::evaluate;
use crate::data::Graph;
use crate::query;
use crate::schema::graph::{build_dependency_graph, stratify, stratum_levels};
use crate::schema::{CardinalityKind, SchemaError, ShapeSchema, TargetDefinition, ValueFilter};
use crate::term::{Term, RDF_TYPE};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Trit {
    True,
    False,
    Unknown,
}

/// Naive verdicts for a schema over a graph.
#[derive(Debug)]
pub struct OracleResult {
    /// Per shape (schema order): verdict for each target entity.
    pub targets: Vec<BTreeMap<Term, bool>>,
    /// Per shape (schema order): verdict for every graph subject.
    pub conformance: Vec<BTreeMap<Term, bool>>,
}

/// Validate every graph subject against every shape by stratified Kleene
/// iteration, then read target verdicts off the fixpoint.
pub fn validate_naive(schema: &ShapeSchema, graph: &Graph) -> Result<OracleResult, SchemaError> {
    let dependency_graph = build_dependency_graph(schema);
    let strata = stratify(schema, &dependency_graph)?;
    let levels = stratum_levels(schema, &strata);
    let mut strata_shapes: Vec<Vec<usize>> = vec![Vec::new(); strata.len().max(1)];
    for (i, &l) in levels.iter().enumerate() {
        strata_shapes[l].push(i);
    }

    let subjects: Vec<Term> = graph.subjects().cloned().collect();
    let mut conform: Vec<BTreeMap<Term, Trit>> = schema
        .shapes()
        .iter()
        .map(|_| {
            subjects
                .iter()
                .map(|x| (x.clone(), Trit::Unknown))
                .collect()
        })
        .collect();

    // Entities never appearing as subjects have no outgoing triples; their
    // verdict is a constant of the shape: every min constraint fails on
    // empty data, every max constraint holds.
    let off_graph_verdict: Vec<bool> = schema
        .shapes()
        .iter()
        .map(|shape| shape.min_constraints().next().is_none())
        .collect();

    for stratum in &strata_shapes {
        loop {
            let mut changed = false;
            for &s in stratum {
                for x in &subjects {
                    if conform[s][x] != Trit::Unknown {
                        continue;
                    }
                    let v = eval_shape(schema, graph, &conform, &off_graph_verdict, s, x);
                    if v != Trit::Unknown {
                        conform[s].insert(x.clone(), v);
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        // Minimal fixpoint: support that never materialized is refutation.
        for &s in stratum {
            for v in conform[s].values_mut() {
                if *v == Trit::Unknown {
                    *v = Trit::False;
                }
            }
        }
    }

    let conformance: Vec<BTreeMap<Term, bool>> = conform
        .into_iter()
        .map(|m| m.into_iter().map(|(k, v)| (k, v == Trit::True)).collect())
        .collect();

    let mut targets: Vec<BTreeMap<Term, bool>> = Vec::with_capacity(schema.len());
    for (s, shape) in schema.shapes().iter().enumerate() {
        let mut map = BTreeMap::new();
        for x in target_entities(shape, graph) {
            let verdict = conformance[s]
                .get(&x)
                .copied()
                .unwrap_or(off_graph_verdict[s]);
            map.insert(x, verdict);
        }
        targets.push(map);
    }
    Ok(OracleResult {
        targets,
        conformance,
    })
}

fn target_entities(shape: &crate::schema::Shape, graph: &Graph) -> Vec<Term> {
    match &shape.target {
        None => Vec::new(),
        Some(TargetDefinition::Class(class)) => {
            let class_term = Term::iri(class);
            graph
                .subjects()
                .filter(|x| graph.objects(x, RDF_TYPE).contains(&class_term))
                .cloned()
                .collect()
        }
        Some(TargetDefinition::Query(_)) => {
            let q = query::target_query(shape).expect("target present");
            evaluate(&q, graph, usize::MAX)
                .expect("target queries fit the evaluator fragment")
                .rows
                .into_iter()
                .map(|mut row| row.remove(0))
                .collect()
        }
    }
}

fn eval_shape(
    schema: &ShapeSchema,
    graph: &Graph,
    conform: &[BTreeMap<Term, Trit>],
    off_graph_verdict: &[bool],
    s: usize,
    x: &Term,
) -> Trit {
    let mut all_true = true;
    for c in &schema.shapes()[s].constraints {
        let v = eval_constraint(schema, graph, conform, off_graph_verdict, c, x);
        match v {
            Trit::False => return Trit::False,
            Trit::Unknown => all_true = false,
            Trit::True => {}
        }
    }
    if all_true {
        Trit::True
    } else {
        Trit::Unknown
    }
}

fn eval_constraint(
    schema: &ShapeSchema,
    graph: &Graph,
    conform: &[BTreeMap<Term, Trit>],
    off_graph_verdict: &[bool],
    c: &crate::schema::Constraint,
    x: &Term,
) -> Trit {
    let values = graph.objects(x, &c.path);
    match &c.shape_ref {
        None => {
            let matching = values
                .iter()
                .filter(|v| match &c.value_filter {
                    None => true,
                    Some(ValueFilter::Constant(t)) => *v == t,
                    Some(ValueFilter::Datatype(dt)) => match v {
                        Term::Literal(l) => l.datatype.as_deref() == Some(dt.as_str()),
                        _ => false,
                    },
                })
                .count() as u32;
            let ok = match c.kind {
                CardinalityKind::Min => matching >= c.count,
                CardinalityKind::Max => matching <= c.count,
            };
            if ok {
                Trit::True
            } else {
                Trit::False
            }
        }
        Some(r) => {
            let t = schema.index_of(&r.shape).expect("validated reference");
            let mut true_count = 0u32;
            let mut unknown_count = 0u32;
            for v in values {
                let verdict = conform[t].get(v).copied().unwrap_or(if off_graph_verdict[t] {
                    Trit::True
                } else {
                    Trit::False
                });
                match verdict {
                    Trit::True => true_count += 1,
                    Trit::Unknown => unknown_count += 1,
                    Trit::False => {}
                }
            }
            match c.kind {
                CardinalityKind::Min => {
                    if true_count >= c.count {
                        Trit::True
                    } else if true_count + unknown_count < c.count {
                        Trit::False
                    } else {
                        Trit::Unknown
                    }
                }
                CardinalityKind::Max => {
                    if true_count > c.count {
                        Trit::False
                    } else if true_count + unknown_count <= c.count {
                        Trit::True
                    } else {
                        Trit::Unknown
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ntriples::parse_graph;
    use crate::schema::parse_schema;

    fn schema_from(json: &str) -> ShapeSchema {
        parse_schema(json).unwrap()
    }

    #[test]
    fn mutual_min_support_without_data_is_refuted() {
        // A and B each require a neighbor conforming to the other; no name
        // data exists, so the minimal fixpoint refutes both.
        let schema = schema_from(
            r#"{"shapes": [
                {"name": "A", "targetClass": "http://x/CA", "constraints":
                    [{"kind": "min", "count": 1, "path": "http://x/toB", "shape": "B"}]},
                {"name": "B", "constraints":
                    [{"kind": "min", "count": 1, "path": "http://x/toA", "shape": "A"}]}
            ]}"#,
        );
        let graph = parse_graph(concat!(
            "<http://x/a> <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> <http://x/CA> .\n",
            "<http://x/a> <http://x/toB> <http://x/b> .\n",
            "<http://x/b> <http://x/toA> <http://x/a> .\n",
        ))
        .unwrap();
        let result = validate_naive(&schema, &graph).unwrap();
        assert_eq!(
            result.targets[0].get(&Term::iri("http://x/a")),
            Some(&false)
        );
        assert_eq!(
            result.conformance[1].get(&Term::iri("http://x/b")),
            Some(&false)
        );
    }

    #[test]
    fn negation_sees_the_settled_lower_stratum() {
        // Good = has a name; Flagged = at most 0 neighbors conforming to
        // Good on path `ref`, i.e. refers to no good entity.
        let schema = schema_from(
            r#"{"shapes": [
                {"name": "Flagged", "targetClass": "http://x/C", "constraints":
                    [{"kind": "max", "count": 0, "path": "http://x/ref", "shape": "Good"}]},
                {"name": "Good", "constraints":
                    [{"kind": "min", "count": 1, "path": "http://x/name"}]}
            ]}"#,
        );
        let graph = parse_graph(concat!(
            "<http://x/p> <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> <http://x/C> .\n",
            "<http://x/p> <http://x/ref> <http://x/good> .\n",
            "<http://x/good> <http://x/name> \"n\" .\n",
            "<http://x/q> <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> <http://x/C> .\n",
            "<http://x/q> <http://x/ref> <http://x/bad> .\n",
            "<http://x/bad> <http://x/other> \"n\" .\n",
        ))
        .unwrap();
        let result = validate_naive(&schema, &graph).unwrap();
        // p refers to a good entity -> violates max 0 -> invalid.
        assert_eq!(
            result.targets[0].get(&Term::iri("http://x/p")),
            Some(&false)
        );
        // q refers only to a non-good entity -> conforms.
        assert_eq!(result.targets[0].get(&Term::iri("http://x/q")), Some(&true));
    }

    #[test]
    fn off_graph_neighbors_fail_min_shapes_and_pass_max_only_shapes() {
        let schema = schema_from(
            r#"{"shapes": [
                {"name": "Entity", "targetClass": "http://x/C", "constraints":
                    [{"kind": "min", "count": 1, "path": "http://x/to", "shape": "Named"},
                     {"kind": "min", "count": 1, "path": "http://x/to2", "shape": "Capped"}]},
                {"name": "Named", "constraints":
                    [{"kind": "min", "count": 1, "path": "http://x/name"}]},
                {"name": "Capped", "constraints":
                    [{"kind": "max", "count": 3, "path": "http://x/name"}]}
            ]}"#,
        );
        // Both neighbors are bare IRIs with no outgoing triples.
        let graph = parse_graph(concat!(
            "<http://x/e> <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> <http://x/C> .\n",
            "<http://x/e> <http://x/to> <http://x/ghost1> .\n",
            "<http://x/e> <http://x/to2> <http://x/ghost2> .\n",
        ))
        .unwrap();
        let result = validate_naive(&schema, &graph).unwrap();
        // ghost1 fails Named (needs a name); ghost2 passes Capped (max only)
        // -> Entity fails the first constraint, satisfies the second.
        assert_eq!(
            result.targets[0].get(&Term::iri("http://x/e")),
            Some(&false)
        );
    }
}
