use super::*;
use crate::data::ntriples::parse_graph;
use crate::query::{min_query, target_query, InstanceFilter, MaxQueryKind, TriplePattern};
use crate::schema::parse_schema;

const TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";

fn campus() -> Graph {
    parse_graph(&format!(
        concat!(
            "<http://x/p1> <{t}> <http://x/Professor> .\n",
            "<http://x/p1> <http://x/name> \"Alice\" .\n",
            "<http://x/p1> <http://x/name> \"Dr Alice\" .\n",
            "<http://x/p1> <http://x/phone> \"1\" .\n",
            "<http://x/p1> <http://x/phone> \"2\" .\n",
            "<http://x/p1> <http://x/worksFor> <http://x/d1> .\n",
            "<http://x/p2> <{t}> <http://x/Professor> .\n",
            "<http://x/p2> <http://x/name> \"Bob\" .\n",
            "<http://x/p2> <http://x/phone> \"1\" .\n",
            "<http://x/p2> <http://x/worksFor> <http://x/d1> .\n",
            "<http://x/p2> <http://x/worksFor> <http://x/d2> .\n",
            "<http://x/p3> <http://x/phone> \"1\" .\n",
            "<http://x/p3> <http://x/phone> \"2\" .\n",
            "<http://x/p3> <http://x/phone> \"3\" .\n",
            "<http://x/p3> <http://x/worksFor> <http://x/d9> .\n",
        ),
        t = TYPE
    ))
    .expect("fixture parses")
}

fn professor_shape() -> crate::schema::Shape {
    parse_schema(
        r#"{"shapes": [
            {"name": "Professor", "targetClass": "http://x/Professor", "constraints": [
                {"kind": "min", "count": 1, "path": "http://x/name"},
                {"kind": "min", "count": 2, "path": "http://x/phone"},
                {"kind": "min", "count": 1, "path": "http://x/worksFor", "shape": "Department"},
                {"kind": "max", "count": 1, "path": "http://x/name"}
            ]},
            {"name": "Department", "constraints": []}
        ]}"#,
    )
    .unwrap()
    .shapes()[0]
        .clone()
}

fn iri(s: &str) -> Term {
    Term::iri(s)
}

fn all(query: &SelectQuery, graph: &Graph) -> Vec<Vec<Term>> {
    evaluate(query, graph, usize::MAX).expect("evaluates").rows
}

#[test]
fn target_query_matches_typed_subjects_in_sorted_order() {
    let graph = campus();
    let q = target_query(&professor_shape()).unwrap();
    assert_eq!(
        all(&q, &graph),
        vec![vec![iri("http://x/p1")], vec![iri("http://x/p2")]]
    );
}

#[test]
fn min_query_requires_every_bound_and_projects_neighbors() {
    let graph = campus();
    let q = min_query(&professor_shape()).unwrap().query;
    // p1: 2 names, 2 phones, 1 department -> row. p2 fails min-2 phone,
    // p3 has no name.
    assert_eq!(
        all(&q, &graph),
        vec![vec![iri("http://x/p1"), iri("http://x/d1")]]
    );
}

#[test]
fn violation_query_finds_only_over_bounded_entities() {
    let graph = campus();
    let queries = crate::query::max_queries(&professor_shape());
    let MaxQueryKind::Violator(q) = &queries[0].kind else {
        panic!("expected violator");
    };
    // Only p1 has two distinct names.
    assert_eq!(all(q, &graph), vec![vec![iri("http://x/p1")]]);
}

#[test]
fn datatype_filter_counts_only_matching_literals() {
    let graph = parse_graph(concat!(
        "<http://x/a> <http://x/v> \"1\"^^<http://www.w3.org/2001/XMLSchema#integer> .\n",
        "<http://x/a> <http://x/v> \"2\"^^<http://www.w3.org/2001/XMLSchema#integer> .\n",
        "<http://x/b> <http://x/v> \"1\"^^<http://www.w3.org/2001/XMLSchema#integer> .\n",
        "<http://x/b> <http://x/v> \"plain\" .\n",
    ))
    .unwrap();
    let shape = parse_schema(
        r#"{"shapes": [{"name": "A", "constraints": [
            {"kind": "min", "count": 2, "path": "http://x/v",
             "datatype": "http://www.w3.org/2001/XMLSchema#integer"}
        ]}]}"#,
    )
    .unwrap()
    .shapes()[0]
        .clone();
    let q = min_query(&shape).unwrap().query;
    // b's plain literal does not count toward the typed minimum.
    assert_eq!(all(&q, &graph), vec![vec![iri("http://x/a")]]);
}

fn pair_query() -> SelectQuery {
    let shape = parse_schema(
        r#"{"shapes": [
            {"name": "S", "constraints": [
                {"kind": "max", "count": 1, "path": "http://x/worksFor", "shape": "D"}
            ]},
            {"name": "D", "constraints": []}
        ]}"#,
    )
    .unwrap()
    .shapes()[0]
        .clone();
    match crate::query::max_queries(&shape).remove(0).kind {
        MaxQueryKind::ConformingPairs { query, .. } => query,
        other => panic!("expected pair query, got {other:?}"),
    }
}

#[test]
fn pair_query_enumerates_all_neighbors() {
    let graph = campus();
    assert_eq!(
        all(&pair_query(), &graph),
        vec![
            vec![iri("http://x/p1"), iri("http://x/d1")],
            vec![iri("http://x/p2"), iri("http://x/d1")],
            vec![iri("http://x/p2"), iri("http://x/d2")],
            vec![iri("http://x/p3"), iri("http://x/d9")],
        ]
    );
}

#[test]
fn include_filter_on_a_projected_variable_restricts_rows_and_columns() {
    let graph = campus();
    let mut q = pair_query();
    q.instance_filter = Some(InstanceFilter {
        variable: Variable::new("p0"),
        mode: FilterMode::Include,
        entities: vec![iri("http://x/d1")],
    });
    assert_eq!(
        all(&q, &graph),
        vec![
            vec![iri("http://x/p1"), iri("http://x/d1")],
            vec![iri("http://x/p2"), iri("http://x/d1")],
        ]
    );
}

#[test]
fn exclude_filter_on_the_entity_drops_listed_subjects() {
    let graph = campus();
    let mut q = pair_query();
    q.instance_filter = Some(InstanceFilter {
        variable: Variable::new(crate::query::ENTITY_VAR),
        mode: FilterMode::Exclude,
        entities: vec![iri("http://x/p1"), iri("http://x/p3")],
    });
    assert_eq!(
        all(&q, &graph),
        vec![
            vec![iri("http://x/p2"), iri("http://x/d1")],
            vec![iri("http://x/p2"), iri("http://x/d2")],
        ]
    );
}

#[test]
fn filtered_min_query_still_requires_a_passing_neighbor() {
    let graph = campus();
    let mut q = min_query(&professor_shape()).unwrap().query;
    q.instance_filter = Some(InstanceFilter {
        variable: Variable::new("p3"),
        mode: FilterMode::Include,
        entities: vec![iri("http://x/d2")],
    });
    // p1's only department is d1, which the filter rejects.
    assert_eq!(all(&q, &graph), Vec::<Vec<Term>>::new());
}

#[test]
fn paging_is_deterministic_and_reassembles_the_full_result() {
    let graph = campus();
    let q = pair_query();
    let full = all(&q, &graph);
    let mut paged = Vec::new();
    let mut offset = 0u64;
    loop {
        let page = evaluate(&q.with_page(3, offset), &graph, usize::MAX)
            .unwrap()
            .rows;
        let n = page.len() as u64;
        paged.extend(page);
        offset += n;
        if n < 3 {
            break;
        }
    }
    assert_eq!(paged, full);
}

#[test]
fn answer_cap_truncates_and_reports_it() {
    let graph = campus();
    let q = pair_query();
    let outcome = evaluate(&q, &graph, 2).unwrap();
    assert_eq!(outcome.rows.len(), 2);
    assert!(outcome.truncated, "cap cut rows the query did not limit");
    // A LIMIT at or under the cap is the query's own doing.
    let outcome = evaluate(&q.with_page(2, 0), &graph, 2).unwrap();
    assert_eq!(outcome.rows.len(), 2);
    assert!(!outcome.truncated);
    // Paged retrieval under the cap sees every row.
    let outcome = evaluate(&q.with_page(2, 2), &graph, 2).unwrap();
    assert_eq!(outcome.rows.len(), 2);
    assert!(!outcome.truncated);
}

#[test]
fn rejects_queries_outside_the_star_fragment() {
    let graph = campus();
    let entity = Variable::new(crate::query::ENTITY_VAR);

    // Subject other than the entity variable.
    let mut q = pair_query();
    q.patterns.push(TriplePattern {
        subject: Variable::new("p0"),
        predicate: "http://x/name".into(),
        object: PatternObject::Var(Variable::new("p1")),
    });
    assert!(matches!(
        evaluate(&q, &graph, usize::MAX),
        Err(DataError::Unsupported(_))
    ));

    // A value variable bound by two patterns.
    let mut q = pair_query();
    q.patterns.push(TriplePattern {
        subject: entity.clone(),
        predicate: "http://x/name".into(),
        object: PatternObject::Var(Variable::new("p0")),
    });
    assert!(evaluate(&q, &graph, usize::MAX).is_err());

    // Distinctness across two predicates.
    let mut q = pair_query();
    q.patterns.push(TriplePattern {
        subject: entity.clone(),
        predicate: "http://x/name".into(),
        object: PatternObject::Var(Variable::new("p1")),
    });
    q.unequal_pairs.push((Variable::new("p0"), Variable::new("p1")));
    assert!(evaluate(&q, &graph, usize::MAX).is_err());

    // Incomplete distinctness clique over three variables.
    let mut q = pair_query();
    for name in ["p1", "p2"] {
        q.patterns.push(TriplePattern {
            subject: entity.clone(),
            predicate: "http://x/worksFor".into(),
            object: PatternObject::Var(Variable::new(name)),
        });
    }
    q.unequal_pairs.push((Variable::new("p0"), Variable::new("p1")));
    q.unequal_pairs.push((Variable::new("p1"), Variable::new("p2")));
    assert!(evaluate(&q, &graph, usize::MAX).is_err());

    // Two projected variables in one clique.
    let mut q = pair_query();
    q.patterns.push(TriplePattern {
        subject: entity.clone(),
        predicate: "http://x/worksFor".into(),
        object: PatternObject::Var(Variable::new("p1")),
    });
    q.unequal_pairs.push((Variable::new("p0"), Variable::new("p1")));
    q.projection.push(Variable::new("p1"));
    assert!(evaluate(&q, &graph, usize::MAX).is_err());

    // Instance filter on an unprojected value variable.
    let mut q = min_query(&professor_shape()).unwrap().query;
    q.instance_filter = Some(InstanceFilter {
        variable: Variable::new("p0"),
        mode: FilterMode::Exclude,
        entities: vec![iri("http://x/whatever")],
    });
    assert!(evaluate(&q, &graph, usize::MAX).is_err());

    // Datatype filter on an unknown variable.
    let mut q = pair_query();
    q.datatype_filters
        .push((Variable::new("nope"), "http://x/dt".into()));
    assert!(evaluate(&q, &graph, usize::MAX).is_err());

    // Projected variable that no pattern binds.
    let mut q = pair_query();
    q.projection.push(Variable::new("unbound"));
    assert!(evaluate(&q, &graph, usize::MAX).is_err());
}
