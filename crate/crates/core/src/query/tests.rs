use super::*;
use crate::schema::parse_schema;

fn first_shape(json: &str) -> Shape {
    parse_schema(json).expect("schema parses").shapes()[0].clone()
}

fn professor() -> Shape {
    first_shape(
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
}

#[test]
fn class_target_compiles_to_a_type_pattern() {
    let q = target_query(&professor()).expect("targeted shape");
    assert_eq!(
        q.serialize(),
        "SELECT DISTINCT ?x WHERE { ?x <http://www.w3.org/1999/02/22-rdf-syntax-ns#type> \
         <http://x/Professor> . } ORDER BY ?x"
    );
    let untargeted = first_shape(r#"{"shapes": [{"name": "A", "constraints": []}]}"#);
    assert!(target_query(&untargeted).is_none());
}

#[test]
fn min_query_counts_by_distinct_variables_and_projects_neighbors() {
    let MinQuery { query, inter_vars } = min_query(&professor()).expect("has min constraints");
    assert_eq!(
        query.serialize(),
        "SELECT DISTINCT ?x ?p3 WHERE { ?x <http://x/name> ?p0 . ?x <http://x/phone> ?p1 . \
         ?x <http://x/phone> ?p2 . ?x <http://x/worksFor> ?p3 . FILTER(?p1 != ?p2) } \
         ORDER BY ?x ?p3"
    );
    assert_eq!(inter_vars.len(), 1);
    assert_eq!(inter_vars[0].variable, Variable::new("p3"));
    assert_eq!(inter_vars[0].constraint, 2);
}

#[test]
fn min_query_constant_value_is_a_direct_pattern() {
    let shape = first_shape(
        r#"{"shapes": [{"name": "A", "constraints": [
            {"kind": "min", "count": 1, "path": "http://x/status", "value": "<http://x/Active>"}
        ]}]}"#,
    );
    let MinQuery { query, inter_vars } = min_query(&shape).unwrap();
    assert_eq!(
        query.serialize(),
        "SELECT DISTINCT ?x WHERE { ?x <http://x/status> <http://x/Active> . } ORDER BY ?x"
    );
    assert!(inter_vars.is_empty());
}

#[test]
fn min_query_datatype_filter_applies_to_every_counted_variable() {
    let shape = first_shape(
        r#"{"shapes": [{"name": "A", "constraints": [
            {"kind": "min", "count": 2, "path": "http://x/label",
             "datatype": "http://www.w3.org/2001/XMLSchema#string"}
        ]}]}"#,
    );
    let MinQuery { query, .. } = min_query(&shape).unwrap();
    assert_eq!(
        query.serialize(),
        "SELECT DISTINCT ?x WHERE { ?x <http://x/label> ?p0 . ?x <http://x/label> ?p1 . \
         FILTER(?p0 != ?p1) FILTER(DATATYPE(?p0) = <http://www.w3.org/2001/XMLSchema#string>) \
         FILTER(DATATYPE(?p1) = <http://www.w3.org/2001/XMLSchema#string>) } ORDER BY ?x"
    );
}

#[test]
fn max_only_shape_has_no_min_query() {
    let shape = first_shape(
        r#"{"shapes": [{"name": "A", "constraints": [
            {"kind": "max", "count": 1, "path": "http://x/name"}
        ]}]}"#,
    );
    assert!(min_query(&shape).is_none());
}

#[test]
fn intra_max_compiles_to_a_violation_query() {
    let queries = max_queries(&professor());
    assert_eq!(queries.len(), 1);
    assert_eq!(queries[0].constraint, 3);
    let MaxQueryKind::Violator(q) = &queries[0].kind else {
        panic!("intra max is a violator query");
    };
    assert_eq!(
        q.serialize(),
        "SELECT DISTINCT ?x WHERE { ?x <http://x/name> ?p0 . ?x <http://x/name> ?p1 . \
         FILTER(?p0 != ?p1) } ORDER BY ?x"
    );
}

#[test]
fn inter_max_compiles_to_a_pair_query() {
    let shape = first_shape(
        r#"{"shapes": [
            {"name": "Course", "constraints": [
                {"kind": "max", "count": 2, "path": "http://x/taughtBy", "shape": "Professor"}
            ]},
            {"name": "Professor", "constraints": []}
        ]}"#,
    );
    let queries = max_queries(&shape);
    let MaxQueryKind::ConformingPairs { query, variable } = &queries[0].kind else {
        panic!("inter max is a pair query");
    };
    assert_eq!(variable, &Variable::new("p0"));
    assert_eq!(
        query.serialize(),
        "SELECT DISTINCT ?x ?p0 WHERE { ?x <http://x/taughtBy> ?p0 . } ORDER BY ?x ?p0"
    );
}

#[test]
fn constant_max_is_trivial_unless_count_is_zero() {
    let shape = first_shape(
        r#"{"shapes": [{"name": "A", "constraints": [
            {"kind": "max", "count": 1, "path": "http://x/status", "value": "<http://x/Bad>"},
            {"kind": "max", "count": 0, "path": "http://x/status", "value": "<http://x/Bad>"}
        ]}]}"#,
    );
    let queries = max_queries(&shape);
    assert_eq!(queries[0].kind, MaxQueryKind::TriviallySatisfied);
    let MaxQueryKind::Violator(q) = &queries[1].kind else {
        panic!("max 0 over a constant is a presence check");
    };
    assert_eq!(
        q.serialize(),
        "SELECT DISTINCT ?x WHERE { ?x <http://x/status> <http://x/Bad> . } ORDER BY ?x"
    );
}

#[test]
fn instance_filter_picks_the_shorter_usable_list() {
    let base = min_query(&professor()).unwrap().query;
    let v = Variable::new("p3");
    let valid = vec![Term::iri("http://x/d1")];
    let invalid = vec![Term::iri("http://x/d2"), Term::iri("http://x/d3")];

    let mut q = base.clone();
    assert_eq!(push_instance_filter(&mut q, &v, &[], &[]), None);
    assert!(q.instance_filter.is_none());

    let mut q = base.clone();
    assert_eq!(
        push_instance_filter(&mut q, &v, &valid, &invalid),
        Some(FilterMode::Include)
    );
    assert!(q.serialize().contains(" VALUES ?p3 { <http://x/d1> }"));

    let mut q = base.clone();
    assert_eq!(
        push_instance_filter(&mut q, &v, &[], &invalid),
        Some(FilterMode::Exclude)
    );
    assert!(q
        .serialize()
        .contains(" FILTER(?p3 NOT IN (<http://x/d2>, <http://x/d3>))"));

    // An incomplete (empty) valid list never wins over refutations.
    let mut q = base.clone();
    assert_eq!(
        push_instance_filter(&mut q, &v, &valid[..0], &invalid),
        Some(FilterMode::Exclude)
    );
}

#[test]
fn queries_round_trip_through_text() {
    let mut q = min_query(&professor()).unwrap().query;
    push_instance_filter(
        &mut q,
        &Variable::new("p3"),
        &[Term::iri("http://x/d1"), Term::plain("dept one")],
        &[],
    );
    let paged = q.with_page(100, 30);
    assert!(paged.serialize().ends_with(" LIMIT 100 OFFSET 30"));
    let reparsed = text::parse_select_query(&paged.serialize()).expect("round trip");
    assert_eq!(reparsed, paged);

    let mut q = min_query(&professor()).unwrap().query;
    push_instance_filter(
        &mut q,
        &Variable::new("p3"),
        &[],
        &[Term::iri("http://x/d2"), Term::iri("http://x/d3")],
    );
    let reparsed = text::parse_select_query(&q.serialize()).expect("round trip");
    assert_eq!(reparsed, q);
}

#[test]
fn first_page_leaves_offset_implicit() {
    let q = target_query(&professor()).unwrap().with_page(10, 0);
    assert!(q.serialize().ends_with(" LIMIT 10"));
    assert!(!q.serialize().contains("OFFSET"));
}

// --- partitioning -----------------------------------------------------------

fn filtered_query(mode: FilterMode, n: usize) -> (SelectQuery, Vec<Term>) {
    let shape = first_shape(
        r#"{"shapes": [
            {"name": "A", "constraints": [
                {"kind": "min", "count": 1, "path": "http://x/ref", "shape": "B"}
            ]},
            {"name": "B", "constraints": []}
        ]}"#,
    );
    let mut q = min_query(&shape).unwrap().query;
    let entities: Vec<Term> = (0..n)
        .map(|i| Term::iri(format!("http://x/e{i:02}")))
        .collect();
    q.instance_filter = Some(InstanceFilter {
        variable: Variable::new("p0"),
        mode,
        entities: entities.clone(),
    });
    (q, entities)
}

fn scaffold_len(q: &SelectQuery) -> usize {
    let mut probe = q.clone();
    probe
        .instance_filter
        .as_mut()
        .expect("filtered query")
        .entities
        .clear();
    probe.serialize().len()
}

#[test]
fn unfiltered_queries_are_never_split() {
    let q = target_query(&professor()).unwrap();
    let plan = partition_plan(q.clone(), 10, 10);
    assert_eq!(plan.parts, vec![q]);
    assert!(!plan.dropped_filter);
}

#[test]
fn fitting_filters_stay_in_one_part() {
    let (q, _) = filtered_query(FilterMode::Include, 5);
    let plan = partition_plan(q.clone(), 100_000, 10);
    assert_eq!(plan.parts, vec![q]);
}

#[test]
fn oversized_include_filter_splits_into_exact_chunks() {
    let (q, entities) = filtered_query(FilterMode::Include, 20);
    // Room for three VALUES entries per part: each costs one separator space
    // plus its 14-byte token.
    let max_len = scaffold_len(&q) + PAGING_RESERVE + 3 * 15;
    let plan = partition_plan(q.clone(), max_len, 10);
    assert!(!plan.dropped_filter);
    assert_eq!(plan.parts.len(), 7);
    let mut rejoined = Vec::new();
    for part in &plan.parts {
        assert!(part.serialize().len() + PAGING_RESERVE <= max_len);
        let f = part.instance_filter.as_ref().expect("chunked filter");
        assert_eq!(f.mode, FilterMode::Include);
        assert!(!f.entities.is_empty());
        rejoined.extend(f.entities.iter().cloned());
        let mut without = part.clone();
        without.instance_filter = q.instance_filter.clone();
        assert_eq!(&without, &q, "parts differ only in their filter slice");
    }
    assert_eq!(rejoined, entities, "chunks repartition the original list");
}

#[test]
fn oversized_exclude_filter_truncates_instead_of_splitting() {
    let (q, entities) = filtered_query(FilterMode::Exclude, 20);
    // Room for three NOT IN entries: 14 bytes for the first token, then
    // 2-byte separators.
    let max_len = scaffold_len(&q) + PAGING_RESERVE + 14 + 16 + 16;
    let plan = partition_plan(q.clone(), max_len, 10);
    assert!(!plan.dropped_filter);
    assert_eq!(plan.parts.len(), 1, "exclusions must never span parts");
    let f = plan.parts[0].instance_filter.as_ref().expect("kept prefix");
    assert_eq!(f.mode, FilterMode::Exclude);
    assert_eq!(f.entities, entities[..3].to_vec());
    assert!(plan.parts[0].serialize().len() + PAGING_RESERVE <= max_len);
}

#[test]
fn unusable_filters_are_dropped() {
    // Include: more chunks than max_parts.
    let (q, _) = filtered_query(FilterMode::Include, 20);
    let max_len = scaffold_len(&q) + PAGING_RESERVE + 15;
    let plan = partition_plan(q.clone(), max_len, 10);
    assert!(plan.dropped_filter);
    assert_eq!(plan.parts.len(), 1);
    assert!(plan.parts[0].instance_filter.is_none());

    // Exclude: not even one entity fits.
    let (q, _) = filtered_query(FilterMode::Exclude, 20);
    let plan = partition_plan(q.clone(), scaffold_len(&q) + PAGING_RESERVE, 10);
    assert!(plan.dropped_filter);
    assert_eq!(plan.parts.len(), 1);
    assert!(plan.parts[0].instance_filter.is_none());
}

#[test]
fn selectivity_prefers_filtered_then_more_constrained_queries() {
    let (filtered, _) = filtered_query(FilterMode::Include, 2);
    let plain = min_query(&professor()).unwrap().query;
    let target = target_query(&professor()).unwrap();
    assert!(selectivity_rank(&filtered) < selectivity_rank(&plain));
    assert!(selectivity_rank(&plain) < selectivity_rank(&target));
}
