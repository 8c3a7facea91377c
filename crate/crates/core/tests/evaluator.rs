//! Randomized cross-check of the embedded select evaluator.
//!
//! The evaluator answers star-shaped queries with a clique-counting shortcut
//! instead of enumerating full variable bindings. This suite re-evaluates the
//! same queries with a naive join interpreter — explicit binding enumeration,
//! then distinctness, datatype, and instance filters applied per binding — and
//! requires identical result sets, plus honest truncation flags and lossless
//! page reassembly.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shacltrav_core::data::eval::evaluate;
use shacltrav_core::data::Graph;
use shacltrav_core::query::{
    FilterMode, InstanceFilter, PatternObject, SelectQuery, TriplePattern, Variable, ENTITY_VAR,
};
use shacltrav_core::term::Term;

const EX: &str = "http://ex.org/";
const XSD_STRING: &str = "http://www.w3.org/2001/XMLSchema#string";
const XSD_INTEGER: &str = "http://www.w3.org/2001/XMLSchema#integer";
const PREDICATES: [&str; 4] = ["p0", "p1", "p2", "p3"];

fn entity_pool(n: usize) -> Vec<Term> {
    (0..n).map(|i| Term::iri(format!("{EX}E{i}"))).collect()
}

fn random_object(rng: &mut ChaCha8Rng, pool: &[Term]) -> Term {
    match rng.gen_range(0..100) {
        0..=39 => pool[rng.gen_range(0..pool.len())].clone(),
        40..=59 => Term::plain(format!("v{}", rng.gen_range(0..3))),
        60..=84 => Term::typed(rng.gen_range(0..4).to_string(), XSD_INTEGER),
        _ => Term::typed(
            ["a", "b"][rng.gen_range(0..2)].to_string(),
            XSD_STRING,
        ),
    }
}

/// A small dense graph: few predicates, shared object vocabulary, and
/// multi-valued properties so distinctness cliques of size two and three
/// actually find enough values.
fn random_graph(rng: &mut ChaCha8Rng) -> (Graph, Vec<Term>) {
    let pool = entity_pool(rng.gen_range(4..=14));
    let mut graph = Graph::new();
    for subject in &pool {
        for predicate in PREDICATES {
            if rng.gen_bool(0.2) {
                continue;
            }
            for _ in 0..rng.gen_range(2..=5) {
                graph.insert(
                    subject.clone(),
                    format!("{EX}{predicate}"),
                    random_object(rng, &pool),
                );
            }
        }
    }
    (graph, pool)
}

/// Build a random query inside the evaluator's accepted fragment: star-shaped
/// patterns on the entity variable, distinctness as complete single-predicate
/// cliques with a shared datatype filter, at most one projected variable per
/// clique, and an optional instance filter on the entity or a projected
/// variable.
fn random_query(rng: &mut ChaCha8Rng, graph: &Graph, pool: &[Term]) -> SelectQuery {
    let entity = Variable::new(ENTITY_VAR);
    // Constant objects are mostly drawn from edges that exist, so constant
    // patterns restrict rather than annihilate the result set.
    let present: Vec<(String, Term)> = graph
        .triples()
        .map(|(_, p, o)| (p.to_string(), o.clone()))
        .collect();
    let mut patterns = Vec::new();
    let mut unequal_pairs = Vec::new();
    let mut datatype_filters = Vec::new();
    let mut projection = vec![entity.clone()];
    let mut var_counter = 0usize;

    let constants_only = rng.gen_bool(0.1);
    let clique_count = if constants_only { 0 } else { rng.gen_range(1..=3) };
    for _ in 0..clique_count {
        let predicate = format!("{EX}{}", PREDICATES[rng.gen_range(0..PREDICATES.len())]);
        let size = match rng.gen_range(0..100) {
            0..=49 => 1,
            50..=84 => 2,
            _ => 3,
        };
        let members: Vec<Variable> = (0..size)
            .map(|_| {
                var_counter += 1;
                Variable::new(format!("f{var_counter}"))
            })
            .collect();
        for member in &members {
            patterns.push(TriplePattern {
                subject: entity.clone(),
                predicate: predicate.clone(),
                object: PatternObject::Var(member.clone()),
            });
        }
        for i in 0..size {
            for j in i + 1..size {
                unequal_pairs.push((members[i].clone(), members[j].clone()));
            }
        }
        if rng.gen_bool(0.35) {
            let datatype = if rng.gen_bool(0.5) { XSD_INTEGER } else { XSD_STRING };
            for member in &members {
                datatype_filters.push((member.clone(), datatype.to_string()));
            }
            // Occasionally stack a second filter on the same clique; it must
            // stay identical across members to remain in the fragment.
            if rng.gen_bool(0.1) {
                let second = if rng.gen_bool(0.5) { XSD_INTEGER } else { XSD_STRING };
                for member in &members {
                    datatype_filters.push((member.clone(), second.to_string()));
                }
            }
        }
        if rng.gen_bool(0.5) {
            projection.push(members[0].clone());
        }
    }

    let constant_count = if constants_only {
        rng.gen_range(1..=2)
    } else {
        rng.gen_range(0..=2)
    };
    for _ in 0..constant_count {
        let (predicate, object) = if !present.is_empty() && rng.gen_bool(0.7) {
            present[rng.gen_range(0..present.len())].clone()
        } else {
            (
                format!("{EX}{}", PREDICATES[rng.gen_range(0..PREDICATES.len())]),
                random_object(rng, pool),
            )
        };
        patterns.push(TriplePattern {
            subject: entity.clone(),
            predicate,
            object: PatternObject::Term(object),
        });
    }

    let instance_filter = if rng.gen_bool(0.35) {
        let variable = if projection.len() == 1 || rng.gen_bool(0.5) {
            entity.clone()
        } else {
            projection[rng.gen_range(1..projection.len())].clone()
        };
        let mode = if rng.gen_bool(0.5) { FilterMode::Include } else { FilterMode::Exclude };
        let entities = (0..rng.gen_range(1..=4))
            .map(|_| match rng.gen_range(0..100) {
                0..=54 => pool[rng.gen_range(0..pool.len())].clone(),
                55..=79 => Term::iri(format!("{EX}other{}", rng.gen_range(0..3))),
                _ => random_object(rng, pool),
            })
            .collect();
        Some(InstanceFilter { variable, mode, entities })
    } else {
        None
    };

    let (limit, offset) = if rng.gen_bool(0.25) {
        (
            Some(rng.gen_range(0..=12)),
            rng.gen_bool(0.5).then(|| rng.gen_range(1..=4)),
        )
    } else {
        (None, None)
    };

    SelectQuery {
        projection,
        patterns,
        unequal_pairs,
        datatype_filters,
        instance_filter,
        order_by: true,
        limit,
        offset,
    }
}

/// Naive reference: enumerate every binding of the pattern variables per
/// subject, then apply the filters binding by binding. Quadratic and
/// allocation-happy, but obviously faithful to join semantics.
fn reference_rows(query: &SelectQuery, graph: &Graph) -> Vec<Vec<Term>> {
    let entity = &query.projection[0];
    let mut rows = Vec::new();
    for subject in graph.subjects() {
        let mut bindings: Vec<HashMap<&Variable, &Term>> = vec![HashMap::new()];
        for pattern in &query.patterns {
            let objects = graph.objects(subject, &pattern.predicate);
            match &pattern.object {
                PatternObject::Term(t) => {
                    if !objects.contains(t) {
                        bindings.clear();
                    }
                }
                PatternObject::Var(v) => {
                    let mut next = Vec::new();
                    for binding in &bindings {
                        match binding.get(v) {
                            Some(&bound) => {
                                if objects.contains(bound) {
                                    next.push(binding.clone());
                                }
                            }
                            None => {
                                for object in objects {
                                    let mut extended = binding.clone();
                                    extended.insert(v, object);
                                    next.push(extended);
                                }
                            }
                        }
                    }
                    bindings = next;
                }
            }
            if bindings.is_empty() {
                break;
            }
        }
        'bindings: for binding in bindings {
            for (a, b) in &query.unequal_pairs {
                if binding[a] == binding[b] {
                    continue 'bindings;
                }
            }
            for (v, datatype) in &query.datatype_filters {
                let ok = matches!(
                    binding[v],
                    Term::Literal(l) if l.datatype.as_deref() == Some(datatype.as_str())
                );
                if !ok {
                    continue 'bindings;
                }
            }
            if let Some(filter) = &query.instance_filter {
                let value: &Term = if filter.variable == *entity {
                    subject
                } else {
                    binding[&filter.variable]
                };
                let listed = filter.entities.contains(value);
                let keep = match filter.mode {
                    FilterMode::Include => listed,
                    FilterMode::Exclude => !listed,
                };
                if !keep {
                    continue 'bindings;
                }
            }
            let mut row = Vec::with_capacity(query.projection.len());
            row.push(subject.clone());
            for v in &query.projection[1..] {
                row.push(binding[v].clone());
            }
            rows.push(row);
        }
    }
    rows.sort();
    rows.dedup();
    rows
}

fn expected_window(query: &SelectQuery, full: Vec<Vec<Term>>) -> Vec<Vec<Term>> {
    let offset = query.offset.unwrap_or(0) as usize;
    let mut rows = if offset >= full.len() {
        Vec::new()
    } else {
        let mut full = full;
        full.split_off(offset)
    };
    if let Some(limit) = query.limit {
        rows.truncate(limit as usize);
    }
    rows
}

#[test]
fn matches_reference_join_semantics_on_random_queries() {
    let mut nonempty = 0usize;
    let mut filtered = 0usize;
    let mut windowed = 0usize;
    for seed in 0..400u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (graph, pool) = random_graph(&mut rng);
        let query = random_query(&mut rng, &graph, &pool);
        let outcome = evaluate(&query, &graph, usize::MAX)
            .unwrap_or_else(|e| panic!("seed {seed}: fragment-legal query rejected: {e}\n{}", query.serialize()));
        let expected = expected_window(&query, reference_rows(&query, &graph));
        assert_eq!(
            outcome.rows,
            expected,
            "seed {seed} diverged\nquery: {}",
            query.serialize()
        );
        assert!(!outcome.truncated, "seed {seed}: uncapped run reported truncation");
        if !outcome.rows.is_empty() {
            nonempty += 1;
        }
        if query.instance_filter.is_some() {
            filtered += 1;
        }
        if query.limit.is_some() || query.offset.is_some() {
            windowed += 1;
        }
    }
    // The sweep must actually exercise the machinery, not vacuously pass on
    // empty results.
    assert!(nonempty >= 150, "only {nonempty}/400 cases produced rows");
    assert!(filtered >= 80, "only {filtered}/400 cases carried an instance filter");
    assert!(windowed >= 50, "only {windowed}/400 cases used limit/offset");
}

#[test]
fn answer_caps_report_truncation_and_keep_a_prefix() {
    let mut exercised = 0usize;
    for seed in 400..700u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (graph, pool) = random_graph(&mut rng);
        let mut query = random_query(&mut rng, &graph, &pool);
        query.limit = None;
        query.offset = None;
        let full = evaluate(&query, &graph, usize::MAX).expect("fragment-legal");
        if full.rows.len() < 2 {
            continue;
        }
        let cap = full.rows.len() / 2;
        let capped = evaluate(&query, &graph, cap).expect("fragment-legal");
        assert_eq!(capped.rows, full.rows[..cap], "seed {seed}: cap must keep a sorted prefix");
        assert!(capped.truncated, "seed {seed}: cap below cardinality must flag truncation");
        let roomy = evaluate(&query, &graph, full.rows.len()).expect("fragment-legal");
        assert_eq!(roomy.rows, full.rows);
        assert!(!roomy.truncated, "seed {seed}: cap at cardinality is not truncation");
        exercised += 1;
    }
    assert!(exercised >= 70, "only {exercised}/300 cases had enough rows to cap");
}

#[test]
fn page_reassembly_covers_the_full_result_set() {
    let mut exercised = 0usize;
    for seed in 700..900u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (graph, pool) = random_graph(&mut rng);
        let mut query = random_query(&mut rng, &graph, &pool);
        query.limit = None;
        query.offset = None;
        // Filters shrink result sets and are already exercised against the
        // reference interpreter; paging wants volume.
        query.instance_filter = None;
        let full = evaluate(&query, &graph, usize::MAX).expect("fragment-legal");
        for page_size in [1u64, 3, 7] {
            let mut collected: Vec<Vec<Term>> = Vec::new();
            let mut offset = 0u64;
            loop {
                let page = evaluate(&query.with_page(page_size, offset), &graph, usize::MAX)
                    .expect("fragment-legal");
                assert!(!page.truncated, "seed {seed}: pages are never capped here");
                let len = page.rows.len();
                collected.extend(page.rows);
                if (len as u64) < page_size {
                    break;
                }
                offset += page_size;
            }
            assert_eq!(
                collected, full.rows,
                "seed {seed}: page size {page_size} lost or reordered rows"
            );
        }
        if full.rows.len() > 3 {
            exercised += 1;
        }
    }
    assert!(exercised >= 40, "only {exercised}/200 cases spanned multiple pages");
}
