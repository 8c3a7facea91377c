//! Shared fixtures for integration tests: the four-shape campus schema with
//! its hand-checked entity graph, plus helpers for comparing engine output
//! against the reference validator.

#![allow(dead_code)]

use std::collections::BTreeMap;

use shacltrav_core::data::ntriples::parse_graph;
use shacltrav_core::data::Graph;
use shacltrav_core::oracle::OracleResult;
use shacltrav_core::schema::{parse_schema, ShapeSchema};
use shacltrav_core::term::{Term, RDF_TYPE};
use shacltrav_core::validation::ValidationReport;

pub const EX: &str = "http://ex.org/";

/// Four shapes with nine min and five max constraints (1/1, 2/2, 5/1, 1/1):
/// universities must be named; departments belong to exactly one conforming
/// university; professors carry full contact details, a degree from a
/// conforming university, and a conforming employer; courses are taught by a
/// conforming professor and by at most two parties overall.
pub fn university_schema_json() -> String {
    serde_json::json!({
        "shapes": [
            {"name": "University", "targetClass": format!("{EX}University"), "constraints": [
                {"kind": "min", "count": 1, "path": format!("{EX}name")},
                {"kind": "max", "count": 1, "path": format!("{EX}name")}
            ]},
            {"name": "Department", "targetClass": format!("{EX}Department"), "constraints": [
                {"kind": "min", "count": 1, "path": format!("{EX}name")},
                {"kind": "min", "count": 1, "path": format!("{EX}subOrganizationOf"), "shape": "University"},
                {"kind": "max", "count": 1, "path": format!("{EX}name")},
                {"kind": "max", "count": 1, "path": format!("{EX}subOrganizationOf")}
            ]},
            {"name": "Professor", "targetClass": format!("{EX}Professor"), "constraints": [
                {"kind": "min", "count": 1, "path": format!("{EX}name")},
                {"kind": "min", "count": 1, "path": format!("{EX}emailAddress")},
                {"kind": "min", "count": 1, "path": format!("{EX}telephone")},
                {"kind": "min", "count": 1, "path": format!("{EX}degreeFrom"), "shape": "University"},
                {"kind": "min", "count": 1, "path": format!("{EX}worksFor"), "shape": "Department"},
                {"kind": "max", "count": 1, "path": format!("{EX}name")}
            ]},
            {"name": "Course", "targetClass": format!("{EX}Course"), "constraints": [
                {"kind": "min", "count": 1, "path": format!("{EX}taughtBy"), "shape": "Professor"},
                {"kind": "max", "count": 2, "path": format!("{EX}taughtBy")}
            ]}
        ]
    })
    .to_string()
}

pub fn university_schema() -> ShapeSchema {
    parse_schema(&university_schema_json()).expect("fixture schema parses")
}

/// Thirteen targeted entities covering every verdict route: direct
/// constraint failures, cascaded failures through invalid neighbors, and
/// max-cardinality violations.
pub fn university_graph() -> Graph {
    let mut text = String::new();
    let mut triple = |s: &str, p: &str, o: &str| {
        text.push_str(&format!("<{EX}{s}> <{p}> {o} .\n"));
    };
    let class = |c: &str| format!("<{EX}{c}>");
    let node = |n: &str| format!("<{EX}{n}>");
    let name = format!("{EX}name");
    let email = format!("{EX}emailAddress");
    let tel = format!("{EX}telephone");
    let degree = format!("{EX}degreeFrom");
    let works = format!("{EX}worksFor");
    let suborg = format!("{EX}subOrganizationOf");
    let taught = format!("{EX}taughtBy");

    // Universities: u1 conforms; u2 is unnamed.
    triple("u1", RDF_TYPE, &class("University"));
    triple("u1", &name, "\"Uni One\"");
    triple("u2", RDF_TYPE, &class("University"));

    // Departments: d1 conforms; d2 belongs to the bad university; d3 claims
    // two parents.
    triple("d1", RDF_TYPE, &class("Department"));
    triple("d1", &name, "\"CS\"");
    triple("d1", &suborg, &node("u1"));
    triple("d2", RDF_TYPE, &class("Department"));
    triple("d2", &name, "\"Math\"");
    triple("d2", &suborg, &node("u2"));
    triple("d3", RDF_TYPE, &class("Department"));
    triple("d3", &name, "\"Bio\"");
    triple("d3", &suborg, &node("u1"));
    triple("d3", &suborg, &node("u2"));

    // Professors: p1 conforms; p2's degree is from the bad university; p3
    // has no email; p4 has two names.
    triple("p1", RDF_TYPE, &class("Professor"));
    triple("p1", &name, "\"Ann\"");
    triple("p1", &email, "\"ann@ex.org\"");
    triple("p1", &tel, "\"555-0001\"");
    triple("p1", &degree, &node("u1"));
    triple("p1", &works, &node("d1"));
    triple("p2", RDF_TYPE, &class("Professor"));
    triple("p2", &name, "\"Bob\"");
    triple("p2", &email, "\"bob@ex.org\"");
    triple("p2", &tel, "\"555-0002\"");
    triple("p2", &degree, &node("u2"));
    triple("p2", &works, &node("d1"));
    triple("p3", RDF_TYPE, &class("Professor"));
    triple("p3", &name, "\"Cid\"");
    triple("p3", &tel, "\"555-0003\"");
    triple("p3", &degree, &node("u1"));
    triple("p3", &works, &node("d1"));
    triple("p4", RDF_TYPE, &class("Professor"));
    triple("p4", &name, "\"Dee\"");
    triple("p4", &name, "\"Dee Jr.\"");
    triple("p4", &email, "\"dee@ex.org\"");
    triple("p4", &tel, "\"555-0004\"");
    triple("p4", &degree, &node("u1"));
    triple("p4", &works, &node("d1"));

    // Courses: c1 conforms; c2 is taught only by the bad professor; c3 has
    // three teachers; c4's second teacher is an untyped stray but the count
    // stays legal.
    triple("c1", RDF_TYPE, &class("Course"));
    triple("c1", &taught, &node("p1"));
    triple("c2", RDF_TYPE, &class("Course"));
    triple("c2", &taught, &node("p2"));
    triple("c3", RDF_TYPE, &class("Course"));
    triple("c3", &taught, &node("p1"));
    triple("c3", &taught, &node("x1"));
    triple("c3", &taught, &node("x2"));
    triple("c4", RDF_TYPE, &class("Course"));
    triple("c4", &taught, &node("p1"));
    triple("c4", &taught, &node("x1"));

    parse_graph(&text).expect("fixture graph parses")
}

/// The hand-derived verdicts for [`university_graph`], keyed like
/// [`ValidationReport::verdict_map`].
pub fn university_expected() -> BTreeMap<(String, String), bool> {
    let mut expected = BTreeMap::new();
    let mut put = |shape: &str, entity: &str, verdict: bool| {
        expected.insert(
            (shape.to_string(), format!("<{EX}{entity}>")),
            verdict,
        );
    };
    put("University", "u1", true);
    put("University", "u2", false);
    put("Department", "d1", true);
    put("Department", "d2", false);
    put("Department", "d3", false);
    put("Professor", "p1", true);
    put("Professor", "p2", false);
    put("Professor", "p3", false);
    put("Professor", "p4", false);
    put("Course", "c1", true);
    put("Course", "c2", false);
    put("Course", "c3", false);
    put("Course", "c4", true);
    expected
}

/// Reference-validator target verdicts in [`ValidationReport::verdict_map`]
/// form, for direct comparison with engine output.
pub fn oracle_verdict_map(
    schema: &ShapeSchema,
    oracle: &OracleResult,
) -> BTreeMap<(String, String), bool> {
    let mut map = BTreeMap::new();
    for (s, shape) in schema.shapes().iter().enumerate() {
        for (entity, &verdict) in &oracle.targets[s] {
            map.insert((shape.name.clone(), entity.to_token()), verdict);
        }
    }
    map
}

/// Entity tokens in trace order for one shape, to pin decision ordering.
pub fn trace_entities(report: &ValidationReport, shape: &str) -> Vec<String> {
    report
        .trace
        .iter()
        .filter(|e| e.shape == shape)
        .map(|e| e.entity.to_token())
        .collect()
}

pub fn iri(suffix: &str) -> Term {
    Term::iri(format!("{EX}{suffix}"))
}

// --- randomized schema/graph generation -----------------------------------
//
// Cases are deterministic in their seed so any failure reproduces from the
// seed alone. Schemas draw from small shared pools of predicates, classes,
// datatypes, and constants so that graphs actually collide with constraint
// paths; graphs mix entity-valued and literal-valued objects.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shacltrav_core::schema::graph::{build_dependency_graph, stratify};

pub const XSD_STRING: &str = "http://www.w3.org/2001/XMLSchema#string";
pub const XSD_INTEGER: &str = "http://www.w3.org/2001/XMLSchema#integer";

const PREDICATES: [&str; 6] = ["p0", "p1", "p2", "p3", "p4", "p5"];
const CLASSES: [&str; 4] = ["C0", "C1", "C2", "C3"];

pub struct GeneratedCase {
    pub seed: u64,
    pub schema: ShapeSchema,
    pub graph: Graph,
}

/// A schema/graph pair generated deterministically from `seed`. Schemas that
/// put a negative reference inside a recursive cluster are rejected by
/// construction-time checks, so generation retries with a derived seed until
/// a stratifiable schema appears.
pub fn random_case(seed: u64) -> GeneratedCase {
    let mut attempt = 0u64;
    let schema = loop {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (attempt.wrapping_mul(0x9e37_79b9)) ^ 0xa5a5);
        let doc = random_schema_doc(&mut rng);
        if let Ok(schema) = parse_schema(&doc) {
            let graph = build_dependency_graph(&schema);
            if stratify(&schema, &graph).is_ok() {
                break schema;
            }
        }
        attempt += 1;
        assert!(attempt < 200, "seed {seed}: no stratifiable schema found");
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x2545_f491_4f6c_dd1d));
    let graph = random_graph(&mut rng, &schema);
    GeneratedCase {
        seed,
        schema,
        graph,
    }
}

fn random_schema_doc(rng: &mut ChaCha8Rng) -> String {
    let n_shapes = rng.gen_range(1..=6);
    let names: Vec<String> = (0..n_shapes).map(|i| format!("S{i}")).collect();
    let shapes: Vec<serde_json::Value> = (0..n_shapes)
        .map(|i| {
            let mut shape = serde_json::Map::new();
            shape.insert("name".into(), names[i].clone().into());
            match rng.gen_range(0..10) {
                0..=6 => {
                    let class = CLASSES[rng.gen_range(0..CLASSES.len())];
                    shape.insert("targetClass".into(), format!("{EX}{class}").into());
                }
                7 => {
                    let p = PREDICATES[rng.gen_range(0..PREDICATES.len())];
                    shape.insert(
                        "targetQuery".into(),
                        format!("SELECT ?x WHERE {{ ?x <{EX}{p}> ?v . }}").into(),
                    );
                }
                _ => {}
            }
            let n_constraints = rng.gen_range(1..=3);
            let constraints: Vec<serde_json::Value> = (0..n_constraints)
                .map(|_| random_constraint(rng, &names))
                .collect();
            shape.insert("constraints".into(), constraints.into());
            serde_json::Value::Object(shape)
        })
        .collect();
    serde_json::json!({ "shapes": shapes }).to_string()
}

fn random_constraint(rng: &mut ChaCha8Rng, names: &[String]) -> serde_json::Value {
    let mut c = serde_json::Map::new();
    let min = rng.gen_bool(0.55);
    c.insert("kind".into(), if min { "min" } else { "max" }.into());
    let path = PREDICATES[rng.gen_range(0..PREDICATES.len())];
    c.insert("path".into(), format!("{EX}{path}").into());
    if rng.gen_bool(0.4) {
        // Shape reference, possibly to itself, possibly negated (negation
        // flips kind and count during parsing).
        c.insert(
            "shape".into(),
            names[rng.gen_range(0..names.len())].clone().into(),
        );
        c.insert(
            "count".into(),
            if min {
                rng.gen_range(1..=3)
            } else {
                rng.gen_range(0..=2)
            }
            .into(),
        );
        if rng.gen_bool(0.2) {
            c.insert("negated".into(), true.into());
        }
    } else {
        match rng.gen_range(0..10) {
            0..=2 => {
                let value = match rng.gen_range(0..3) {
                    0 => format!("<{EX}E{}>", rng.gen_range(0..6)),
                    1 => format!("\"v{}\"", rng.gen_range(0..4)),
                    _ => format!("\"{}\"^^<{XSD_INTEGER}>", rng.gen_range(0..4)),
                };
                c.insert("value".into(), value.into());
                // A specific-value requirement is at most one ("has it") for
                // min; max keeps its count.
                c.insert(
                    "count".into(),
                    if min { 1 } else { rng.gen_range(0..=1) }.into(),
                );
            }
            3..=4 => {
                let dt = if rng.gen_bool(0.5) {
                    XSD_STRING
                } else {
                    XSD_INTEGER
                };
                c.insert("datatype".into(), dt.into());
                c.insert(
                    "count".into(),
                    if min {
                        rng.gen_range(1..=3)
                    } else {
                        rng.gen_range(0..=2)
                    }
                    .into(),
                );
            }
            _ => {
                c.insert(
                    "count".into(),
                    if min {
                        rng.gen_range(1..=3)
                    } else {
                        rng.gen_range(0..=2)
                    }
                    .into(),
                );
            }
        }
    }
    serde_json::Value::Object(c)
}

fn random_graph(rng: &mut ChaCha8Rng, schema: &ShapeSchema) -> Graph {
    let mut graph = Graph::new();
    let n_entities = rng.gen_range(5..=40);
    let entities: Vec<Term> = (0..n_entities).map(|i| iri(&format!("E{i}"))).collect();

    // Bias typing towards classes the schema actually targets so target sets
    // are well-populated.
    let mut targeted_classes: Vec<String> = schema
        .shapes()
        .iter()
        .filter_map(|s| match &s.target {
            Some(shacltrav_core::schema::TargetDefinition::Class(c)) => Some(c.clone()),
            _ => None,
        })
        .collect();
    targeted_classes.dedup();

    for e in &entities {
        let n_types = rng.gen_range(0..=2);
        for _ in 0..n_types {
            let class = if !targeted_classes.is_empty() && rng.gen_bool(0.7) {
                targeted_classes[rng.gen_range(0..targeted_classes.len())].clone()
            } else {
                format!("{EX}{}", CLASSES[rng.gen_range(0..CLASSES.len())])
            };
            graph.insert(e.clone(), RDF_TYPE, Term::iri(class));
        }
        for p in PREDICATES {
            if rng.gen_bool(0.55) {
                continue;
            }
            let n_objects = rng.gen_range(1..=3);
            for _ in 0..n_objects {
                let object = match rng.gen_range(0..10) {
                    0..=4 => entities[rng.gen_range(0..entities.len())].clone(),
                    5..=6 => Term::plain(format!("v{}", rng.gen_range(0..4))),
                    7..=8 => Term::typed(format!("{}", rng.gen_range(0..4)), XSD_INTEGER),
                    _ => Term::typed(format!("s{}", rng.gen_range(0..3)), XSD_STRING),
                };
                graph.insert(e.clone(), format!("{EX}{p}"), object);
            }
        }
    }
    // A handful of off-pool triples so some subjects match no constraint.
    for _ in 0..rng.gen_range(0..4) {
        let e = entities[rng.gen_range(0..entities.len())].clone();
        graph.insert(e, format!("{EX}unrelated"), Term::plain("noise"));
    }
    graph
}
