//! Synthetic campus testbeds.
//!
//! A testbed is a schema tier (3, 4, 7, or 14 shapes), an entity population
//! scaled to a requested triple count, and a deterministic corruption pass
//! that drives the share of invalid targets toward a requested percentage.
//! Ground truth comes from the reference validator and is written alongside
//! the data as a manifest, so downstream runs can be checked byte-for-byte.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use shacltrav_core::data::ntriples::serialize_graph;
use shacltrav_core::data::Graph;
use shacltrav_core::oracle::{validate_naive, OracleResult};
use shacltrav_core::schema::{parse_schema, ShapeSchema};
use shacltrav_core::term::{Term, RDF_TYPE};

use crate::run::CliError;

/// Namespace for every generated class, property, and entity.
pub const NS: &str = "http://campus.example/";
const XSD_INT: &str = "http://www.w3.org/2001/XMLSchema#integer";

pub const SCHEMA_FILE: &str = "schema.json";
pub const DATA_FILE: &str = "data.nt";
pub const MANIFEST_FILE: &str = "manifest.json";

/// How closely the realized invalid percentage must match the request.
pub const INVALID_PCT_TOLERANCE: f64 = 2.0;

/// Fixed schema tiers, named by shape count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Tier {
    /// Three shapes, 16 constraints: university, department, professor.
    Small,
    /// Four shapes: the walkthrough campus with courses on top.
    Walkthrough,
    /// Seven shapes, 36 constraints: adds courses, students, publications,
    /// and research groups, including a capped publication-author reference.
    Medium,
    /// Fourteen shapes, 112 constraints: the full campus with four staff
    /// ranks, two course levels, two student levels, and assistants.
    Large,
}

impl Tier {
    pub fn from_shape_count(n: usize) -> Option<Tier> {
        match n {
            3 => Some(Tier::Small),
            4 => Some(Tier::Walkthrough),
            7 => Some(Tier::Medium),
            14 => Some(Tier::Large),
            _ => None,
        }
    }

    pub fn shape_count(self) -> usize {
        match self {
            Tier::Small => 3,
            Tier::Walkthrough => 4,
            Tier::Medium => 7,
            Tier::Large => 14,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Tier::Small => "campus3",
            Tier::Walkthrough => "campus4",
            Tier::Medium => "campus7",
            Tier::Large => "campus14",
        }
    }
}

/// Request for one generated testbed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchSpec {
    /// Schema tier, selected by shape count (3, 4, 7, or 14).
    pub shapes: usize,
    /// Approximate triple count to aim for.
    pub scale: usize,
    /// Requested percentage of invalid targets, 0..=100.
    pub invalid_pct: f64,
    /// Seed for corruption placement.
    pub seed: u64,
}

/// A generated testbed ready to write or validate in place.
pub struct Testbed {
    pub tier: Tier,
    pub schema_doc: String,
    pub schema: ShapeSchema,
    pub graph: Graph,
    pub manifest: Manifest,
}

/// Ground truth and provenance for one generated testbed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tier: String,
    pub shapes: usize,
    pub scale_requested: usize,
    pub invalid_pct_requested: f64,
    pub seed: u64,
    pub units: usize,
    pub triples: usize,
    pub targets: usize,
    pub invalid: usize,
    pub realized_invalid_pct: f64,
    pub within_tolerance: bool,
    pub corrupted_entities: usize,
    /// Corruption operator label -> number of entities it was applied to.
    pub operations: BTreeMap<String, usize>,
    /// Shape name -> entity token -> expected verdict.
    pub verdicts: BTreeMap<String, BTreeMap<String, bool>>,
}

// --- corruption operators --------------------------------------------------
//
// Every operator flips its own entity to invalid and can only push other
// entities toward invalid (dropped support, oversized value sets, dangling
// references), never rescue one. That monotonicity is what lets the
// percentage search below converge on a nested prefix of one shuffle.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Corruption {
    /// Remove every value on a mandatory path.
    Drop(&'static str),
    /// Add `extra` values beyond a path's cap; dangling IRIs when `phantom`,
    /// fresh literals otherwise.
    Pad {
        path: &'static str,
        extra: usize,
        phantom: bool,
    },
    /// Replace every value on a reference path with one dangling IRI.
    Redirect(&'static str),
}

impl Corruption {
    fn label(self) -> String {
        match self {
            Corruption::Drop(path) => format!("drop-mandatory:{path}"),
            Corruption::Pad { path, .. } => format!("pad-beyond-cap:{path}"),
            Corruption::Redirect(path) => format!("redirect-to-dangling:{path}"),
        }
    }
}

/// One entity class in a tier: its shape name, entity prefix, population per
/// scale unit, and the corruption operators that apply to it.
struct ClassDef {
    name: &'static str,
    prefix: &'static str,
    per_unit: usize,
    menu: &'static [Corruption],
}

const fn class(
    name: &'static str,
    prefix: &'static str,
    per_unit: usize,
    menu: &'static [Corruption],
) -> ClassDef {
    ClassDef {
        name,
        prefix,
        per_unit,
        menu,
    }
}

const SMALL: &[ClassDef] = &[
    class(
        "University",
        "u",
        1,
        &[
            Corruption::Drop("name"),
            Corruption::Pad {
                path: "foundingYear",
                extra: 1,
                phantom: false,
            },
        ],
    ),
    class(
        "Department",
        "d",
        4,
        &[
            Corruption::Redirect("subOrganizationOf"),
            Corruption::Drop("abbreviation"),
            Corruption::Pad {
                path: "name",
                extra: 1,
                phantom: false,
            },
        ],
    ),
    class(
        "Professor",
        "p",
        30,
        &[
            Corruption::Drop("emailAddress"),
            Corruption::Redirect("worksFor"),
            Corruption::Pad {
                path: "emailAddress",
                extra: 1,
                phantom: false,
            },
        ],
    ),
];

const WALKTHROUGH: &[ClassDef] = &[
    class(
        "University",
        "u",
        1,
        &[
            Corruption::Drop("name"),
            Corruption::Pad {
                path: "name",
                extra: 1,
                phantom: false,
            },
            Corruption::Drop("foundingYear"),
        ],
    ),
    class(
        "Department",
        "d",
        4,
        &[
            Corruption::Redirect("subOrganizationOf"),
            Corruption::Drop("name"),
            Corruption::Pad {
                path: "subOrganizationOf",
                extra: 1,
                phantom: true,
            },
        ],
    ),
    class(
        "Professor",
        "p",
        25,
        &[
            Corruption::Drop("emailAddress"),
            Corruption::Redirect("worksFor"),
            Corruption::Pad {
                path: "telephone",
                extra: 2,
                phantom: false,
            },
            Corruption::Drop("telephone"),
            Corruption::Redirect("degreeFrom"),
        ],
    ),
    class(
        "Course",
        "c",
        40,
        &[
            Corruption::Redirect("taughtBy"),
            Corruption::Pad {
                path: "taughtBy",
                extra: 2,
                phantom: true,
            },
        ],
    ),
];

const MEDIUM: &[ClassDef] = &[
    class(
        "University",
        "u",
        1,
        &[
            Corruption::Drop("name"),
            Corruption::Pad {
                path: "foundingYear",
                extra: 1,
                phantom: false,
            },
        ],
    ),
    class(
        "Department",
        "d",
        4,
        &[
            Corruption::Redirect("subOrganizationOf"),
            Corruption::Drop("abbreviation"),
        ],
    ),
    class(
        "Professor",
        "p",
        24,
        &[
            Corruption::Drop("emailAddress"),
            Corruption::Pad {
                path: "telephone",
                extra: 1,
                phantom: false,
            },
            Corruption::Redirect("worksFor"),
        ],
    ),
    class(
        "Course",
        "c",
        30,
        &[
            Corruption::Redirect("taughtBy"),
            Corruption::Pad {
                path: "taughtBy",
                extra: 2,
                phantom: true,
            },
        ],
    ),
    class(
        "GraduateStudent",
        "gs",
        40,
        &[
            Corruption::Redirect("advisor"),
            Corruption::Drop("memberOf"),
            Corruption::Pad {
                path: "name",
                extra: 1,
                phantom: false,
            },
        ],
    ),
    class(
        "Publication",
        "pub",
        20,
        &[
            Corruption::Drop("title"),
            Corruption::Redirect("publicationAuthor"),
        ],
    ),
    class(
        "ResearchGroup",
        "rg",
        6,
        &[Corruption::Redirect("subOrganizationOf")],
    ),
];

const LARGE: &[ClassDef] = &[
    class(
        "University",
        "u",
        1,
        &[
            Corruption::Drop("name"),
            Corruption::Pad {
                path: "homepage",
                extra: 1,
                phantom: false,
            },
            Corruption::Drop("foundingYear"),
        ],
    ),
    class(
        "Department",
        "d",
        3,
        &[
            Corruption::Redirect("subOrganizationOf"),
            Corruption::Drop("abbreviation"),
            Corruption::Pad {
                path: "homepage",
                extra: 1,
                phantom: false,
            },
        ],
    ),
    class(
        "FullProfessor",
        "fp",
        6,
        &[
            Corruption::Drop("emailAddress"),
            Corruption::Redirect("worksFor"),
            Corruption::Pad {
                path: "telephone",
                extra: 1,
                phantom: false,
            },
        ],
    ),
    class(
        "AssociateProfessor",
        "ap",
        8,
        &[
            Corruption::Drop("emailAddress"),
            Corruption::Redirect("degreeFrom"),
            Corruption::Pad {
                path: "name",
                extra: 1,
                phantom: false,
            },
        ],
    ),
    class(
        "AssistantProfessor",
        "asp",
        8,
        &[
            Corruption::Drop("telephone"),
            Corruption::Redirect("worksFor"),
        ],
    ),
    class(
        "Lecturer",
        "lec",
        10,
        &[
            Corruption::Drop("emailAddress"),
            Corruption::Redirect("degreeFrom"),
            Corruption::Pad {
                path: "telephone",
                extra: 1,
                phantom: false,
            },
        ],
    ),
    class(
        "Course",
        "c",
        16,
        &[
            Corruption::Redirect("taughtBy"),
            Corruption::Pad {
                path: "taughtBy",
                extra: 2,
                phantom: true,
            },
            Corruption::Redirect("offeredBy"),
        ],
    ),
    class(
        "GraduateCourse",
        "gc",
        10,
        &[
            Corruption::Redirect("taughtBy"),
            Corruption::Pad {
                path: "offeredBy",
                extra: 1,
                phantom: true,
            },
        ],
    ),
    class(
        "GraduateStudent",
        "gs",
        20,
        &[
            Corruption::Redirect("advisor"),
            Corruption::Drop("memberOf"),
            Corruption::Pad {
                path: "takesCourse",
                extra: 5,
                phantom: true,
            },
        ],
    ),
    class(
        "UndergraduateStudent",
        "us",
        40,
        &[
            Corruption::Drop("emailAddress"),
            Corruption::Pad {
                path: "takesCourse",
                extra: 4,
                phantom: true,
            },
            Corruption::Redirect("memberOf"),
        ],
    ),
    class(
        "Publication",
        "pub",
        14,
        &[
            Corruption::Drop("title"),
            Corruption::Redirect("publicationAuthor"),
            Corruption::Pad {
                path: "venue",
                extra: 1,
                phantom: false,
            },
        ],
    ),
    class(
        "ResearchGroup",
        "rg",
        3,
        &[
            Corruption::Redirect("head"),
            Corruption::Pad {
                path: "subOrganizationOf",
                extra: 1,
                phantom: true,
            },
            Corruption::Drop("researchTopic"),
        ],
    ),
    class(
        "TeachingAssistant",
        "ta",
        8,
        &[
            Corruption::Redirect("assistsIn"),
            Corruption::Pad {
                path: "memberOf",
                extra: 1,
                phantom: true,
            },
        ],
    ),
    class(
        "ResearchAssistant",
        "ra",
        6,
        &[
            Corruption::Redirect("memberOf"),
            Corruption::Drop("name"),
            Corruption::Pad {
                path: "advisor",
                extra: 1,
                phantom: true,
            },
        ],
    ),
];

fn classes(tier: Tier) -> &'static [ClassDef] {
    match tier {
        Tier::Small => SMALL,
        Tier::Walkthrough => WALKTHROUGH,
        Tier::Medium => MEDIUM,
        Tier::Large => LARGE,
    }
}

// --- schema construction -----------------------------------------------------

fn prop(p: &str) -> String {
    format!("{NS}{p}")
}

fn min1(path: &str) -> Value {
    json!({"kind": "min", "count": 1, "path": prop(path)})
}

fn min1_dt(path: &str, datatype: &str) -> Value {
    json!({"kind": "min", "count": 1, "path": prop(path), "datatype": datatype})
}

fn min1_ref(path: &str, shape: &str) -> Value {
    json!({"kind": "min", "count": 1, "path": prop(path), "shape": shape})
}

fn max_n(path: &str, count: u64) -> Value {
    json!({"kind": "max", "count": count, "path": prop(path)})
}

fn max_ref(path: &str, count: u64, shape: &str) -> Value {
    json!({"kind": "max", "count": count, "path": prop(path), "shape": shape})
}

fn shape_doc(name: &str, constraints: Vec<Value>) -> Value {
    json!({
        "name": name,
        "targetClass": format!("{NS}{name}"),
        "constraints": constraints,
    })
}

/// A property that must appear exactly once: one min plus one max.
fn exactly_one(path: &str) -> Vec<Value> {
    vec![min1(path), max_n(path, 1)]
}

fn exactly_one_dt(path: &str, datatype: &str) -> Vec<Value> {
    vec![min1_dt(path, datatype), max_n(path, 1)]
}

fn exactly_one_ref(path: &str, shape: &str) -> Vec<Value> {
    vec![min1_ref(path, shape), max_n(path, 1)]
}

/// The full staff shape shared by all four professor ranks in the large
/// tier: unique name, email, and phone, plus a degree and an employer.
fn staff_shape(name: &str) -> Value {
    let mut c = Vec::new();
    c.extend(exactly_one("name"));
    c.extend(exactly_one("emailAddress"));
    c.extend(exactly_one("telephone"));
    c.push(min1_ref("degreeFrom", "University"));
    c.push(min1_ref("worksFor", "Department"));
    shape_doc(name, c)
}

/// Schema document for a tier, as canonical pretty-printed JSON.
pub fn tier_schema_json(tier: Tier) -> String {
    let shapes: Vec<Value> = match tier {
        Tier::Small => vec![
            shape_doc("University", {
                let mut c = exactly_one("name");
                c.extend(exactly_one_dt("foundingYear", XSD_INT));
                c
            }),
            shape_doc("Department", {
                let mut c = exactly_one("name");
                c.extend(exactly_one("abbreviation"));
                c.extend(exactly_one_ref("subOrganizationOf", "University"));
                c
            }),
            shape_doc("Professor", {
                let mut c = exactly_one("name");
                c.extend(exactly_one("emailAddress"));
                c.extend(exactly_one_ref("worksFor", "Department"));
                c
            }),
        ],
        Tier::Walkthrough => vec![
            shape_doc("University", {
                let mut c = exactly_one("name");
                c.extend(exactly_one_dt("foundingYear", XSD_INT));
                c
            }),
            shape_doc("Department", {
                let mut c = exactly_one("name");
                c.extend(exactly_one_ref("subOrganizationOf", "University"));
                c
            }),
            shape_doc("Professor", {
                let mut c = exactly_one("name");
                c.extend(exactly_one("emailAddress"));
                c.push(min1("telephone"));
                c.push(max_n("telephone", 2));
                c.push(min1_ref("degreeFrom", "University"));
                c.extend(exactly_one_ref("worksFor", "Department"));
                c
            }),
            shape_doc(
                "Course",
                vec![min1_ref("taughtBy", "Professor"), max_n("taughtBy", 2)],
            ),
        ],
        Tier::Medium => vec![
            shape_doc("University", {
                let mut c = exactly_one("name");
                c.extend(exactly_one_dt("foundingYear", XSD_INT));
                c
            }),
            shape_doc("Department", {
                let mut c = exactly_one("name");
                c.extend(exactly_one("abbreviation"));
                c.extend(exactly_one_ref("subOrganizationOf", "University"));
                c
            }),
            shape_doc("Professor", {
                let mut c = exactly_one("name");
                c.extend(exactly_one("emailAddress"));
                c.extend(exactly_one("telephone"));
                c.extend(exactly_one_ref("worksFor", "Department"));
                c
            }),
            shape_doc("Course", {
                let mut c = exactly_one("name");
                c.push(min1_ref("taughtBy", "Professor"));
                c.push(max_n("taughtBy", 2));
                c
            }),
            shape_doc("GraduateStudent", {
                let mut c = exactly_one("name");
                c.extend(exactly_one_ref("memberOf", "Department"));
                c.extend(exactly_one_ref("advisor", "Professor"));
                c
            }),
            shape_doc("Publication", {
                let mut c = exactly_one("title");
                c.push(min1_ref("publicationAuthor", "Professor"));
                c.push(max_ref("publicationAuthor", 3, "Professor"));
                c
            }),
            shape_doc("ResearchGroup", {
                let mut c = exactly_one("name");
                c.extend(exactly_one_ref("subOrganizationOf", "Department"));
                c
            }),
        ],
        Tier::Large => vec![
            shape_doc("University", {
                let mut c = exactly_one("name");
                c.extend(exactly_one_dt("foundingYear", XSD_INT));
                c.extend(exactly_one("abbreviation"));
                c.extend(exactly_one("homepage"));
                c
            }),
            shape_doc("Department", {
                let mut c = exactly_one("name");
                c.extend(exactly_one("abbreviation"));
                c.extend(exactly_one_ref("subOrganizationOf", "University"));
                c.extend(exactly_one("homepage"));
                c
            }),
            staff_shape("FullProfessor"),
            staff_shape("AssociateProfessor"),
            staff_shape("AssistantProfessor"),
            staff_shape("Lecturer"),
            shape_doc("Course", {
                let mut c = exactly_one("name");
                c.extend(exactly_one_dt("courseNumber", XSD_INT));
                c.push(min1_ref("taughtBy", "Lecturer"));
                c.push(max_n("taughtBy", 2));
                c.extend(exactly_one_ref("offeredBy", "Department"));
                c
            }),
            shape_doc("GraduateCourse", {
                let mut c = exactly_one("name");
                c.extend(exactly_one_dt("courseNumber", XSD_INT));
                c.push(min1_ref("taughtBy", "AssociateProfessor"));
                c.push(max_n("taughtBy", 2));
                c.extend(exactly_one_ref("offeredBy", "Department"));
                c
            }),
            shape_doc("GraduateStudent", {
                let mut c = exactly_one("name");
                c.extend(exactly_one("emailAddress"));
                c.push(min1_ref("memberOf", "Department"));
                c.push(min1_ref("advisor", "FullProfessor"));
                c.push(min1_ref("takesCourse", "GraduateCourse"));
                c.push(max_n("takesCourse", 5));
                c
            }),
            shape_doc("UndergraduateStudent", {
                let mut c = exactly_one("name");
                c.extend(exactly_one_dt("age", XSD_INT));
                c.push(min1("emailAddress"));
                c.push(min1_ref("memberOf", "Department"));
                c.push(min1_ref("takesCourse", "Course"));
                c.push(max_n("takesCourse", 4));
                c
            }),
            shape_doc("Publication", {
                let mut c = exactly_one("title");
                c.extend(exactly_one_dt("year", XSD_INT));
                c.extend(exactly_one("venue"));
                c.push(min1_ref("publicationAuthor", "FullProfessor"));
                c.push(max_ref("publicationAuthor", 3, "FullProfessor"));
                c
            }),
            shape_doc("ResearchGroup", {
                let mut c = exactly_one("name");
                c.extend(exactly_one("researchTopic"));
                c.extend(exactly_one_ref("subOrganizationOf", "Department"));
                c.extend(exactly_one_ref("head", "AssociateProfessor"));
                c
            }),
            shape_doc("TeachingAssistant", {
                let mut c = exactly_one("name");
                c.extend(exactly_one("emailAddress"));
                c.extend(exactly_one_ref("memberOf", "Department"));
                c.push(min1_ref("assistsIn", "Course"));
                c.push(max_n("assistsIn", 2));
                c
            }),
            shape_doc("ResearchAssistant", {
                let mut c = exactly_one("name");
                c.extend(exactly_one("emailAddress"));
                c.extend(exactly_one_ref("memberOf", "ResearchGroup"));
                c.extend(exactly_one_ref("advisor", "AssociateProfessor"));
                c
            }),
        ],
    };
    let mut doc = serde_json::to_string_pretty(&json!({ "shapes": shapes })).expect("schema JSON");
    doc.push('\n');
    doc
}

// --- population ------------------------------------------------------------

type Plan = HashMap<(usize, usize), Corruption>;

/// Emits one entity's triples, applying at most one corruption operator.
struct Emitter<'p> {
    graph: Graph,
    plan: &'p Plan,
    phantoms: usize,
}

impl Emitter<'_> {
    fn entity(prefix: &str, i: usize) -> Term {
        Term::iri(format!("{NS}e/{prefix}{i}"))
    }

    /// A fresh IRI that is never given any triples of its own, so it can
    /// never conform to a shape with mandatory properties.
    fn phantom(&mut self) -> Term {
        self.phantoms += 1;
        Term::iri(format!("{NS}e/phantom{}", self.phantoms))
    }

    /// Write `values` on `path` for entity `(class, i)`, honoring its
    /// corruption operator when the operator targets this path.
    fn put(&mut self, class: usize, i: usize, subject: &Term, path: &'static str, values: &[Term]) {
        let full = prop(path);
        match self.plan.get(&(class, i)) {
            Some(Corruption::Drop(p)) if *p == path => {}
            Some(Corruption::Redirect(p)) if *p == path => {
                let ph = self.phantom();
                self.graph.insert(subject.clone(), full, ph);
            }
            Some(Corruption::Pad {
                path: p,
                extra,
                phantom,
            }) if *p == path => {
                let extra = *extra;
                let phantom = *phantom;
                for v in values {
                    self.graph.insert(subject.clone(), full.clone(), v.clone());
                }
                for k in 0..extra {
                    let v = if phantom {
                        self.phantom()
                    } else {
                        Term::plain(format!("surplus value {k}"))
                    };
                    self.graph.insert(subject.clone(), full.clone(), v);
                }
            }
            _ => {
                for v in values {
                    self.graph.insert(subject.clone(), full.clone(), v.clone());
                }
            }
        }
    }

    fn typed_as(&mut self, subject: &Term, class_name: &str) {
        self.graph
            .insert(subject.clone(), RDF_TYPE, Term::iri(format!("{NS}{class_name}")));
    }
}

fn plain(s: String) -> Term {
    Term::plain(s)
}

fn int(v: usize) -> Term {
    Term::typed(v.to_string(), XSD_INT)
}

/// Build the population for `units` scale units, with the corruption plan
/// applied during emission. Deterministic: same tier, units, and plan give
/// the same graph.
fn populate(tier: Tier, units: usize, plan: &Plan) -> Graph {
    let defs = classes(tier);
    let count = |class: usize| defs[class].per_unit * units;
    let ent = |class: usize, i: usize| Emitter::entity(defs[class].prefix, i);
    let mut em = Emitter {
        graph: Graph::default(),
        plan,
        phantoms: 0,
    };

    // Class indices follow the tier tables above.
    match tier {
        Tier::Small => {
            for i in 0..count(0) {
                let s = ent(0, i);
                em.typed_as(&s, defs[0].name);
                em.put(0, i, &s, "name", &[plain(format!("University {i}"))]);
                em.put(0, i, &s, "foundingYear", &[int(1800 + i % 200)]);
            }
            for i in 0..count(1) {
                let s = ent(1, i);
                em.typed_as(&s, defs[1].name);
                em.put(1, i, &s, "name", &[plain(format!("Department {i}"))]);
                em.put(1, i, &s, "abbreviation", &[plain(format!("D{i}"))]);
                em.put(1, i, &s, "subOrganizationOf", &[ent(0, i % count(0))]);
            }
            for i in 0..count(2) {
                let s = ent(2, i);
                em.typed_as(&s, defs[2].name);
                em.put(2, i, &s, "name", &[plain(format!("Professor {i}"))]);
                em.put(2, i, &s, "emailAddress", &[plain(format!("p{i}@campus.example"))]);
                em.put(2, i, &s, "worksFor", &[ent(1, i % count(1))]);
            }
        }
        Tier::Walkthrough => {
            for i in 0..count(0) {
                let s = ent(0, i);
                em.typed_as(&s, defs[0].name);
                em.put(0, i, &s, "name", &[plain(format!("University {i}"))]);
                em.put(0, i, &s, "foundingYear", &[int(1800 + i % 200)]);
            }
            for i in 0..count(1) {
                let s = ent(1, i);
                em.typed_as(&s, defs[1].name);
                em.put(1, i, &s, "name", &[plain(format!("Department {i}"))]);
                em.put(1, i, &s, "subOrganizationOf", &[ent(0, i % count(0))]);
            }
            for i in 0..count(2) {
                let s = ent(2, i);
                em.typed_as(&s, defs[2].name);
                em.put(2, i, &s, "name", &[plain(format!("Professor {i}"))]);
                em.put(2, i, &s, "emailAddress", &[plain(format!("p{i}@campus.example"))]);
                em.put(2, i, &s, "telephone", &[plain(format!("+1-555-{i:07}"))]);
                em.put(2, i, &s, "degreeFrom", &[ent(0, i % count(0))]);
                em.put(2, i, &s, "worksFor", &[ent(1, i % count(1))]);
            }
            for i in 0..count(3) {
                let s = ent(3, i);
                em.typed_as(&s, "Course");
                let teachers = pick_refs(i, count(2), 1 + usize::from(i % 3 == 0));
                let teachers: Vec<Term> = teachers.into_iter().map(|t| ent(2, t)).collect();
                em.put(3, i, &s, "taughtBy", &teachers);
            }
        }
        Tier::Medium => {
            for i in 0..count(0) {
                let s = ent(0, i);
                em.typed_as(&s, defs[0].name);
                em.put(0, i, &s, "name", &[plain(format!("University {i}"))]);
                em.put(0, i, &s, "foundingYear", &[int(1800 + i % 200)]);
            }
            for i in 0..count(1) {
                let s = ent(1, i);
                em.typed_as(&s, defs[1].name);
                em.put(1, i, &s, "name", &[plain(format!("Department {i}"))]);
                em.put(1, i, &s, "abbreviation", &[plain(format!("D{i}"))]);
                em.put(1, i, &s, "subOrganizationOf", &[ent(0, i % count(0))]);
            }
            for i in 0..count(2) {
                let s = ent(2, i);
                em.typed_as(&s, defs[2].name);
                em.put(2, i, &s, "name", &[plain(format!("Professor {i}"))]);
                em.put(2, i, &s, "emailAddress", &[plain(format!("p{i}@campus.example"))]);
                em.put(2, i, &s, "telephone", &[plain(format!("+1-555-{i:07}"))]);
                em.put(2, i, &s, "worksFor", &[ent(1, i % count(1))]);
            }
            for i in 0..count(3) {
                let s = ent(3, i);
                em.typed_as(&s, defs[3].name);
                em.put(3, i, &s, "name", &[plain(format!("Course {i}"))]);
                let teachers = pick_refs(i, count(2), 1 + usize::from(i % 3 == 0));
                let teachers: Vec<Term> = teachers.into_iter().map(|t| ent(2, t)).collect();
                em.put(3, i, &s, "taughtBy", &teachers);
            }
            for i in 0..count(4) {
                let s = ent(4, i);
                em.typed_as(&s, defs[4].name);
                em.put(4, i, &s, "name", &[plain(format!("Student {i}"))]);
                em.put(4, i, &s, "memberOf", &[ent(1, i % count(1))]);
                em.put(4, i, &s, "advisor", &[ent(2, i % count(2))]);
            }
            for i in 0..count(5) {
                let s = ent(5, i);
                em.typed_as(&s, defs[5].name);
                em.put(5, i, &s, "title", &[plain(format!("Publication {i}"))]);
                let authors = pick_refs(i, count(2), 2);
                let authors: Vec<Term> = authors.into_iter().map(|a| ent(2, a)).collect();
                em.put(5, i, &s, "publicationAuthor", &authors);
            }
            for i in 0..count(6) {
                let s = ent(6, i);
                em.typed_as(&s, defs[6].name);
                em.put(6, i, &s, "name", &[plain(format!("Group {i}"))]);
                em.put(6, i, &s, "subOrganizationOf", &[ent(1, i % count(1))]);
            }
        }
        Tier::Large => {
            for i in 0..count(0) {
                let s = ent(0, i);
                em.typed_as(&s, defs[0].name);
                em.put(0, i, &s, "name", &[plain(format!("University {i}"))]);
                em.put(0, i, &s, "foundingYear", &[int(1800 + i % 200)]);
                em.put(0, i, &s, "abbreviation", &[plain(format!("U{i}"))]);
                em.put(0, i, &s, "homepage", &[plain(format!("https://campus.example/u{i}"))]);
            }
            for i in 0..count(1) {
                let s = ent(1, i);
                em.typed_as(&s, defs[1].name);
                em.put(1, i, &s, "name", &[plain(format!("Department {i}"))]);
                em.put(1, i, &s, "abbreviation", &[plain(format!("D{i}"))]);
                em.put(1, i, &s, "subOrganizationOf", &[ent(0, i % count(0))]);
                em.put(1, i, &s, "homepage", &[plain(format!("https://campus.example/d{i}"))]);
            }
            // The four staff ranks share one emission recipe.
            for class in [2, 3, 4, 5] {
                let title = defs[class].name;
                let prefix = defs[class].prefix;
                for i in 0..count(class) {
                    let s = ent(class, i);
                    em.typed_as(&s, title);
                    em.put(class, i, &s, "name", &[plain(format!("{title} {i}"))]);
                    em.put(
                        class,
                        i,
                        &s,
                        "emailAddress",
                        &[plain(format!("{prefix}{i}@campus.example"))],
                    );
                    em.put(class, i, &s, "telephone", &[plain(format!("+1-555-{class}{i:06}"))]);
                    em.put(class, i, &s, "degreeFrom", &[ent(0, i % count(0))]);
                    em.put(class, i, &s, "worksFor", &[ent(1, i % count(1))]);
                }
            }
            for (class, teacher_class) in [(6, 5), (7, 3)] {
                let title = defs[class].name;
                for i in 0..count(class) {
                    let s = ent(class, i);
                    em.typed_as(&s, title);
                    em.put(class, i, &s, "name", &[plain(format!("{title} {i}"))]);
                    em.put(class, i, &s, "courseNumber", &[int(100 + i)]);
                    let teachers = pick_refs(i, count(teacher_class), 1 + usize::from(i % 3 == 0));
                    let teachers: Vec<Term> =
                        teachers.into_iter().map(|t| ent(teacher_class, t)).collect();
                    em.put(class, i, &s, "taughtBy", &teachers);
                    em.put(class, i, &s, "offeredBy", &[ent(1, i % count(1))]);
                }
            }
            for i in 0..count(8) {
                let s = ent(8, i);
                em.typed_as(&s, defs[8].name);
                em.put(8, i, &s, "name", &[plain(format!("GraduateStudent {i}"))]);
                em.put(8, i, &s, "emailAddress", &[plain(format!("gs{i}@campus.example"))]);
                em.put(8, i, &s, "memberOf", &[ent(1, i % count(1))]);
                em.put(8, i, &s, "advisor", &[ent(2, i % count(2))]);
                let courses = pick_refs(i, count(7), 1 + i % 2);
                let courses: Vec<Term> = courses.into_iter().map(|c| ent(7, c)).collect();
                em.put(8, i, &s, "takesCourse", &courses);
            }
            for i in 0..count(9) {
                let s = ent(9, i);
                em.typed_as(&s, defs[9].name);
                em.put(9, i, &s, "name", &[plain(format!("UndergraduateStudent {i}"))]);
                em.put(9, i, &s, "age", &[int(18 + i % 12)]);
                em.put(9, i, &s, "emailAddress", &[plain(format!("us{i}@campus.example"))]);
                em.put(9, i, &s, "memberOf", &[ent(1, i % count(1))]);
                let courses = pick_refs(i, count(6), 1 + i % 2);
                let courses: Vec<Term> = courses.into_iter().map(|c| ent(6, c)).collect();
                em.put(9, i, &s, "takesCourse", &courses);
            }
            for i in 0..count(10) {
                let s = ent(10, i);
                em.typed_as(&s, defs[10].name);
                em.put(10, i, &s, "title", &[plain(format!("Publication {i}"))]);
                em.put(10, i, &s, "year", &[int(1990 + i % 35)]);
                em.put(10, i, &s, "venue", &[plain(format!("Venue {}", i % 40))]);
                let authors = pick_refs(i, count(2), 2);
                let authors: Vec<Term> = authors.into_iter().map(|a| ent(2, a)).collect();
                em.put(10, i, &s, "publicationAuthor", &authors);
            }
            for i in 0..count(11) {
                let s = ent(11, i);
                em.typed_as(&s, defs[11].name);
                em.put(11, i, &s, "name", &[plain(format!("Group {i}"))]);
                em.put(11, i, &s, "researchTopic", &[plain(format!("Topic {}", i % 25))]);
                em.put(11, i, &s, "subOrganizationOf", &[ent(1, i % count(1))]);
                em.put(11, i, &s, "head", &[ent(3, i % count(3))]);
            }
            for i in 0..count(12) {
                let s = ent(12, i);
                em.typed_as(&s, defs[12].name);
                em.put(12, i, &s, "name", &[plain(format!("TeachingAssistant {i}"))]);
                em.put(12, i, &s, "emailAddress", &[plain(format!("ta{i}@campus.example"))]);
                em.put(12, i, &s, "memberOf", &[ent(1, i % count(1))]);
                em.put(12, i, &s, "assistsIn", &[ent(6, i % count(6))]);
            }
            for i in 0..count(13) {
                let s = ent(13, i);
                em.typed_as(&s, defs[13].name);
                em.put(13, i, &s, "name", &[plain(format!("ResearchAssistant {i}"))]);
                em.put(13, i, &s, "emailAddress", &[plain(format!("ra{i}@campus.example"))]);
                em.put(13, i, &s, "memberOf", &[ent(11, i % count(11))]);
                em.put(13, i, &s, "advisor", &[ent(3, i % count(3))]);
            }
        }
    }
    em.graph
}

/// `want` distinct indices below `n`: entity `i`'s references start at
/// `i % n` and continue upward, so they spread over the whole target pool.
fn pick_refs(i: usize, n: usize, want: usize) -> Vec<usize> {
    let want = want.min(n);
    let mut out = Vec::with_capacity(want);
    let mut next = i % n;
    while out.len() < want {
        out.push(next);
        next = (next + 1) % n;
    }
    out
}

// --- generation ------------------------------------------------------------

/// Generate a testbed: build the tier schema, scale the population to the
/// requested triple count, then drive corruption toward the requested invalid
/// percentage with the reference validator as the measuring stick.
pub fn generate(spec: &BenchSpec) -> Result<Testbed, CliError> {
    let tier = Tier::from_shape_count(spec.shapes).ok_or_else(|| {
        CliError::Config(format!(
            "unsupported shape count {} (choose 3, 4, 7, or 14)",
            spec.shapes
        ))
    })?;
    if !(0.0..=100.0).contains(&spec.invalid_pct) {
        return Err(CliError::Config(format!(
            "invalid percentage {} out of range 0..=100",
            spec.invalid_pct
        )));
    }
    if spec.scale == 0 {
        return Err(CliError::Config("scale must be positive".into()));
    }

    let schema_doc = tier_schema_json(tier);
    let schema = parse_schema(&schema_doc)?;

    let unit_triples = populate(tier, 1, &Plan::new()).len();
    let units = ((spec.scale as f64 / unit_triples as f64).round() as usize).max(1);
    let defs = classes(tier);

    // One shuffle of every entity fixes the corruption order; the search
    // below only moves the prefix length, so testbeds with different invalid
    // percentages share their corrupted cores.
    let mut order: Vec<(usize, usize)> = Vec::new();
    for (class, def) in defs.iter().enumerate() {
        for i in 0..def.per_unit * units {
            order.push((class, i));
        }
    }
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));
    let total = order.len();

    let plan_for = |n: usize| -> Plan {
        order[..n]
            .iter()
            .enumerate()
            .map(|(k, &(class, i))| {
                let menu = defs[class].menu;
                ((class, i), menu[k % menu.len()])
            })
            .collect()
    };

    struct Attempt {
        error: f64,
        corrupted: usize,
        plan: Plan,
        graph: Graph,
        oracle: OracleResult,
        invalid: usize,
        targets: usize,
    }

    let mut n = if spec.invalid_pct == 0.0 {
        0
    } else {
        // Cascades amplify direct corruption, so start below the naive
        // count and let the measurements steer.
        (((spec.invalid_pct / 100.0) * total as f64 * 0.6).round() as usize).clamp(1, total)
    };
    let mut best: Option<Attempt> = None;
    for _ in 0..8 {
        let plan = plan_for(n);
        let graph = populate(tier, units, &plan);
        let oracle = validate_naive(&schema, &graph)?;
        let targets: usize = oracle.targets.iter().map(BTreeMap::len).sum();
        let invalid: usize = oracle
            .targets
            .iter()
            .flat_map(|m| m.values())
            .filter(|ok| !**ok)
            .count();
        let realized = if targets == 0 {
            0.0
        } else {
            100.0 * invalid as f64 / targets as f64
        };
        let error = (realized - spec.invalid_pct).abs();
        let better = best.as_ref().is_none_or(|b| error < b.error);
        if better {
            best = Some(Attempt {
                error,
                corrupted: n,
                plan,
                graph,
                oracle,
                invalid,
                targets,
            });
        }
        if error <= INVALID_PCT_TOLERANCE {
            break;
        }
        // Proportional step on the prefix length, nudged when rounding
        // stalls so the search cannot loop in place.
        let proposed = if realized <= 0.0 {
            (n.max(1)) * 2
        } else {
            ((n as f64) * spec.invalid_pct / realized).round() as usize
        };
        let proposed = proposed.clamp(0, total);
        let next = if proposed == n {
            if realized < spec.invalid_pct {
                (n + 1).min(total)
            } else {
                n.saturating_sub(1)
            }
        } else {
            proposed
        };
        if next == n {
            break;
        }
        n = next;
    }

    let best = best.expect("at least one corruption attempt runs");
    let realized = if best.targets == 0 {
        0.0
    } else {
        100.0 * best.invalid as f64 / best.targets as f64
    };

    let mut operations: BTreeMap<String, usize> = BTreeMap::new();
    for op in best.plan.values() {
        *operations.entry(op.label()).or_default() += 1;
    }
    let mut verdicts: BTreeMap<String, BTreeMap<String, bool>> = BTreeMap::new();
    for (s, shape) in schema.shapes().iter().enumerate() {
        let entry = verdicts.entry(shape.name.clone()).or_default();
        for (entity, &ok) in &best.oracle.targets[s] {
            entry.insert(entity.to_token(), ok);
        }
    }

    let manifest = Manifest {
        tier: tier.label().to_string(),
        shapes: tier.shape_count(),
        scale_requested: spec.scale,
        invalid_pct_requested: spec.invalid_pct,
        seed: spec.seed,
        units,
        triples: best.graph.len(),
        targets: best.targets,
        invalid: best.invalid,
        realized_invalid_pct: realized,
        within_tolerance: best.error <= INVALID_PCT_TOLERANCE,
        corrupted_entities: best.corrupted,
        operations,
        verdicts,
    };

    Ok(Testbed {
        tier,
        schema_doc,
        schema,
        graph: best.graph,
        manifest,
    })
}

/// Write `schema.json`, `data.nt`, and `manifest.json` into `dir`.
/// Byte-deterministic for a given spec.
pub fn write_testbed(testbed: &Testbed, dir: &Path) -> Result<(), CliError> {
    let io_err = |e: std::io::Error| CliError::Config(format!("cannot write {}: {e}", dir.display()));
    fs::create_dir_all(dir).map_err(io_err)?;
    fs::write(dir.join(SCHEMA_FILE), &testbed.schema_doc).map_err(io_err)?;
    fs::write(dir.join(DATA_FILE), serialize_graph(&testbed.graph)).map_err(io_err)?;
    let mut manifest = serde_json::to_string_pretty(&testbed.manifest)
        .map_err(|e| CliError::Config(format!("cannot encode manifest: {e}")))?;
    manifest.push('\n');
    fs::write(dir.join(MANIFEST_FILE), manifest).map_err(io_err)?;
    Ok(())
}

/// One-line summary for the terminal.
pub fn summary_line(testbed: &Testbed) -> String {
    let m = &testbed.manifest;
    format!(
        "{}: {} triples, {} targets, {} invalid ({:.1}% vs {:.0}% requested, {} corrupted)",
        m.tier, m.triples, m.targets, m.invalid, m.realized_invalid_pct, m.invalid_pct_requested,
        m.corrupted_entities
    )
}
