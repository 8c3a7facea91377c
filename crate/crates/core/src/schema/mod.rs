//! Shape schema model.
//!
//! A schema is a list of named shapes. Each shape optionally targets a set of
//! entities (by class or by an explicit target query) and constrains, per
//! predicate path, how many values an entity must have (`min`) or may have
//! (`max`). A constraint may additionally qualify the counted values by a
//! constant, by a datatype, or by a reference to another shape; shape
//! references are what connect shapes into a dependency graph.
//!
//! Parsing normalizes negated references into count-flipped positive
//! retrievals: "not at least n" becomes "at most n-1" and "not at most n"
//! becomes "at least n+1", so the retrieval layer only ever counts values of
//! the positively referenced shape. The dependency *sign* survives in
//! [`ShapeRef::sign`]: a `max` bound over a referenced shape is anti-monotone
//! in that shape (more conforming neighbors can only break it), so it is a
//! negative dependency for stratification; a `min` bound is positive.

pub mod graph;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::query::text::{self, ParsedTarget};
use crate::query::SelectQuery;
use crate::term::Term;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CardinalityKind {
    Min,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RefSign {
    Positive,
    Negative,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShapeRef {
    pub shape: String,
    /// Monotonicity of the constraint in the referenced shape: `min` bounds
    /// are positive dependencies, `max` bounds negative ones.
    pub sign: RefSign,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ValueFilter {
    /// Only values equal to this constant count.
    Constant(Term),
    /// Only literal values with this datatype IRI count.
    Datatype(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub kind: CardinalityKind,
    pub count: u32,
    pub path: String,
    pub shape_ref: Option<ShapeRef>,
    pub value_filter: Option<ValueFilter>,
}

impl Constraint {
    pub fn is_inter_shape(&self) -> bool {
        self.shape_ref.is_some()
    }

    pub fn is_min(&self) -> bool {
        self.kind == CardinalityKind::Min
    }

    pub fn is_max(&self) -> bool {
        self.kind == CardinalityKind::Max
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TargetDefinition {
    /// Entities with an `rdf:type` edge to this class IRI.
    Class(String),
    /// An explicit single-variable select query over the data graph.
    Query(SelectQuery),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Shape {
    pub name: String,
    pub target: Option<TargetDefinition>,
    pub constraints: Vec<Constraint>,
}

impl Shape {
    pub fn min_constraints(&self) -> impl Iterator<Item = (usize, &Constraint)> {
        self.constraints
            .iter()
            .enumerate()
            .filter(|(_, c)| c.is_min())
    }

    pub fn max_constraints(&self) -> impl Iterator<Item = (usize, &Constraint)> {
        self.constraints
            .iter()
            .enumerate()
            .filter(|(_, c)| c.is_max())
    }

    pub fn is_targeted(&self) -> bool {
        self.target.is_some()
    }
}

/// An immutable, validated shape schema. Shape order is declaration order.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeSchema {
    shapes: Vec<Shape>,
    by_name: IndexMap<String, usize>,
}

impl ShapeSchema {
    pub fn new(shapes: Vec<Shape>) -> Result<Self, SchemaError> {
        let mut by_name = IndexMap::new();
        for (i, shape) in shapes.iter().enumerate() {
            if shape.name.is_empty() {
                return Err(SchemaError::InvalidShape {
                    shape: shape.name.clone(),
                    message: "shape name must be non-empty".into(),
                });
            }
            if by_name.insert(shape.name.clone(), i).is_some() {
                return Err(SchemaError::DuplicateShape(shape.name.clone()));
            }
        }
        for shape in &shapes {
            for c in &shape.constraints {
                if let Some(r) = &c.shape_ref {
                    if !by_name.contains_key(&r.shape) {
                        return Err(SchemaError::DanglingReference {
                            shape: shape.name.clone(),
                            referenced: r.shape.clone(),
                        });
                    }
                }
            }
        }
        Ok(ShapeSchema { shapes, by_name })
    }

    pub fn shapes(&self) -> &[Shape] {
        &self.shapes
    }

    pub fn len(&self) -> usize {
        self.shapes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shapes.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&Shape> {
        self.by_name.get(name).map(|&i| &self.shapes[i])
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    pub fn constraint_count(&self) -> usize {
        self.shapes.iter().map(|s| s.constraints.len()).sum()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SchemaError {
    #[error("schema syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("duplicate shape name {0:?}")]
    DuplicateShape(String),
    #[error("shape {shape:?} references undefined shape {referenced:?}")]
    DanglingReference { shape: String, referenced: String },
    #[error("invalid shape {shape:?}: {message}")]
    InvalidShape { shape: String, message: String },
    #[error("invalid constraint in shape {shape:?}: {message}")]
    InvalidConstraint { shape: String, message: String },
    #[error("invalid target for shape {shape:?}: {message}")]
    InvalidTarget { shape: String, message: String },
    #[error("negated references form a cycle through shapes: {}", shapes.join(", "))]
    NegativeCycle { shapes: Vec<String> },
}

// ---------------------------------------------------------------------------
// JSON document form
// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct SchemaDoc {
    shapes: Vec<ShapeDoc>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct ShapeDoc {
    name: String,
    #[serde(rename = "targetClass", skip_serializing_if = "Option::is_none")]
    target_class: Option<String>,
    #[serde(rename = "targetQuery", skip_serializing_if = "Option::is_none")]
    target_query: Option<String>,
    #[serde(default)]
    constraints: Vec<ConstraintDoc>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct ConstraintDoc {
    kind: String,
    count: i64,
    path: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    shape: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    negated: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    value: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    datatype: Option<String>,
}

/// Parse a JSON schema document, normalize negated references, and validate
/// name uniqueness and reference integrity.
pub fn parse_schema(doc: &str) -> Result<ShapeSchema, SchemaError> {
    let raw: SchemaDoc = serde_json::from_str(doc).map_err(|e| SchemaError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;

    let mut shapes = Vec::with_capacity(raw.shapes.len());
    for shape_doc in raw.shapes {
        let name = shape_doc.name;
        let target = parse_target(&name, shape_doc.target_class, shape_doc.target_query)?;
        let mut constraints = Vec::with_capacity(shape_doc.constraints.len());
        for c in shape_doc.constraints {
            constraints.push(normalize_constraint(&name, c)?);
        }
        shapes.push(Shape {
            name,
            target,
            constraints,
        });
    }
    ShapeSchema::new(shapes)
}

fn parse_target(
    shape: &str,
    class: Option<String>,
    query: Option<String>,
) -> Result<Option<TargetDefinition>, SchemaError> {
    match (class, query) {
        (Some(_), Some(_)) => Err(SchemaError::InvalidTarget {
            shape: shape.to_string(),
            message: "targetClass and targetQuery are mutually exclusive".into(),
        }),
        (Some(c), None) => {
            if c.is_empty() {
                return Err(SchemaError::InvalidTarget {
                    shape: shape.to_string(),
                    message: "targetClass must be a non-empty IRI".into(),
                });
            }
            Ok(Some(TargetDefinition::Class(c)))
        }
        (None, Some(q)) => {
            let ParsedTarget { query } =
                text::parse_target_query(&q).map_err(|e| SchemaError::InvalidTarget {
                    shape: shape.to_string(),
                    message: e.to_string(),
                })?;
            Ok(Some(TargetDefinition::Query(query)))
        }
        (None, None) => Ok(None),
    }
}

fn normalize_constraint(shape: &str, doc: ConstraintDoc) -> Result<Constraint, SchemaError> {
    let invalid = |message: String| SchemaError::InvalidConstraint {
        shape: shape.to_string(),
        message,
    };

    let declared_kind = match doc.kind.as_str() {
        "min" => CardinalityKind::Min,
        "max" => CardinalityKind::Max,
        other => return Err(invalid(format!("unknown constraint kind {other:?}"))),
    };
    if doc.count < 0 {
        return Err(invalid(format!("count must be non-negative, got {}", doc.count)));
    }
    let declared_count = u32::try_from(doc.count)
        .map_err(|_| invalid(format!("count {} out of range", doc.count)))?;
    if declared_kind == CardinalityKind::Min && declared_count == 0 {
        return Err(invalid("min constraint with count 0 is meaningless".into()));
    }
    if doc.path.is_empty() {
        return Err(invalid("path must be a non-empty IRI".into()));
    }

    let negated = doc.negated.unwrap_or(false);
    if negated && doc.shape.is_none() {
        return Err(invalid(
            "negated applies only to shape-referencing constraints".into(),
        ));
    }
    if doc.shape.is_some() && (doc.value.is_some() || doc.datatype.is_some()) {
        return Err(invalid(
            "a constraint may carry a shape reference or a value/datatype filter, not both".into(),
        ));
    }
    if doc.value.is_some() && doc.datatype.is_some() {
        return Err(invalid(
            "value and datatype filters are mutually exclusive".into(),
        ));
    }

    // Negation normal form: flip the bound, keep the reference positive on the
    // retrieval side. "not (>= n)" == "<= n-1"; "not (<= n)" == ">= n+1".
    let (kind, count) = if negated {
        match declared_kind {
            CardinalityKind::Min => (CardinalityKind::Max, declared_count - 1),
            CardinalityKind::Max => (CardinalityKind::Min, declared_count + 1),
        }
    } else {
        (declared_kind, declared_count)
    };

    let shape_ref = doc.shape.map(|s| ShapeRef {
        sign: match kind {
            CardinalityKind::Min => RefSign::Positive,
            CardinalityKind::Max => RefSign::Negative,
        },
        shape: s,
    });

    let value_filter = match (doc.value, doc.datatype) {
        (Some(v), None) => Some(ValueFilter::Constant(parse_value_constant(shape, &v)?)),
        (None, Some(dt)) => {
            if dt.is_empty() {
                return Err(invalid("datatype must be a non-empty IRI".into()));
            }
            Some(ValueFilter::Datatype(dt))
        }
        (None, None) => None,
        (Some(_), Some(_)) => unreachable!("rejected above"),
    };

    if kind == CardinalityKind::Min
        && count > 1
        && matches!(value_filter, Some(ValueFilter::Constant(_)))
    {
        return Err(invalid(
            "min with a constant value can match at most one distinct value; count must be 1"
                .into(),
        ));
    }

    Ok(Constraint {
        kind,
        count,
        path: doc.path,
        shape_ref,
        value_filter,
    })
}

/// Value constants use term surface syntax: `<iri>`, `"literal"`,
/// `"literal"^^<datatype>`, `"literal"@lang`. A bare string is read as a plain
/// literal.
fn parse_value_constant(shape: &str, v: &str) -> Result<Term, SchemaError> {
    if v.starts_with('<') || v.starts_with('"') || v.starts_with("_:") {
        crate::data::ntriples::parse_term(v).map_err(|e| SchemaError::InvalidConstraint {
            shape: shape.to_string(),
            message: format!("invalid value constant {v:?}: {e}"),
        })
    } else {
        Ok(Term::plain(v))
    }
}

/// Serialize a schema back to its canonical JSON document form. Negated
/// references were folded into count-flipped bounds at parse time, so the
/// emitted document never contains `negated`; re-parsing yields a structurally
/// equal schema.
pub fn serialize_schema(schema: &ShapeSchema) -> String {
    let doc = SchemaDoc {
        shapes: schema
            .shapes()
            .iter()
            .map(|s| ShapeDoc {
                name: s.name.clone(),
                target_class: match &s.target {
                    Some(TargetDefinition::Class(c)) => Some(c.clone()),
                    _ => None,
                },
                target_query: match &s.target {
                    Some(TargetDefinition::Query(q)) => Some(text::serialize_query(q)),
                    _ => None,
                },
                constraints: s
                    .constraints
                    .iter()
                    .map(|c| ConstraintDoc {
                        kind: match c.kind {
                            CardinalityKind::Min => "min".into(),
                            CardinalityKind::Max => "max".into(),
                        },
                        count: c.count as i64,
                        path: c.path.clone(),
                        shape: c.shape_ref.as_ref().map(|r| r.shape.clone()),
                        negated: None,
                        value: c.value_filter.as_ref().and_then(|f| match f {
                            ValueFilter::Constant(t) => Some(t.to_token()),
                            ValueFilter::Datatype(_) => None,
                        }),
                        datatype: c.value_filter.as_ref().and_then(|f| match f {
                            ValueFilter::Datatype(dt) => Some(dt.clone()),
                            ValueFilter::Constant(_) => None,
                        }),
                    })
                    .collect(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("schema document serialization cannot fail")
}
