//! Traversal-ordered validation of shape schemas against RDF data.
//!
//! A shape schema is a set of named shapes, each carrying cardinality
//! constraints over single-predicate paths; constraints may reference other
//! shapes, making conformance mutually dependent. This crate plans an
//! evaluation order over the inter-shape dependency graph, compiles each
//! shape into a handful of SPARQL select queries, and grounds verdicts
//! incrementally as rows stream in — propagating decided verdicts into
//! neighboring shapes' filters so later queries touch less data.
//!
//! Modules, bottom-up:
//!
//! - [`term`]: RDF terms with a total order and N-Triples rendering.
//! - [`schema`]: the shape model, its JSON format, dependency graph, and
//!   stratification ([`schema::graph`]).
//! - [`query`]: the select-query fragment, shape-to-query compilation,
//!   instance filters, and length-bounded partitioning.
//! - [`data`]: data access — an in-memory graph with an embedded evaluator,
//!   N-Triples parsing, a SPARQL-over-HTTP client, and a stub endpoint for
//!   tests.
//! - [`planner`]: seed selection and graph traversal producing the shape
//!   evaluation order.
//! - [`validation`]: the engine driving queries and the incremental
//!   three-valued grounding to a final report.
//! - [`metrics`]: timing/throughput metrics and CSV/JSON report files.
//! - [`oracle`]: a deliberately naive fixpoint validator used to
//!   cross-check the engine.

pub mod data;
pub mod metrics;
pub mod oracle;
pub mod planner;
pub mod query;
pub mod schema;
pub mod term;
pub mod validation;
