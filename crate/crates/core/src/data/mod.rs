//! Data access: an in-memory triple store, a query evaluator over it, an
//! HTTP client for external query endpoints, and an in-process endpoint that
//! serves the same evaluator over HTTP for tests and offline runs.

pub mod eval;
pub mod ntriples;
pub mod remote;
pub mod stub;

use indexmap::{IndexMap, IndexSet};

use crate::term::Term;

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("triple syntax error at line {line}: {message}")]
    TripleSyntax { line: usize, message: String },
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("endpoint returned status {status}: {detail}")]
    Endpoint { status: u16, detail: String },
    #[error("malformed results document: {0}")]
    Results(String),
    #[error("query not supported by the embedded evaluator: {0}")]
    Unsupported(String),
}

/// An in-memory RDF graph indexed for star-query evaluation: triples are
/// grouped by subject, then predicate, with object lists deduplicated and
/// kept in insertion order.
#[derive(Debug, Clone, Default)]
pub struct Graph {
    spo: IndexMap<Term, IndexMap<String, Vec<Term>>>,
    triple_count: usize,
}

impl Graph {
    pub fn new() -> Self {
        Graph::default()
    }

    /// Insert a triple; returns false if it was already present.
    pub fn insert(&mut self, subject: Term, predicate: impl Into<String>, object: Term) -> bool {
        let objects = self
            .spo
            .entry(subject)
            .or_default()
            .entry(predicate.into())
            .or_default();
        if objects.contains(&object) {
            return false;
        }
        objects.push(object);
        self.triple_count += 1;
        true
    }

    /// Number of distinct triples.
    pub fn len(&self) -> usize {
        self.triple_count
    }

    pub fn is_empty(&self) -> bool {
        self.triple_count == 0
    }

    pub fn subjects(&self) -> impl Iterator<Item = &Term> {
        self.spo.keys()
    }

    pub fn subject_count(&self) -> usize {
        self.spo.len()
    }

    /// Distinct objects reachable from `subject` over `predicate`, in
    /// insertion order; empty if none.
    pub fn objects(&self, subject: &Term, predicate: &str) -> &[Term] {
        self.spo
            .get(subject)
            .and_then(|po| po.get(predicate))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn triples(&self) -> impl Iterator<Item = (&Term, &str, &Term)> {
        self.spo.iter().flat_map(|(s, po)| {
            po.iter()
                .flat_map(move |(p, objects)| objects.iter().map(move |o| (s, p.as_str(), o)))
        })
    }

    /// All distinct predicates in the graph, in first-seen order.
    pub fn predicates(&self) -> IndexSet<&str> {
        self.triples().map(|(_, p, _)| p).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn insert_deduplicates_triples() {
        let mut g = Graph::new();
        let s = Term::iri("urn:s");
        let o = Term::plain("v");
        assert!(g.insert(s.clone(), "urn:p", o.clone()));
        assert!(!g.insert(s.clone(), "urn:p", o.clone()));
        assert_eq!(g.len(), 1);
        assert_eq!(g.objects(&s, "urn:p"), &[o]);
        assert!(g.objects(&s, "urn:q").is_empty());
    }

    #[test]
    fn object_lists_keep_insertion_order() {
        let mut g = Graph::new();
        let s = Term::iri("urn:s");
        g.insert(s.clone(), "urn:p", Term::plain("b"));
        g.insert(s.clone(), "urn:p", Term::plain("a"));
        let values: Vec<&str> = g
            .objects(&s, "urn:p")
            .iter()
            .map(|t| t.lexical())
            .collect();
        assert_eq!(values, vec!["b", "a"]);
    }
}
