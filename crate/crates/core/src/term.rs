//! RDF terms: IRIs, blank nodes, and literals.
//!
//! Terms are the values stored in the triple store, bound to query variables,
//! and classified by the validator. Ordering is total and stable: results are
//! sorted by [`Term::sort_key`], which orders primarily by the lexical form so
//! that paged retrieval walks entities in a predictable order.

use std::fmt;

pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    pub lexical: String,
    /// Datatype IRI, if any. A plain literal carries neither datatype nor language.
    pub datatype: Option<String>,
    pub language: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Iri(String),
    BlankNode(String),
    Literal(Literal),
}

impl Term {
    pub fn iri(s: impl Into<String>) -> Self {
        Term::Iri(s.into())
    }

    pub fn plain(s: impl Into<String>) -> Self {
        Term::Literal(Literal {
            lexical: s.into(),
            datatype: None,
            language: None,
        })
    }

    pub fn typed(s: impl Into<String>, datatype: impl Into<String>) -> Self {
        Term::Literal(Literal {
            lexical: s.into(),
            datatype: Some(datatype.into()),
            language: None,
        })
    }

    pub fn is_entity(&self) -> bool {
        matches!(self, Term::Iri(_) | Term::BlankNode(_))
    }

    pub fn lexical(&self) -> &str {
        match self {
            Term::Iri(s) | Term::BlankNode(s) => s,
            Term::Literal(l) => &l.lexical,
        }
    }

    /// Key for the total result order: lexical form first, then node kind,
    /// then datatype/language so equal lexical forms cannot tie.
    pub fn sort_key(&self) -> (&str, u8, &str, &str) {
        match self {
            Term::Iri(s) => (s, 0, "", ""),
            Term::BlankNode(s) => (s, 1, "", ""),
            Term::Literal(l) => (
                &l.lexical,
                2,
                l.datatype.as_deref().unwrap_or(""),
                l.language.as_deref().unwrap_or(""),
            ),
        }
    }

    /// Render in SPARQL/N-Triples surface syntax: `<iri>`, `_:label`,
    /// `"lexical"`, `"lexical"^^<datatype>` or `"lexical"@lang`.
    pub fn to_token(&self) -> String {
        match self {
            Term::Iri(s) => format!("<{s}>"),
            Term::BlankNode(s) => format!("_:{s}"),
            Term::Literal(l) => {
                let escaped = escape_literal(&l.lexical);
                match (&l.datatype, &l.language) {
                    (Some(dt), _) => format!("\"{escaped}\"^^<{dt}>"),
                    (None, Some(lang)) => format!("\"{escaped}\"@{lang}"),
                    (None, None) => format!("\"{escaped}\""),
                }
            }
        }
    }
}

impl PartialOrd for Term {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Term {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.sort_key().cmp(&other.sort_key())
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_token())
    }
}

pub fn escape_literal(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            other => out.push(other),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokens_render_each_node_kind() {
        assert_eq!(Term::iri("http://x/a").to_token(), "<http://x/a>");
        assert_eq!(Term::BlankNode("b0".into()).to_token(), "_:b0");
        assert_eq!(Term::plain("hi").to_token(), "\"hi\"");
        assert_eq!(
            Term::typed("5", "http://www.w3.org/2001/XMLSchema#integer").to_token(),
            "\"5\"^^<http://www.w3.org/2001/XMLSchema#integer>"
        );
        let lang = Term::Literal(Literal {
            lexical: "hallo".into(),
            datatype: None,
            language: Some("de".into()),
        });
        assert_eq!(lang.to_token(), "\"hallo\"@de");
    }

    #[test]
    fn literal_escapes_round_quotes_and_controls() {
        assert_eq!(
            Term::plain("a\"b\\c\nd").to_token(),
            "\"a\\\"b\\\\c\\nd\""
        );
    }

    #[test]
    fn order_is_lexical_first_then_kind() {
        let mut terms = vec![
            Term::plain("b"),
            Term::iri("b"),
            Term::iri("a"),
            Term::BlankNode("b".into()),
        ];
        terms.sort();
        assert_eq!(
            terms,
            vec![
                Term::iri("a"),
                Term::iri("b"),
                Term::BlankNode("b".into()),
                Term::plain("b"),
            ]
        );
    }
}
