//! Line-oriented triple syntax: one `<subject> <predicate> object .` per
//! line, `#` comments, blank lines ignored. Objects may be IRIs, blank
//! nodes, or literals with optional datatype or language tag.

use std::iter::Peekable;
use std::str::CharIndices;

use super::{DataError, Graph};
use crate::term::{Literal, Term};

pub fn parse_graph(text: &str) -> Result<Graph, DataError> {
    let mut graph = Graph::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (s, p, o) = parse_triple_line(line).map_err(|message| DataError::TripleSyntax {
            line: lineno + 1,
            message,
        })?;
        graph.insert(s, p, o);
    }
    Ok(graph)
}

pub fn serialize_graph(graph: &Graph) -> String {
    let mut out = String::new();
    for (s, p, o) in graph.triples() {
        out.push_str(&s.to_token());
        out.push_str(" <");
        out.push_str(p);
        out.push_str("> ");
        out.push_str(&o.to_token());
        out.push_str(" .\n");
    }
    out
}

fn parse_triple_line(line: &str) -> Result<(Term, String, Term), String> {
    let mut chars = line.char_indices().peekable();
    let subject = scan_term(&mut chars, line)?;
    if !matches!(subject, Term::Iri(_) | Term::BlankNode(_)) {
        return Err("subject must be an IRI or blank node".into());
    }
    skip_ws(&mut chars);
    let predicate = match scan_term(&mut chars, line)? {
        Term::Iri(iri) => iri,
        _ => return Err("predicate must be an IRI".into()),
    };
    skip_ws(&mut chars);
    let object = scan_term(&mut chars, line)?;
    skip_ws(&mut chars);
    match chars.next() {
        Some((_, '.')) => {}
        _ => return Err("expected terminating '.'".into()),
    }
    skip_ws(&mut chars);
    if chars.next().is_some() {
        return Err("trailing content after '.'".into());
    }
    Ok((subject, predicate, object))
}

/// Parse a complete term token: `<iri>`, `_:label`, `"literal"` with
/// optional `^^<datatype>` or `@lang` suffix.
pub fn parse_term(input: &str) -> Result<Term, String> {
    let input = input.trim();
    let mut chars = input.char_indices().peekable();
    let term = scan_term(&mut chars, input)?;
    if chars.next().is_some() {
        return Err(format!("trailing content after term in {input:?}"));
    }
    Ok(term)
}

fn skip_ws(chars: &mut Peekable<CharIndices>) {
    while matches!(chars.peek(), Some(&(_, c)) if c.is_whitespace()) {
        chars.next();
    }
}

fn scan_term(chars: &mut Peekable<CharIndices>, context: &str) -> Result<Term, String> {
    match chars.peek() {
        Some(&(_, '<')) => {
            chars.next();
            let mut iri = String::new();
            loop {
                match chars.next() {
                    Some((_, '>')) => break,
                    Some((_, c)) => iri.push(c),
                    None => return Err(format!("unterminated IRI in {context:?}")),
                }
            }
            if iri.is_empty() {
                return Err("empty IRI".into());
            }
            Ok(Term::Iri(iri))
        }
        Some(&(_, '_')) => {
            chars.next();
            match chars.next() {
                Some((_, ':')) => {}
                _ => return Err("expected ':' after '_' in blank node".into()),
            }
            let mut label = String::new();
            while let Some(&(_, c)) = chars.peek() {
                if c.is_alphanumeric() || c == '_' {
                    label.push(c);
                    chars.next();
                } else {
                    break;
                }
            }
            if label.is_empty() {
                return Err("empty blank node label".into());
            }
            Ok(Term::BlankNode(label))
        }
        Some(&(_, '"')) => {
            chars.next();
            let mut lexical = String::new();
            loop {
                match chars.next() {
                    None => return Err(format!("unterminated literal in {context:?}")),
                    Some((_, '"')) => break,
                    Some((_, '\\')) => match chars.next() {
                        Some((_, '"')) => lexical.push('"'),
                        Some((_, '\\')) => lexical.push('\\'),
                        Some((_, 'n')) => lexical.push('\n'),
                        Some((_, 'r')) => lexical.push('\r'),
                        Some((_, 't')) => lexical.push('\t'),
                        other => return Err(format!("unsupported escape {other:?}")),
                    },
                    Some((_, c)) => lexical.push(c),
                }
            }
            match chars.peek() {
                Some(&(_, '^')) => {
                    chars.next();
                    match chars.next() {
                        Some((_, '^')) => {}
                        _ => return Err("expected '^^' before datatype".into()),
                    }
                    match chars.next() {
                        Some((_, '<')) => {}
                        _ => return Err("expected '<' to open datatype IRI".into()),
                    }
                    let mut dt = String::new();
                    loop {
                        match chars.next() {
                            Some((_, '>')) => break,
                            Some((_, c)) => dt.push(c),
                            None => return Err("unterminated datatype IRI".into()),
                        }
                    }
                    Ok(Term::Literal(Literal {
                        lexical,
                        datatype: Some(dt),
                        language: None,
                    }))
                }
                Some(&(_, '@')) => {
                    chars.next();
                    let mut lang = String::new();
                    while let Some(&(_, c)) = chars.peek() {
                        if c.is_ascii_alphanumeric() || c == '-' {
                            lang.push(c);
                            chars.next();
                        } else {
                            break;
                        }
                    }
                    if lang.is_empty() {
                        return Err("empty language tag".into());
                    }
                    Ok(Term::Literal(Literal {
                        lexical,
                        datatype: None,
                        language: Some(lang),
                    }))
                }
                _ => Ok(Term::plain(lexical)),
            }
        }
        Some(&(_, c)) => Err(format!("unexpected character {c:?} in {context:?}")),
        None => Err(format!("expected a term in {context:?}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_serializes_round_trip() {
        let text = concat!(
            "# a comment\n",
            "<urn:a> <urn:p> <urn:b> .\n",
            "\n",
            "<urn:a> <urn:name> \"Ada \\\"L\\\"\" .\n",
            "<urn:a> <urn:age> \"36\"^^<http://www.w3.org/2001/XMLSchema#integer> .\n",
            "_:n1 <urn:label> \"hei\"@no .\n",
        );
        let g = parse_graph(text).unwrap();
        assert_eq!(g.len(), 4);
        let again = parse_graph(&serialize_graph(&g)).unwrap();
        assert_eq!(g.len(), again.len());
        for (s, p, o) in g.triples() {
            assert!(again.objects(s, p).contains(o), "missing {s} {p} {o}");
        }
    }

    #[test]
    fn rejects_malformed_lines() {
        for bad in [
            "<urn:a> <urn:p> <urn:b>",       // missing dot
            "<urn:a> <urn:p> .",             // missing object
            "\"lit\" <urn:p> <urn:b> .",     // literal subject
            "<urn:a> _:b <urn:c> .",         // blank predicate
            "<urn:a> <urn:p> <urn:b> . x",   // trailing garbage
            "<urn:a> <urn:p> \"open .",      // unterminated literal
        ] {
            assert!(parse_graph(bad).is_err(), "accepted {bad:?}");
        }
    }

    #[test]
    fn parse_term_reads_each_kind() {
        assert_eq!(parse_term("<urn:x>").unwrap(), Term::iri("urn:x"));
        assert_eq!(parse_term("_:b0").unwrap(), Term::BlankNode("b0".into()));
        assert_eq!(parse_term("\"v\"").unwrap(), Term::plain("v"));
        let typed = parse_term("\"1\"^^<urn:int>").unwrap();
        assert_eq!(typed, Term::typed("1", "urn:int"));
        assert!(parse_term("<urn:x> junk").is_err());
    }
}
