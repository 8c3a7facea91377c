//! Concrete query syntax: serialization to a canonical single-line form and
//! a parser for the same fragment.
//!
//! The fragment covers exactly what the engine emits: `SELECT DISTINCT` over
//! one or more variables, a group of subject-shared triple patterns,
//! `FILTER(?a != ?b)` distinctness, `FILTER(DATATYPE(?v) = <iri>)`,
//! `VALUES ?v { ... }`, `FILTER(?v NOT IN (...))`, `ORDER BY`, `LIMIT`, and
//! `OFFSET`. Having a parser for it keeps the wire format honest
//! (serialize/parse round-trips are tested), lets schema documents embed
//! explicit target queries, and powers the in-process endpoint used in tests.

use std::fmt;

use super::{
    FilterMode, InstanceFilter, PatternObject, SelectQuery, TriplePattern, Variable,
};
use crate::term::{Literal, Term};

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

pub fn serialize_query(q: &SelectQuery) -> String {
    let mut s = String::with_capacity(128);
    s.push_str("SELECT DISTINCT");
    for v in &q.projection {
        s.push(' ');
        s.push_str(&v.to_string());
    }
    s.push_str(" WHERE {");
    for p in &q.patterns {
        s.push(' ');
        s.push_str(&p.subject.to_string());
        s.push_str(" <");
        s.push_str(&p.predicate);
        s.push_str("> ");
        match &p.object {
            PatternObject::Var(v) => s.push_str(&v.to_string()),
            PatternObject::Term(t) => s.push_str(&t.to_token()),
        }
        s.push_str(" .");
    }
    for (a, b) in &q.unequal_pairs {
        s.push_str(&format!(" FILTER({a} != {b})"));
    }
    for (v, dt) in &q.datatype_filters {
        s.push_str(&format!(" FILTER(DATATYPE({v}) = <{dt}>)"));
    }
    if let Some(f) = &q.instance_filter {
        match f.mode {
            FilterMode::Include => {
                s.push_str(&format!(" VALUES {} {{", f.variable));
                for t in &f.entities {
                    s.push(' ');
                    s.push_str(&t.to_token());
                }
                s.push_str(" }");
            }
            FilterMode::Exclude => {
                s.push_str(&format!(" FILTER({} NOT IN (", f.variable));
                for (i, t) in f.entities.iter().enumerate() {
                    if i > 0 {
                        s.push_str(", ");
                    }
                    s.push_str(&t.to_token());
                }
                s.push_str("))");
            }
        }
    }
    s.push_str(" }");
    if q.order_by {
        s.push_str(" ORDER BY");
        for v in &q.projection {
            s.push(' ');
            s.push_str(&v.to_string());
        }
    }
    if let Some(l) = q.limit {
        s.push_str(&format!(" LIMIT {l}"));
    }
    if let Some(o) = q.offset {
        s.push_str(&format!(" OFFSET {o}"));
    }
    s
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct QueryParseError {
    pub offset: usize,
    pub message: String,
}

impl fmt::Display for QueryParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "query parse error at offset {}: {}", self.offset, self.message)
    }
}

impl std::error::Error for QueryParseError {}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String), // keyword, uppercased
    Var(String),
    Iri(String),
    Lit(Term),
    Int(u64),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Dot,
    Comma,
    Neq,
    Eq,
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    len: usize,
}

impl<'a> Lexer<'a> {
    fn new(input: &'a str) -> Self {
        Lexer {
            chars: input.char_indices().peekable(),
            len: input.len(),
        }
    }

    fn err(&mut self, message: impl Into<String>) -> QueryParseError {
        let offset = self.chars.peek().map(|&(i, _)| i).unwrap_or(self.len);
        QueryParseError {
            offset,
            message: message.into(),
        }
    }

    fn next_token(&mut self) -> Result<Option<(usize, Tok)>, QueryParseError> {
        while let Some(&(_, c)) = self.chars.peek() {
            if c.is_whitespace() {
                self.chars.next();
            } else {
                break;
            }
        }
        let Some(&(start, c)) = self.chars.peek() else {
            return Ok(None);
        };
        let tok = match c {
            '{' => {
                self.chars.next();
                Tok::LBrace
            }
            '}' => {
                self.chars.next();
                Tok::RBrace
            }
            '(' => {
                self.chars.next();
                Tok::LParen
            }
            ')' => {
                self.chars.next();
                Tok::RParen
            }
            '.' => {
                self.chars.next();
                Tok::Dot
            }
            ',' => {
                self.chars.next();
                Tok::Comma
            }
            '=' => {
                self.chars.next();
                Tok::Eq
            }
            '!' => {
                self.chars.next();
                match self.chars.next() {
                    Some((_, '=')) => Tok::Neq,
                    _ => return Err(self.err("expected '=' after '!'")),
                }
            }
            '?' => {
                self.chars.next();
                let name = self.take_while(|c| c.is_alphanumeric() || c == '_');
                if name.is_empty() {
                    return Err(self.err("empty variable name"));
                }
                Tok::Var(name)
            }
            '<' => {
                self.chars.next();
                let iri = self.take_while(|c| c != '>');
                if self.chars.next().is_none() {
                    return Err(self.err("unterminated IRI"));
                }
                Tok::Iri(iri)
            }
            '"' => Tok::Lit(self.read_literal()?),
            '_' => {
                self.chars.next();
                match self.chars.next() {
                    Some((_, ':')) => {}
                    _ => return Err(self.err("expected ':' after '_'")),
                }
                let label = self.take_while(|c| c.is_alphanumeric() || c == '_');
                if label.is_empty() {
                    return Err(self.err("empty blank node label"));
                }
                Tok::Lit(Term::BlankNode(label))
            }
            d if d.is_ascii_digit() => {
                let digits = self.take_while(|c| c.is_ascii_digit());
                let value = digits
                    .parse::<u64>()
                    .map_err(|_| self.err("integer out of range"))?;
                Tok::Int(value)
            }
            a if a.is_ascii_alphabetic() => {
                let word = self.take_while(|c| c.is_ascii_alphanumeric());
                Tok::Word(word.to_ascii_uppercase())
            }
            other => return Err(self.err(format!("unexpected character {other:?}"))),
        };
        Ok(Some((start, tok)))
    }

    fn take_while(&mut self, pred: impl Fn(char) -> bool) -> String {
        let mut s = String::new();
        while let Some(&(_, c)) = self.chars.peek() {
            if pred(c) {
                s.push(c);
                self.chars.next();
            } else {
                break;
            }
        }
        s
    }

    fn read_literal(&mut self) -> Result<Term, QueryParseError> {
        self.chars.next(); // opening quote
        let mut lexical = String::new();
        loop {
            match self.chars.next() {
                None => return Err(self.err("unterminated literal")),
                Some((_, '"')) => break,
                Some((_, '\\')) => match self.chars.next() {
                    Some((_, '"')) => lexical.push('"'),
                    Some((_, '\\')) => lexical.push('\\'),
                    Some((_, 'n')) => lexical.push('\n'),
                    Some((_, 'r')) => lexical.push('\r'),
                    Some((_, 't')) => lexical.push('\t'),
                    other => {
                        return Err(self.err(format!("unsupported escape {other:?}")));
                    }
                },
                Some((_, c)) => lexical.push(c),
            }
        }
        match self.chars.peek() {
            Some(&(_, '^')) => {
                self.chars.next();
                match self.chars.next() {
                    Some((_, '^')) => {}
                    _ => return Err(self.err("expected '^^' before datatype")),
                }
                match self.chars.next() {
                    Some((_, '<')) => {}
                    _ => return Err(self.err("expected '<' to open datatype IRI")),
                }
                let dt = self.take_while(|c| c != '>');
                if self.chars.next().is_none() {
                    return Err(self.err("unterminated datatype IRI"));
                }
                Ok(Term::Literal(Literal {
                    lexical,
                    datatype: Some(dt),
                    language: None,
                }))
            }
            Some(&(_, '@')) => {
                self.chars.next();
                let lang = self.take_while(|c| c.is_ascii_alphanumeric() || c == '-');
                if lang.is_empty() {
                    return Err(self.err("empty language tag"));
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
}

fn tokenize(input: &str) -> Result<Vec<(usize, Tok)>, QueryParseError> {
    let mut lexer = Lexer::new(input);
    let mut out = Vec::new();
    while let Some(tok) = lexer.next_token()? {
        out.push(tok);
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.tokens.get(self.pos).map(|(_, t)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map(|&(i, _)| i).unwrap_or(self.end)
    }

    fn err(&self, message: impl Into<String>) -> QueryParseError {
        QueryParseError {
            offset: self.offset(),
            message: message.into(),
        }
    }

    fn expect_word(&mut self, word: &str) -> Result<(), QueryParseError> {
        match self.next() {
            Some(Tok::Word(w)) if w == word => Ok(()),
            other => Err(self.err(format!("expected {word}, got {other:?}"))),
        }
    }

    fn eat_word(&mut self, word: &str) -> bool {
        if matches!(self.peek(), Some(Tok::Word(w)) if w == word) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_var(&mut self) -> Result<Variable, QueryParseError> {
        match self.next() {
            Some(Tok::Var(name)) => Ok(Variable::new(name)),
            other => Err(self.err(format!("expected variable, got {other:?}"))),
        }
    }

    fn expect_term(&mut self) -> Result<Term, QueryParseError> {
        match self.next() {
            Some(Tok::Iri(iri)) => Ok(Term::Iri(iri)),
            Some(Tok::Lit(t)) => Ok(t),
            other => Err(self.err(format!("expected term, got {other:?}"))),
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), QueryParseError> {
        match self.next() {
            Some(t) if t == tok => Ok(()),
            other => Err(self.err(format!("expected {tok:?}, got {other:?}"))),
        }
    }
}

pub fn parse_select_query(input: &str) -> Result<SelectQuery, QueryParseError> {
    let tokens = tokenize(input)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        end: input.len(),
    };

    p.expect_word("SELECT")?;
    p.eat_word("DISTINCT");
    let mut projection = Vec::new();
    while matches!(p.peek(), Some(Tok::Var(_))) {
        projection.push(p.expect_var()?);
    }
    if projection.is_empty() {
        return Err(p.err("expected at least one projected variable"));
    }
    p.expect_word("WHERE")?;
    p.expect(Tok::LBrace)?;

    let mut query = SelectQuery {
        projection,
        patterns: Vec::new(),
        unequal_pairs: Vec::new(),
        datatype_filters: Vec::new(),
        instance_filter: None,
        order_by: false,
        limit: None,
        offset: None,
    };

    loop {
        match p.peek() {
            Some(Tok::RBrace) => {
                p.next();
                break;
            }
            Some(Tok::Var(_)) => {
                let subject = p.expect_var()?;
                let predicate = match p.next() {
                    Some(Tok::Iri(iri)) => iri,
                    other => return Err(p.err(format!("expected predicate IRI, got {other:?}"))),
                };
                let object = match p.next() {
                    Some(Tok::Var(name)) => PatternObject::Var(Variable::new(name)),
                    Some(Tok::Iri(iri)) => PatternObject::Term(Term::Iri(iri)),
                    Some(Tok::Lit(t)) => PatternObject::Term(t),
                    other => return Err(p.err(format!("expected pattern object, got {other:?}"))),
                };
                p.expect(Tok::Dot)?;
                query.patterns.push(TriplePattern {
                    subject,
                    predicate,
                    object,
                });
            }
            Some(Tok::Word(w)) if w == "FILTER" => {
                p.next();
                p.expect(Tok::LParen)?;
                match p.peek() {
                    Some(Tok::Word(w)) if w == "DATATYPE" => {
                        p.next();
                        p.expect(Tok::LParen)?;
                        let v = p.expect_var()?;
                        p.expect(Tok::RParen)?;
                        p.expect(Tok::Eq)?;
                        let dt = match p.next() {
                            Some(Tok::Iri(iri)) => iri,
                            other => {
                                return Err(p.err(format!("expected datatype IRI, got {other:?}")))
                            }
                        };
                        p.expect(Tok::RParen)?;
                        query.datatype_filters.push((v, dt));
                    }
                    Some(Tok::Var(_)) => {
                        let v = p.expect_var()?;
                        match p.next() {
                            Some(Tok::Neq) => {
                                let w = p.expect_var()?;
                                p.expect(Tok::RParen)?;
                                query.unequal_pairs.push((v, w));
                            }
                            Some(Tok::Word(kw)) if kw == "NOT" => {
                                p.expect_word("IN")?;
                                p.expect(Tok::LParen)?;
                                let mut entities = Vec::new();
                                if !matches!(p.peek(), Some(Tok::RParen)) {
                                    entities.push(p.expect_term()?);
                                    while matches!(p.peek(), Some(Tok::Comma)) {
                                        p.next();
                                        entities.push(p.expect_term()?);
                                    }
                                }
                                p.expect(Tok::RParen)?;
                                p.expect(Tok::RParen)?;
                                if query.instance_filter.is_some() {
                                    return Err(p.err("multiple instance filters"));
                                }
                                query.instance_filter = Some(InstanceFilter {
                                    variable: v,
                                    mode: FilterMode::Exclude,
                                    entities,
                                });
                            }
                            other => {
                                return Err(
                                    p.err(format!("expected != or NOT IN, got {other:?}"))
                                )
                            }
                        }
                    }
                    other => return Err(p.err(format!("unsupported filter, got {other:?}"))),
                }
            }
            Some(Tok::Word(w)) if w == "VALUES" => {
                p.next();
                let v = p.expect_var()?;
                p.expect(Tok::LBrace)?;
                let mut entities = Vec::new();
                while !matches!(p.peek(), Some(Tok::RBrace)) {
                    entities.push(p.expect_term()?);
                }
                p.expect(Tok::RBrace)?;
                if query.instance_filter.is_some() {
                    return Err(p.err("multiple instance filters"));
                }
                query.instance_filter = Some(InstanceFilter {
                    variable: v,
                    mode: FilterMode::Include,
                    entities,
                });
            }
            other => return Err(p.err(format!("unexpected token in group: {other:?}"))),
        }
    }

    if p.eat_word("ORDER") {
        p.expect_word("BY")?;
        let mut saw = false;
        while matches!(p.peek(), Some(Tok::Var(_))) {
            p.expect_var()?;
            saw = true;
        }
        if !saw {
            return Err(p.err("ORDER BY requires at least one variable"));
        }
        query.order_by = true;
    }
    if p.eat_word("LIMIT") {
        match p.next() {
            Some(Tok::Int(n)) => query.limit = Some(n),
            other => return Err(p.err(format!("expected LIMIT count, got {other:?}"))),
        }
    }
    if p.eat_word("OFFSET") {
        match p.next() {
            Some(Tok::Int(n)) => query.offset = Some(n),
            other => return Err(p.err(format!("expected OFFSET count, got {other:?}"))),
        }
    }
    if p.peek().is_some() {
        return Err(p.err("trailing input after query"));
    }
    Ok(query)
}

/// A validated explicit target query: single projected variable, star-shaped
/// around it, no filters or paging of its own.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedTarget {
    pub query: SelectQuery,
}

pub fn parse_target_query(input: &str) -> Result<ParsedTarget, QueryParseError> {
    let query = parse_select_query(input)?;
    let fail = |message: &str| QueryParseError {
        offset: 0,
        message: message.to_string(),
    };
    if query.projection.len() != 1 {
        return Err(fail("target query must project exactly one variable"));
    }
    if query.patterns.is_empty() {
        return Err(fail("target query must contain at least one pattern"));
    }
    let entity = &query.projection[0];
    if query.patterns.iter().any(|p| &p.subject != entity) {
        return Err(fail(
            "target query must be star-shaped: all pattern subjects must be the projected variable",
        ));
    }
    if query.instance_filter.is_some() {
        return Err(fail("target query must not carry an instance filter"));
    }
    if query.limit.is_some() || query.offset.is_some() {
        return Err(fail("target query must not be paged; paging is applied at execution"));
    }
    Ok(ParsedTarget { query })
}
