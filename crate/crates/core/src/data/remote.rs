//! HTTP client for SPARQL-protocol query endpoints.
//!
//! Queries travel as `GET ?query=` with percent-encoding while the full URL
//! stays within a configurable length, and switch to `POST` with an
//! `application/sparql-query` body beyond it — endpoints and intermediaries
//! commonly cap URL length around two kilobytes, and instance-filtered
//! queries routinely exceed that. Results are expected as
//! `application/sparql-results+json`.

use std::collections::HashMap;
use std::time::Duration;

use percent_encoding::{utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};
use serde::Deserialize;

use super::DataError;
use crate::query::Variable;
use crate::term::{Literal, Term};

/// Encode everything except RFC 3986 unreserved characters.
const QUERY_COMPONENT: &AsciiSet = &NON_ALPHANUMERIC
    .remove(b'-')
    .remove(b'.')
    .remove(b'_')
    .remove(b'~');

const RESULTS_JSON: &str = "application/sparql-results+json";

/// Largest full request URL sent as GET before switching to POST.
pub const DEFAULT_GET_URL_LIMIT: usize = 2000;

pub struct SparqlClient {
    agent: ureq::Agent,
    endpoint: String,
    get_url_limit: usize,
}

impl SparqlClient {
    pub fn new(endpoint: impl Into<String>, timeout: Duration, get_url_limit: usize) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        SparqlClient {
            agent,
            endpoint: endpoint.into(),
            get_url_limit,
        }
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    /// Run a select query and return rows aligned to `projection`.
    pub fn select(
        &self,
        query_text: &str,
        projection: &[Variable],
    ) -> Result<Vec<Vec<Term>>, DataError> {
        let encoded = utf8_percent_encode(query_text, QUERY_COMPONENT);
        let url = format!("{}?query={}", self.endpoint, encoded);
        let result = if url.len() <= self.get_url_limit {
            self.agent.get(&url).header("Accept", RESULTS_JSON).call()
        } else {
            self.agent
                .post(&self.endpoint)
                .header("Accept", RESULTS_JSON)
                .header("Content-Type", "application/sparql-query")
                .send(query_text)
        };
        let mut response = match result {
            Ok(r) => r,
            Err(ureq::Error::StatusCode(status)) => {
                return Err(DataError::Endpoint {
                    status,
                    detail: "endpoint rejected the query".into(),
                })
            }
            Err(e) => return Err(DataError::Transport(e.to_string())),
        };
        let status = response.status().as_u16();
        if status != 200 {
            return Err(DataError::Endpoint {
                status,
                detail: "unexpected response status".into(),
            });
        }
        let body = response
            .body_mut()
            .read_to_string()
            .map_err(|e| DataError::Transport(e.to_string()))?;
        parse_results_json(&body, projection)
    }
}

#[derive(Deserialize)]
struct ResultsDoc {
    head: Head,
    results: Bindings,
}

#[derive(Deserialize)]
struct Head {
    vars: Vec<String>,
}

#[derive(Deserialize)]
struct Bindings {
    bindings: Vec<HashMap<String, BindingValue>>,
}

#[derive(Deserialize)]
struct BindingValue {
    #[serde(rename = "type")]
    kind: String,
    value: String,
    datatype: Option<String>,
    #[serde(rename = "xml:lang")]
    lang: Option<String>,
}

/// Decode a results document into rows aligned to `projection`. Every
/// projected variable must be bound in every row: the generated queries have
/// no optional parts.
pub fn parse_results_json(
    body: &str,
    projection: &[Variable],
) -> Result<Vec<Vec<Term>>, DataError> {
    let doc: ResultsDoc =
        serde_json::from_str(body).map_err(|e| DataError::Results(e.to_string()))?;
    for v in projection {
        if !doc.head.vars.iter().any(|h| h == v.name()) {
            return Err(DataError::Results(format!(
                "results head is missing variable {v}"
            )));
        }
    }
    let mut rows = Vec::with_capacity(doc.results.bindings.len());
    for binding in doc.results.bindings {
        let mut row = Vec::with_capacity(projection.len());
        for v in projection {
            let value = binding.get(v.name()).ok_or_else(|| {
                DataError::Results(format!("row is missing a binding for {v}"))
            })?;
            row.push(decode_term(value)?);
        }
        rows.push(row);
    }
    Ok(rows)
}

fn decode_term(b: &BindingValue) -> Result<Term, DataError> {
    match b.kind.as_str() {
        "uri" => Ok(Term::Iri(b.value.clone())),
        "bnode" => Ok(Term::BlankNode(b.value.clone())),
        "literal" | "typed-literal" => Ok(Term::Literal(Literal {
            lexical: b.value.clone(),
            datatype: b.datatype.clone(),
            language: b.lang.clone(),
        })),
        other => Err(DataError::Results(format!(
            "unknown binding type {other:?}"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decodes_each_binding_kind() {
        let body = r#"{
            "head": {"vars": ["x", "p0"]},
            "results": {"bindings": [
                {"x": {"type": "uri", "value": "urn:a"},
                 "p0": {"type": "literal", "value": "v"}},
                {"x": {"type": "bnode", "value": "b0"},
                 "p0": {"type": "literal", "value": "1",
                         "datatype": "urn:int"}}
            ]}
        }"#;
        let projection = vec![Variable::new("x"), Variable::new("p0")];
        let rows = parse_results_json(body, &projection).unwrap();
        assert_eq!(
            rows,
            vec![
                vec![Term::iri("urn:a"), Term::plain("v")],
                vec![Term::BlankNode("b0".into()), Term::typed("1", "urn:int")],
            ]
        );
    }

    #[test]
    fn missing_binding_is_an_error() {
        let body = r#"{
            "head": {"vars": ["x"]},
            "results": {"bindings": [{}]}
        }"#;
        let projection = vec![Variable::new("x")];
        assert!(matches!(
            parse_results_json(body, &projection),
            Err(DataError::Results(_))
        ));
    }

    #[test]
    fn unreachable_endpoint_is_a_transport_error() {
        // Reserved TEST-NET address: connection fails fast.
        let client = SparqlClient::new(
            "http://127.0.0.1:9/sparql",
            Duration::from_millis(300),
            DEFAULT_GET_URL_LIMIT,
        );
        let projection = vec![Variable::new("x")];
        match client.select("SELECT DISTINCT ?x WHERE { }", &projection) {
            Err(DataError::Transport(_)) => {}
            other => panic!("expected transport error, got {other:?}"),
        }
    }
}
