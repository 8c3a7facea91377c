//! In-process query endpoint speaking the same HTTP protocol as an external
//! SPARQL server, backed by the embedded evaluator. It exists so remote-mode
//! code paths — URL encoding, GET/POST switching, results-document decoding,
//! paging against a server — can be exercised hermetically, and so failure
//! handling can be tested by injecting error statuses.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use percent_encoding::percent_decode_str;
use serde_json::json;

use super::eval::evaluate;
use super::Graph;
use crate::query::text::parse_select_query;
use crate::term::Term;

struct StubState {
    graph: Graph,
    hits: AtomicUsize,
    fail_next: Mutex<Option<u16>>,
    shutdown: AtomicBool,
}

pub struct StubEndpoint {
    addr: SocketAddr,
    state: Arc<StubState>,
    handle: Option<JoinHandle<()>>,
}

impl StubEndpoint {
    pub fn spawn(graph: Graph) -> std::io::Result<StubEndpoint> {
        let listener = TcpListener::bind(("127.0.0.1", 0))?;
        let addr = listener.local_addr()?;
        let state = Arc::new(StubState {
            graph,
            hits: AtomicUsize::new(0),
            fail_next: Mutex::new(None),
            shutdown: AtomicBool::new(false),
        });
        let thread_state = Arc::clone(&state);
        let handle = std::thread::spawn(move || {
            for stream in listener.incoming() {
                if thread_state.shutdown.load(Ordering::SeqCst) {
                    break;
                }
                match stream {
                    Ok(stream) => handle_connection(stream, &thread_state),
                    Err(_) => break,
                }
            }
        });
        Ok(StubEndpoint {
            addr,
            state,
            handle: Some(handle),
        })
    }

    /// Endpoint URL to hand to a client.
    pub fn url(&self) -> String {
        format!("http://{}/sparql", self.addr)
    }

    /// Number of queries answered (error injections included).
    pub fn hits(&self) -> usize {
        self.state.hits.load(Ordering::SeqCst)
    }

    /// Make the next request fail with `status` instead of being evaluated.
    pub fn fail_next(&self, status: u16) {
        *self.state.fail_next.lock().unwrap() = Some(status);
    }
}

impl Drop for StubEndpoint {
    fn drop(&mut self) {
        self.state.shutdown.store(true, Ordering::SeqCst);
        // Unblock the accept loop.
        let _ = TcpStream::connect(self.addr);
        if let Some(handle) = self.handle.take() {
            let _ = handle.join();
        }
    }
}

fn handle_connection(stream: TcpStream, state: &StubState) {
    let _ = stream.set_read_timeout(Some(Duration::from_secs(5)));
    let _ = stream.set_write_timeout(Some(Duration::from_secs(5)));
    let mut reader = BufReader::new(stream);

    let mut request_line = String::new();
    if reader.read_line(&mut request_line).is_err() || request_line.is_empty() {
        return;
    }
    let mut parts = request_line.split_whitespace();
    let (method, target) = match (parts.next(), parts.next()) {
        (Some(m), Some(t)) => (m.to_string(), t.to_string()),
        _ => return,
    };

    let mut content_length = 0usize;
    loop {
        let mut line = String::new();
        match reader.read_line(&mut line) {
            Ok(0) => return,
            Ok(_) => {
                let line = line.trim_end();
                if line.is_empty() {
                    break;
                }
                if let Some((name, value)) = line.split_once(':') {
                    if name.eq_ignore_ascii_case("content-length") {
                        content_length = value.trim().parse().unwrap_or(0);
                    }
                }
            }
            Err(_) => return,
        }
    }

    let query_text = match method.as_str() {
        "GET" => match query_param(&target) {
            Some(q) => q,
            None => {
                respond(reader.into_inner(), 400, "missing query parameter");
                return;
            }
        },
        "POST" => {
            let mut body = vec![0u8; content_length];
            if reader.read_exact(&mut body).is_err() {
                return;
            }
            match String::from_utf8(body) {
                Ok(q) => q,
                Err(_) => {
                    respond(reader.into_inner(), 400, "body is not utf-8");
                    return;
                }
            }
        }
        _ => {
            respond(reader.into_inner(), 405, "only GET and POST are supported");
            return;
        }
    };

    state.hits.fetch_add(1, Ordering::SeqCst);
    if let Some(status) = state.fail_next.lock().unwrap().take() {
        respond(reader.into_inner(), status, "injected failure");
        return;
    }

    let query = match parse_select_query(&query_text) {
        Ok(q) => q,
        Err(e) => {
            respond(reader.into_inner(), 400, &e.to_string());
            return;
        }
    };
    // No answer cap: a server honors LIMIT/OFFSET as written.
    let outcome = match evaluate(&query, &state.graph, usize::MAX) {
        Ok(o) => o,
        Err(e) => {
            respond(reader.into_inner(), 400, &e.to_string());
            return;
        }
    };

    let vars: Vec<&str> = query.projection.iter().map(|v| v.name()).collect();
    let bindings: Vec<serde_json::Value> = outcome
        .rows
        .iter()
        .map(|row| {
            let mut obj = serde_json::Map::new();
            for (v, term) in vars.iter().zip(row) {
                obj.insert((*v).to_string(), encode_term(term));
            }
            serde_json::Value::Object(obj)
        })
        .collect();
    let doc = json!({
        "head": {"vars": vars},
        "results": {"bindings": bindings},
    });
    respond_json(reader.into_inner(), &doc.to_string());
}

fn query_param(target: &str) -> Option<String> {
    let (_, query_string) = target.split_once('?')?;
    for pair in query_string.split('&') {
        let (name, value) = pair.split_once('=').unwrap_or((pair, ""));
        if name == "query" {
            let plus_decoded = value.replace('+', " ");
            return percent_decode_str(&plus_decoded)
                .decode_utf8()
                .ok()
                .map(|s| s.into_owned());
        }
    }
    None
}

fn encode_term(term: &Term) -> serde_json::Value {
    match term {
        Term::Iri(iri) => json!({"type": "uri", "value": iri}),
        Term::BlankNode(label) => json!({"type": "bnode", "value": label}),
        Term::Literal(l) => {
            let mut obj = serde_json::Map::new();
            obj.insert("type".into(), json!("literal"));
            obj.insert("value".into(), json!(l.lexical));
            if let Some(dt) = &l.datatype {
                obj.insert("datatype".into(), json!(dt));
            }
            if let Some(lang) = &l.language {
                obj.insert("xml:lang".into(), json!(lang));
            }
            serde_json::Value::Object(obj)
        }
    }
}

fn respond_json(mut stream: TcpStream, body: &str) {
    let response = format!(
        "HTTP/1.1 200 OK\r\nContent-Type: application/sparql-results+json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
        body.len(),
        body
    );
    let _ = stream.write_all(response.as_bytes());
    let _ = stream.flush();
}

fn respond(mut stream: TcpStream, status: u16, message: &str) {
    let reason = match status {
        400 => "Bad Request",
        405 => "Method Not Allowed",
        500 => "Internal Server Error",
        503 => "Service Unavailable",
        _ => "Error",
    };
    let response = format!(
        "HTTP/1.1 {status} {reason}\r\nContent-Type: text/plain\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
        message.len(),
        message
    );
    let _ = stream.write_all(response.as_bytes());
    let _ = stream.flush();
}
