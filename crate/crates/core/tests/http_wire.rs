//! Wire behaviour of the HTTP gateway against a scripted local server.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;

use rr_core::gateway::HttpGateway;
use rr_core::{BackendConfig, CompletionRequest, Error, ModelGateway};
use serde_json::{json, Value};

struct Request {
    path: String,
    request_id: Option<String>,
    body: Value,
}

enum Reply {
    /// Close the connection without answering.
    Drop,
    Json {
        status: u16,
        body: Value,
        echo: Option<String>,
    },
}

struct Server {
    endpoint: String,
    connections: Arc<AtomicUsize>,
    seen: Arc<Mutex<Vec<Value>>>,
}

fn read_request(stream: &mut TcpStream) -> Option<Request> {
    let mut reader = BufReader::new(stream.try_clone().ok()?);
    let mut line = String::new();
    reader.read_line(&mut line).ok()?;
    let path = line.split_whitespace().nth(1)?.to_string();
    let mut len = 0usize;
    let mut request_id = None;
    loop {
        let mut h = String::new();
        reader.read_line(&mut h).ok()?;
        let h = h.trim_end();
        if h.is_empty() {
            break;
        }
        let (k, v) = h.split_once(':')?;
        match k.trim().to_ascii_lowercase().as_str() {
            "content-length" => len = v.trim().parse().ok()?,
            "x-request-id" => request_id = Some(v.trim().to_string()),
            _ => {}
        }
    }
    let mut body = vec![0u8; len];
    reader.read_exact(&mut body).ok()?;
    Some(Request {
        path,
        request_id,
        body: serde_json::from_slice(&body).ok()?,
    })
}

fn serve<F>(handler: F) -> Server
where
    F: Fn(usize, &Request) -> Reply + Send + 'static,
{
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let endpoint = format!("http://{}", listener.local_addr().unwrap());
    let connections = Arc::new(AtomicUsize::new(0));
    let seen = Arc::new(Mutex::new(Vec::new()));
    let (c, s) = (connections.clone(), seen.clone());
    thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { continue };
            let n = c.fetch_add(1, Ordering::SeqCst);
            let Some(req) = read_request(&mut stream) else { continue };
            s.lock().unwrap().push(json!({"path": req.path, "body": req.body}));
            match handler(n, &req) {
                Reply::Drop => drop(stream),
                Reply::Json { status, body, echo } => {
                    let text = body.to_string();
                    let id = echo.or(req.request_id.clone()).unwrap_or_default();
                    let head = format!(
                        "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nx-request-id: {id}\r\nConnection: close\r\n\r\n",
                        text.len()
                    );
                    let _ = stream.write_all(head.as_bytes());
                    let _ = stream.write_all(text.as_bytes());
                }
            }
        }
    });
    Server {
        endpoint,
        connections,
        seen,
    }
}

fn ok(body: Value) -> Reply {
    Reply::Json {
        status: 200,
        body,
        echo: None,
    }
}

fn gateway(server: &Server, retries: u32) -> HttpGateway {
    HttpGateway::new(&BackendConfig {
        endpoint: server.endpoint.clone(),
        timeout_ms: 5_000,
        retries,
        mock_mode: false,
        mock_table: None,
    })
    .unwrap()
}

#[test]
fn completion_request_shape() {
    let server = serve(|_, req| {
        assert_eq!(req.path, "/v1/complete");
        ok(json!({"completions": ["a", "b"]}))
    });
    let gw = gateway(&server, 0);
    let out = gw
        .complete(&CompletionRequest::new("Q: x\nA:", 2, 0.7, 64).unwrap())
        .unwrap();
    assert_eq!(out, vec!["a", "b"]);
    let seen = server.seen.lock().unwrap();
    let body = &seen[0]["body"];
    assert_eq!(body["prompt"], "Q: x\nA:");
    assert_eq!(body["n"], 2);
    assert_eq!(body["max_tokens"], 64);
}

#[test]
fn transport_failures_are_retried() {
    let server = serve(|n, _| {
        if n < 2 {
            Reply::Drop
        } else {
            ok(json!({"scores": [0.25]}))
        }
    });
    let gw = gateway(&server, 3);
    assert_eq!(gw.similarity("a", "b").unwrap(), 0.25);
    assert_eq!(server.connections.load(Ordering::SeqCst), 3);
}

#[test]
fn retries_are_bounded() {
    let server = serve(|_, _| Reply::Drop);
    let gw = gateway(&server, 2);
    assert!(matches!(gw.similarity("a", "b"), Err(Error::Transport(_))));
    assert_eq!(server.connections.load(Ordering::SeqCst), 3);
}

#[test]
fn http_errors_are_not_retried() {
    let server = serve(|_, _| Reply::Json {
        status: 500,
        body: json!({"error": "boom"}),
        echo: None,
    });
    let gw = gateway(&server, 3);
    let err = gw.similarity("a", "b").unwrap_err();
    assert!(err.to_string().contains("500"), "{err}");
    assert_eq!(server.connections.load(Ordering::SeqCst), 1);
}

#[test]
fn correlation_id_must_match() {
    let server = serve(|_, _| Reply::Json {
        status: 200,
        body: json!({"scores": [0.5]}),
        echo: Some("someone-else".into()),
    });
    assert!(gateway(&server, 0).similarity("a", "b").is_err());
}

#[test]
fn nli_skips_empty_premises() {
    let server = serve(|_, req| {
        let n = req.body["pairs"].as_array().unwrap().len();
        let scores: Vec<Value> = (0..n)
            .map(|_| json!({"entailment": 0.9, "contradiction": 0.05, "neutral": 0.05}))
            .collect();
        ok(json!({ "scores": scores }))
    });
    let gw = gateway(&server, 0);
    let out = gw.nli_batch(&[("", "h1"), ("premise", "h2"), ("  ", "h3")]).unwrap();
    assert_eq!(out[0].entailment, 0.0);
    assert_eq!(out[1].entailment, 0.9);
    assert_eq!(out[2].contradiction, 0.0);
    let seen = server.seen.lock().unwrap();
    assert_eq!(seen.len(), 1);
    assert_eq!(
        seen[0]["body"]["pairs"],
        json!([{"premise": "premise", "hypothesis": "h2"}])
    );

    // All-empty batches never reach the wire.
    drop(seen);
    gw.nli_batch(&[("", "h")]).unwrap();
    assert_eq!(server.connections.load(Ordering::SeqCst), 1);
}

#[test]
fn out_of_range_scores_are_rejected() {
    let server = serve(|_, _| ok(json!({"scores": [1.5]})));
    assert!(gateway(&server, 0).similarity("a", "b").is_err());
}

#[test]
fn answer_count_is_checked() {
    let server = serve(|_, _| ok(json!({"answers": ["x", "y"]})));
    assert!(gateway(&server, 0).answer("q", "c").is_err());
}
