//! Wire-level tests of the OpenAI-compatible HTTP provider against a
//! scripted in-process TCP server.

use std::io::{Read, Write};
use std::net::{SocketAddr, TcpListener};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use tristrat::agents::{
    AgentError, AgentRole, CallTag, ChatRequest, CompletionClient, HttpProvider, Message,
    Provider, RetryPolicy,
};

/// One scripted exchange: HTTP status and response body, or a stall longer
/// than the client timeout.
enum Reply {
    Json(u16, String),
    Stall,
}

struct ScriptedServer {
    addr: SocketAddr,
    /// Full request texts (headers + body), in arrival order.
    requests: Arc<Mutex<Vec<String>>>,
    handle: Option<JoinHandle<()>>,
}

impl ScriptedServer {
    fn start(replies: Vec<Reply>) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let requests = Arc::new(Mutex::new(Vec::new()));
        let seen = Arc::clone(&requests);
        let handle = std::thread::spawn(move || {
            for reply in replies {
                let (mut stream, _) = listener.accept().unwrap();
                let request = read_http_request(&mut stream);
                seen.lock().unwrap().push(request);
                match reply {
                    Reply::Json(status, body) => {
                        let reason = if status == 200 { "OK" } else { "ERR" };
                        let response = format!(
                            "HTTP/1.1 {status} {reason}\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                            body.len()
                        );
                        stream.write_all(response.as_bytes()).unwrap();
                    }
                    Reply::Stall => {
                        std::thread::sleep(Duration::from_millis(700));
                    }
                }
            }
        });
        ScriptedServer {
            addr,
            requests,
            handle: Some(handle),
        }
    }

    fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    fn requests(&self) -> Vec<String> {
        self.requests.lock().unwrap().clone()
    }
}

impl Drop for ScriptedServer {
    fn drop(&mut self) {
        if let Some(handle) = self.handle.take() {
            let _ = handle.join();
        }
    }
}

fn read_http_request(stream: &mut std::net::TcpStream) -> String {
    stream
        .set_read_timeout(Some(Duration::from_secs(5)))
        .unwrap();
    let mut buf = Vec::new();
    let mut chunk = [0u8; 4096];
    loop {
        let n = stream.read(&mut chunk).unwrap_or(0);
        if n == 0 {
            break;
        }
        buf.extend_from_slice(&chunk[..n]);
        if let Some(header_end) = find_subslice(&buf, b"\r\n\r\n") {
            let headers = String::from_utf8_lossy(&buf[..header_end]).to_lowercase();
            let content_length = headers
                .lines()
                .find_map(|l| l.strip_prefix("content-length:"))
                .and_then(|v| v.trim().parse::<usize>().ok())
                .unwrap_or(0);
            if buf.len() >= header_end + 4 + content_length {
                break;
            }
        }
    }
    String::from_utf8_lossy(&buf).to_string()
}

fn find_subslice(haystack: &[u8], needle: &[u8]) -> Option<usize> {
    haystack.windows(needle.len()).position(|w| w == needle)
}

fn ok_body(content: &str) -> String {
    format!(
        r#"{{"choices":[{{"message":{{"role":"assistant","content":"{content}"}}}}],"usage":{{"prompt_tokens":12,"completion_tokens":3}}}}"#
    )
}

fn request() -> ChatRequest {
    ChatRequest::new(
        "test-model",
        vec![
            Message::system("system text"),
            Message::user("user text"),
        ],
        0.0,
        128,
        CallTag {
            role: AgentRole::Score,
            stock: Some("AAPL".to_string()),
            week: Some(5),
        },
    )
    .unwrap()
}

fn client_for(server: &ScriptedServer, api_key: Option<&str>) -> CompletionClient {
    let provider = HttpProvider::new(
        server.base_url(),
        api_key.map(str::to_string),
        Duration::from_millis(500),
    )
    .unwrap();
    CompletionClient::new(Arc::new(provider)).with_retry(RetryPolicy {
        attempts: 3,
        base_backoff: Duration::from_millis(1),
    })
}

#[test]
fn sends_wire_format_and_reads_first_choice() {
    let server = ScriptedServer::start(vec![Reply::Json(200, ok_body("hello from the wire"))]);
    let client = client_for(&server, Some("secret-key"));

    let completion = client.complete(&request()).unwrap();
    assert_eq!(completion.response.content, "hello from the wire");
    assert_eq!(completion.response.prompt_tokens, Some(12));

    let seen = server.requests();
    assert_eq!(seen.len(), 1);
    let raw = &seen[0];
    assert!(raw.starts_with("POST /chat/completions HTTP/1.1"));
    assert!(raw.to_lowercase().contains("authorization: bearer secret-key"));

    let body_start = raw.find("\r\n\r\n").unwrap() + 4;
    let body: serde_json::Value = serde_json::from_str(&raw[body_start..]).unwrap();
    assert_eq!(body["model"], "test-model");
    assert_eq!(body["temperature"], 0.0);
    assert_eq!(body["max_tokens"], 128);
    assert_eq!(body["messages"][0]["role"], "system");
    assert_eq!(body["messages"][1]["content"], "user text");
}

#[test]
fn retries_transport_errors_then_succeeds() {
    let server = ScriptedServer::start(vec![
        Reply::Json(500, r#"{"error":"upstream"}"#.to_string()),
        Reply::Json(503, r#"{"error":"busy"}"#.to_string()),
        Reply::Json(200, ok_body("third time lucky")),
    ]);
    let client = client_for(&server, None);
    let completion = client.complete(&request()).unwrap();
    assert_eq!(completion.response.content, "third time lucky");
    assert_eq!(completion.record.attempts, 3);
    assert_eq!(client.transport_calls(), 3);
}

#[test]
fn auth_failure_is_distinct_and_not_retried() {
    let server = ScriptedServer::start(vec![Reply::Json(
        401,
        r#"{"error":"bad key"}"#.to_string(),
    )]);
    let client = client_for(&server, Some("wrong"));
    match client.complete(&request()) {
        Err(AgentError::Auth(message)) => assert!(message.contains("401")),
        other => panic!("expected Auth error, got {other:?}"),
    }
    assert_eq!(client.transport_calls(), 1);
}

#[test]
fn timeout_is_distinct_and_retried() {
    let server = ScriptedServer::start(vec![Reply::Stall, Reply::Json(200, ok_body("slow but fine"))]);
    let client = client_for(&server, None);
    let completion = client.complete(&request()).unwrap();
    assert_eq!(completion.response.content, "slow but fine");
    assert_eq!(completion.record.attempts, 2);
}

#[test]
fn malformed_payload_is_distinct() {
    let server = ScriptedServer::start(vec![Reply::Json(200, r#"{"choices":[]}"#.to_string())]);
    let client = client_for(&server, None);
    match client.complete(&request()) {
        Err(AgentError::MalformedPayload(_)) => {}
        other => panic!("expected MalformedPayload, got {other:?}"),
    }
}

#[test]
fn provider_parses_cached_bodies_without_network() {
    let tmp = tempfile::tempdir().unwrap();
    let cache = tristrat::agents::ResponseCache::open(tmp.path()).unwrap();
    let req = request();
    cache
        .put(&tristrat::agents::cache_key(&req), &ok_body("from cache"))
        .unwrap();

    // No server behind this address; the cache must answer.
    let provider =
        HttpProvider::new("http://127.0.0.1:9", None, Duration::from_millis(200)).unwrap();
    let client = CompletionClient::new(Arc::new(provider) as Arc<dyn Provider>)
        .with_cache(tristrat::agents::ResponseCache::open(tmp.path()).unwrap())
        .replay_only();
    let completion = client.complete(&req).unwrap();
    assert_eq!(completion.response.content, "from cache");
    assert!(completion.record.cache_hit);
    assert_eq!(client.transport_calls(), 0);
}
