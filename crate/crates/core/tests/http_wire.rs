//! The HTTP clients against a scripted local server.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::mpsc;
use std::thread;

use riskrag::providers::{
    embed, ChatProvider, ChatRequest, EmbeddingProvider, HttpChat, HttpEmbedder, ProviderConfig, ProviderError, Task,
};
use serde_json::{json, Value};

#[derive(Debug)]
struct Received {
    path: String,
    authorization: Option<String>,
    body: Value,
}

/// Serve one canned `(status, body)` reply per connection, in order, and
/// report each request back over the channel.
fn serve(replies: Vec<(u16, String)>) -> (String, mpsc::Receiver<Received>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1", listener.local_addr().unwrap());
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        for (status, reply) in replies {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut request_line = String::new();
            reader.read_line(&mut request_line).unwrap();
            let path = request_line.split_whitespace().nth(1).unwrap_or_default().to_string();
            let (mut length, mut authorization) = (0usize, None);
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                let line = line.trim_end();
                if line.is_empty() {
                    break;
                }
                let (name, value) = line.split_once(':').unwrap();
                match name.to_ascii_lowercase().as_str() {
                    "content-length" => length = value.trim().parse().unwrap(),
                    "authorization" => authorization = Some(value.trim().to_string()),
                    _ => {}
                }
            }
            let mut body = vec![0u8; length];
            reader.read_exact(&mut body).unwrap();
            tx.send(Received {
                path,
                authorization,
                body: serde_json::from_slice(&body).unwrap(),
            })
            .unwrap();
            let mut stream = stream;
            write!(
                stream,
                "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{reply}",
                reply.len()
            )
            .unwrap();
        }
    });
    (url, rx)
}

fn config(url: &str, model: &str) -> ProviderConfig {
    let mut c = ProviderConfig::new(url, model);
    c.max_retries = 2;
    c.backoff_ms = 1;
    c
}

fn request() -> ChatRequest {
    ChatRequest {
        task: Task::RiskExtraction,
        system: "sys".into(),
        user: "usr".into(),
        variables: Default::default(),
        temperature: 0.0,
        max_tokens: 64,
    }
}

#[test]
fn chat_request_follows_the_completions_wire_format() {
    std::env::set_var("RISKRAG_TEST_CHAT_KEY", "secret-token");
    let reply = json!({"choices": [{"message": {"role": "assistant", "content": "{\"risks\": []}"}}]});
    let (url, rx) = serve(vec![(200, reply.to_string())]);
    let mut cfg = config(&url, "chat-model");
    cfg.api_key_env = Some("RISKRAG_TEST_CHAT_KEY".into());
    let chat = HttpChat::new(cfg).unwrap();
    assert_eq!(chat.complete(&request()).unwrap(), "{\"risks\": []}");

    let got = rx.recv().unwrap();
    assert_eq!(got.path, "/v1/chat/completions");
    assert_eq!(got.authorization.as_deref(), Some("Bearer secret-token"));
    assert_eq!(got.body["model"], "chat-model");
    assert_eq!(got.body["messages"][0], json!({"role": "system", "content": "sys"}));
    assert_eq!(got.body["messages"][1], json!({"role": "user", "content": "usr"}));
    assert_eq!(got.body["max_tokens"], 64);
}

#[test]
fn server_errors_are_retried_and_auth_errors_are_not() {
    let ok = json!({"choices": [{"message": {"content": "done"}}]}).to_string();
    let (url, rx) = serve(vec![(503, "{}".into()), (200, ok)]);
    let chat = HttpChat::new(config(&url, "m")).unwrap();
    assert_eq!(chat.complete(&request()).unwrap(), "done");
    assert_eq!(rx.try_iter().count(), 2);

    let (url, rx) = serve(vec![(401, "{\"error\": \"bad key\"}".into())]);
    let chat = HttpChat::new(config(&url, "m")).unwrap();
    assert!(matches!(chat.complete(&request()), Err(ProviderError::Auth(_))));
    assert_eq!(rx.try_iter().count(), 1);
}

#[test]
fn exhausted_retries_report_the_attempt_count() {
    let (url, _rx) = serve(vec![(500, "{}".into()), (502, "{}".into()), (503, "{}".into())]);
    let chat = HttpChat::new(config(&url, "m")).unwrap();
    match chat.complete(&request()) {
        Err(ProviderError::Unavailable { attempts, .. }) => assert_eq!(attempts, 3),
        other => panic!("expected Unavailable, got {other:?}"),
    }
}

#[test]
fn missing_key_variable_fails_before_any_request() {
    let mut cfg = config("http://127.0.0.1:9", "m");
    cfg.api_key_env = Some("RISKRAG_TEST_UNSET_VARIABLE".into());
    assert!(matches!(HttpChat::new(cfg), Err(ProviderError::Auth(_))));
}

#[test]
fn embeddings_are_batched_reordered_and_normalized() {
    // The server answers out of order; `index` restores input order.
    let first = json!({"data": [
        {"index": 1, "embedding": [0.0, 2.0]},
        {"index": 0, "embedding": [3.0, 4.0]},
    ]});
    let second = json!({"data": [{"index": 0, "embedding": [0.0, 0.0, ]}]});
    let (url, rx) = serve(vec![(200, first.to_string()), (200, second.to_string())]);
    let mut cfg = config(&url, "embed-model");
    cfg.batch_size = 2;
    cfg.parallelism = 1;
    let embedder = HttpEmbedder::new(cfg).unwrap();
    assert_eq!(embedder.model_name(), "embed-model");

    let texts: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
    let out = embed::<f64>(&embedder, &texts).unwrap();
    assert_eq!(out.vectors[0], vec![0.6, 0.8]);
    assert_eq!(out.vectors[1], vec![0.0, 1.0]);
    assert_eq!(out.degenerate, vec![2]);

    let bodies: Vec<Value> = rx.try_iter().map(|r| r.body).collect();
    assert_eq!(bodies.len(), 2);
    assert_eq!(bodies[0]["input"], json!(["a", "b"]));
    assert_eq!(bodies[1]["input"], json!(["c"]));
}
