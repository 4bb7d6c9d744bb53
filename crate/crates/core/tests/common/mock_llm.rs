//! Minimal chat-completions server on a loopback port. Each connection carries
//! one request and is closed after the reply.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use serde_json::{json, Value};

pub enum Reply {
    Text(String),
    Status(u16),
    Garbage,
}

#[derive(Debug, Clone)]
pub struct Recorded {
    pub path: String,
    pub authorization: Option<String>,
    pub body: Value,
}

impl Recorded {
    pub fn prompt(&self) -> &str {
        self.body["messages"][0]["content"].as_str().unwrap_or("")
    }
}

type Responder = dyn Fn(&str, usize) -> Reply + Send + Sync;

pub struct MockLlm {
    port: u16,
    calls: Arc<AtomicUsize>,
    requests: Arc<Mutex<Vec<Recorded>>>,
    stop: Arc<AtomicBool>,
    handle: Option<JoinHandle<()>>,
}

impl MockLlm {
    /// `responder` gets the prompt and the 0-based index of the request.
    pub fn start<F>(responder: F) -> Self
    where
        F: Fn(&str, usize) -> Reply + Send + Sync + 'static,
    {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind loopback");
        let port = listener.local_addr().unwrap().port();
        let calls = Arc::new(AtomicUsize::new(0));
        let requests = Arc::new(Mutex::new(Vec::new()));
        let stop = Arc::new(AtomicBool::new(false));
        let responder: Arc<Responder> = Arc::new(responder);

        let handle = {
            let (calls, requests, stop) = (calls.clone(), requests.clone(), stop.clone());
            std::thread::spawn(move || {
                for stream in listener.incoming() {
                    if stop.load(Ordering::SeqCst) {
                        break;
                    }
                    let Ok(stream) = stream else { continue };
                    let (calls, requests, responder) = (calls.clone(), requests.clone(), responder.clone());
                    std::thread::spawn(move || {
                        let _ = serve(stream, &calls, &requests, responder.as_ref());
                    });
                }
            })
        };
        MockLlm {
            port,
            calls,
            requests,
            stop,
            handle: Some(handle),
        }
    }

    pub fn base_url(&self) -> String {
        format!("http://127.0.0.1:{}", self.port)
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn requests(&self) -> Vec<Recorded> {
        self.requests.lock().unwrap().clone()
    }
}

impl Drop for MockLlm {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        let _ = TcpStream::connect(("127.0.0.1", self.port));
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

fn serve(
    stream: TcpStream,
    calls: &AtomicUsize,
    requests: &Mutex<Vec<Recorded>>,
    responder: &Responder,
) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut request_line = String::new();
    if reader.read_line(&mut request_line)? == 0 {
        return Ok(());
    }
    let path = request_line.split_whitespace().nth(1).unwrap_or("/").to_string();
    let mut content_length = 0usize;
    let mut authorization = None;
    loop {
        let mut line = String::new();
        reader.read_line(&mut line)?;
        let line = line.trim_end();
        if line.is_empty() {
            break;
        }
        if let Some((name, value)) = line.split_once(':') {
            match name.trim().to_ascii_lowercase().as_str() {
                "content-length" => content_length = value.trim().parse().unwrap_or(0),
                "authorization" => authorization = Some(value.trim().to_string()),
                _ => {}
            }
        }
    }
    let mut body = vec![0u8; content_length];
    reader.read_exact(&mut body)?;
    let body: Value = serde_json::from_slice(&body).unwrap_or(Value::Null);

    let index = calls.fetch_add(1, Ordering::SeqCst);
    let recorded = Recorded {
        path,
        authorization,
        body,
    };
    let reply = responder(recorded.prompt(), index);
    requests.lock().unwrap().push(recorded);

    let (status, extra, payload) = match reply {
        Reply::Text(text) => (
            200,
            "",
            json!({
                "id": format!("mock-{index}"),
                "object": "chat.completion",
                "choices": [{"index": 0, "message": {"role": "assistant", "content": text}, "finish_reason": "stop"}],
            })
            .to_string(),
        ),
        Reply::Status(code) => (
            code,
            if code == 429 { "Retry-After: 0\r\n" } else { "" },
            json!({"error": {"message": "simulated"}}).to_string(),
        ),
        Reply::Garbage => (200, "", "<html>not json</html>".to_string()),
    };
    let reason = match status {
        200 => "OK",
        429 => "Too Many Requests",
        500 => "Internal Server Error",
        503 => "Service Unavailable",
        _ => "Status",
    };
    let mut out = stream;
    write!(
        out,
        "HTTP/1.1 {status} {reason}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n{extra}\r\n{payload}",
        payload.len()
    )?;
    out.flush()
}

/// The text between `Document: ` and the blank line that follows it.
pub fn document_of(prompt: &str) -> &str {
    let start = prompt.find("Document: ").map(|i| i + "Document: ".len()).unwrap_or(0);
    let rest = &prompt[start..];
    let end = rest.find('\n').unwrap_or(rest.len());
    &rest[..end]
}

/// Deterministic stand-in for the LLM: summaries quote the first words of
/// the document and the score depends only on the document text.
pub fn deterministic_reply(prompt: &str) -> Reply {
    let doc = document_of(prompt);
    let words: Vec<&str> = doc.split_whitespace().take(12).collect();
    let digest = doc.bytes().fold(0u32, |h, b| h.wrapping_mul(31).wrapping_add(b as u32));
    let score = if digest % 4 == 0 { "0.6" } else { "0.95" };
    if prompt.contains("Gold Summary: {} Score: {}") {
        Reply::Text(format!("Gold Summary: This page reads {}. Score: {score}", words.join(" ")))
    } else if prompt.contains("Question: {} Answer: {}") {
        Reply::Text(format!(
            "Question: What does the page begin with? Answer: It begins with {}.",
            words.iter().take(4).copied().collect::<Vec<_>>().join(" ")
        ))
    } else {
        Reply::Text(score.to_string())
    }
}
