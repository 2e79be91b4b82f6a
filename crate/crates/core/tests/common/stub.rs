//! A loopback stand-in for a GitHub-style issues API.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::{Arc, Mutex};
use std::thread;

#[derive(Default)]
pub struct State {
    pub issues: Vec<serde_json::Value>,
    pub authorization: Vec<Option<String>>,
    pub fail_posts: bool,
}

pub struct Stub {
    pub endpoint: String,
    pub state: Arc<Mutex<State>>,
}

pub fn start_stub(state: State) -> Stub {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let endpoint = format!("http://{}/repos/acme/model", listener.local_addr().unwrap());
    let state = Arc::new(Mutex::new(state));
    let shared = Arc::clone(&state);
    thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(stream) = stream else { break };
            handle(stream, &shared);
        }
    });
    Stub { endpoint, state }
}

fn handle(stream: TcpStream, state: &Mutex<State>) {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut request_line = String::new();
    reader.read_line(&mut request_line).unwrap();
    let mut length = 0usize;
    let mut authorization = None;
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
    let mut body = vec![0; length];
    reader.read_exact(&mut body).unwrap();

    let mut parts = request_line.split_whitespace();
    let method = parts.next().unwrap_or("");
    let target = parts.next().unwrap_or("");
    let mut state = state.lock().unwrap();
    state.authorization.push(authorization);
    let (status, payload) = if method == "GET" && target.contains("/issues?") {
        let page: usize = target
            .split("page=")
            .last()
            .and_then(|p| p.parse().ok())
            .unwrap_or(1);
        let slice: Vec<_> = state.issues.iter().skip((page - 1) * 100).take(100).cloned().collect();
        ("200 OK", serde_json::Value::Array(slice).to_string())
    } else if method == "POST" && target.ends_with("/issues") {
        if state.fail_posts {
            ("502 Bad Gateway", "{}".to_string())
        } else {
            let issue: serde_json::Value = serde_json::from_slice(&body).unwrap();
            state.issues.push(issue);
            ("201 Created", "{}".to_string())
        }
    } else {
        ("404 Not Found", "{}".to_string())
    };
    let mut stream = stream;
    let _ = write!(
        stream,
        "HTTP/1.1 {status}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
        payload.len()
    );
}
