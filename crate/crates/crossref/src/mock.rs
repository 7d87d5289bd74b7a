//! A tiny scripted HTTP/1.1 server for exercising the client over real
//! sockets. It tracks how many requests are being served at once.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MockRequest {
    /// Path plus query, as sent.
    pub target: String,
    pub headers: Vec<(String, String)>,
}

impl MockRequest {
    pub fn path(&self) -> &str {
        self.target.split('?').next().unwrap_or("")
    }

    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MockReply {
    Status {
        status: u16,
        body: String,
        retry_after: Option<u64>,
    },
    /// Close the connection without answering.
    Drop,
}

impl MockReply {
    pub fn json(body: impl Into<String>) -> Self {
        MockReply::Status {
            status: 200,
            body: body.into(),
            retry_after: None,
        }
    }

    pub fn status(status: u16) -> Self {
        MockReply::Status {
            status,
            body: String::new(),
            retry_after: None,
        }
    }
}

/// Decides the reply given the request and how many times its path has
/// been requested before (0 for the first hit).
pub type Handler = dyn Fn(&MockRequest, u32) -> MockReply + Send + Sync;

struct Shared {
    handler: Box<Handler>,
    latency: Duration,
    in_flight: AtomicUsize,
    max_in_flight: AtomicUsize,
    hits: Mutex<HashMap<String, u32>>,
    log: Mutex<Vec<MockRequest>>,
    stop: AtomicBool,
}

pub struct MockServer {
    addr: SocketAddr,
    shared: Arc<Shared>,
    accept: Option<JoinHandle<()>>,
}

impl MockServer {
    /// Starts listening on an ephemeral localhost port. Every reply is held
    /// back for `latency` so that concurrent requests overlap.
    pub fn start<H>(latency: Duration, handler: H) -> std::io::Result<Self>
    where
        H: Fn(&MockRequest, u32) -> MockReply + Send + Sync + 'static,
    {
        let listener = TcpListener::bind("127.0.0.1:0")?;
        let addr = listener.local_addr()?;
        let shared = Arc::new(Shared {
            handler: Box::new(handler),
            latency,
            in_flight: AtomicUsize::new(0),
            max_in_flight: AtomicUsize::new(0),
            hits: Mutex::new(HashMap::new()),
            log: Mutex::new(Vec::new()),
            stop: AtomicBool::new(false),
        });
        let s = Arc::clone(&shared);
        let accept = std::thread::spawn(move || {
            for stream in listener.incoming() {
                if s.stop.load(Ordering::SeqCst) {
                    break;
                }
                let Ok(stream) = stream else { continue };
                let s = Arc::clone(&s);
                std::thread::spawn(move || {
                    let _ = serve(stream, &s);
                });
            }
        });
        Ok(MockServer {
            addr,
            shared,
            accept: Some(accept),
        })
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn max_in_flight(&self) -> usize {
        self.shared.max_in_flight.load(Ordering::SeqCst)
    }

    pub fn requests(&self) -> Vec<MockRequest> {
        self.shared.log.lock().unwrap().clone()
    }

    /// Number of requests seen for a path (query ignored).
    pub fn hits(&self, path: &str) -> u32 {
        self.shared
            .hits
            .lock()
            .unwrap()
            .get(path)
            .copied()
            .unwrap_or(0)
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.shared.stop.store(true, Ordering::SeqCst);
        let _ = TcpStream::connect(self.addr);
        if let Some(h) = self.accept.take() {
            let _ = h.join();
        }
    }
}

fn serve(stream: TcpStream, s: &Shared) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut line = String::new();
    if reader.read_line(&mut line)? == 0 {
        return Ok(());
    }
    let target = line.split_whitespace().nth(1).unwrap_or("").to_string();
    let mut headers = Vec::new();
    loop {
        let mut h = String::new();
        if reader.read_line(&mut h)? == 0 {
            return Ok(());
        }
        let h = h.trim_end();
        if h.is_empty() {
            break;
        }
        if let Some((k, v)) = h.split_once(':') {
            headers.push((k.trim().to_string(), v.trim().to_string()));
        }
    }
    let req = MockRequest { target, headers };

    let now = s.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
    s.max_in_flight.fetch_max(now, Ordering::SeqCst);
    let nth = {
        let mut hits = s.hits.lock().unwrap();
        let n = hits.entry(req.path().to_string()).or_insert(0);
        *n += 1;
        *n - 1
    };
    s.log.lock().unwrap().push(req.clone());
    let reply = (s.handler)(&req, nth);
    std::thread::sleep(s.latency);

    // Leave the in-flight count before the response is visible to the
    // client, whose next request may otherwise be counted first.
    s.in_flight.fetch_sub(1, Ordering::SeqCst);
    match reply {
        MockReply::Drop => {
            let _ = stream.shutdown(std::net::Shutdown::Both);
            Ok(())
        }
        MockReply::Status {
            status,
            body,
            retry_after,
        } => {
            let mut head = format!(
                "HTTP/1.1 {status} Mock\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n",
                body.len()
            );
            if let Some(r) = retry_after {
                head.push_str(&format!("Retry-After: {r}\r\n"));
            }
            head.push_str("\r\n");
            let mut w = &stream;
            w.write_all(head.as_bytes())
                .and_then(|_| w.write_all(body.as_bytes()))
                .and_then(|_| w.flush())
        }
    }
}
