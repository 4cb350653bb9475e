//! Local ICY server for tests and demos.
//!
//! Routes: `/redirect` answers 302 to `/stream`, `/loop` redirects to
//! itself, `/missing` is a 404, anything else is the stream. Metadata is
//! interleaved only when the request carries `Icy-MetaData: 1`.

use std::io::{BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::path::Path;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::icy::{encode_icy_stream, ScheduledTitle};
use super::StreamError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StatusStyle {
    /// `HTTP/1.0 200 OK`
    Http,
    /// `ICY 200 OK`
    Icy,
}

#[derive(Debug, Clone)]
pub struct MockStreamConfig {
    pub metaint: usize,
    pub titles: Vec<ScheduledTitle>,
    pub status_style: StatusStyle,
    pub station_name: Option<String>,
    /// Body writes are split into random sizes in `1..=max_write`.
    pub max_write: usize,
    pub chunk_seed: u64,
    /// Pause after every body write.
    pub write_delay: Option<Duration>,
}

impl MockStreamConfig {
    pub fn new(metaint: usize) -> Self {
        Self {
            metaint,
            titles: Vec::new(),
            status_style: StatusStyle::Icy,
            station_name: Some("beamradio mock".into()),
            max_write: 4096,
            chunk_seed: 0,
            write_delay: None,
        }
    }

    pub fn with_titles(mut self, titles: Vec<ScheduledTitle>) -> Self {
        self.titles = titles;
        self
    }
}

struct Shared {
    audio: Vec<u8>,
    encoded: Vec<u8>,
    config: MockStreamConfig,
    addr: SocketAddr,
    shutdown: AtomicBool,
    streams_served: AtomicUsize,
}

pub struct MockStreamServer {
    shared: Arc<Shared>,
    acceptor: Option<JoinHandle<()>>,
}

/// Serves the audio file at `path` on an ephemeral localhost port.
pub fn serve_mock_stream(path: impl AsRef<Path>, config: MockStreamConfig) -> Result<MockStreamServer, StreamError> {
    let audio = std::fs::read(path.as_ref())
        .map_err(|e| StreamError::Startup(format!("{}: {e}", path.as_ref().display())))?;
    serve_mock_bytes(audio, config)
}

pub fn serve_mock_bytes(audio: Vec<u8>, config: MockStreamConfig) -> Result<MockStreamServer, StreamError> {
    serve_mock_on("127.0.0.1:0", audio, config)
}

pub fn serve_mock_on(bind: &str, audio: Vec<u8>, config: MockStreamConfig) -> Result<MockStreamServer, StreamError> {
    if config.metaint == 0 {
        return Err(StreamError::Startup("metaint must be positive".into()));
    }
    let encoded = encode_icy_stream(&audio, config.metaint, &config.titles)
        .map_err(|e| StreamError::Startup(e.to_string()))?;
    let listener = TcpListener::bind(bind).map_err(|e| StreamError::Startup(format!("bind {bind}: {e}")))?;
    listener.set_nonblocking(true).map_err(StreamError::Io)?;
    let addr = listener.local_addr().map_err(StreamError::Io)?;
    let shared = Arc::new(Shared {
        audio,
        encoded,
        config,
        addr,
        shutdown: AtomicBool::new(false),
        streams_served: AtomicUsize::new(0),
    });
    let accept_shared = Arc::clone(&shared);
    let acceptor = thread::Builder::new()
        .name("mock-stream".into())
        .spawn(move || accept_loop(listener, accept_shared))
        .map_err(StreamError::Io)?;
    Ok(MockStreamServer { shared, acceptor: Some(acceptor) })
}

impl MockStreamServer {
    pub fn addr(&self) -> SocketAddr {
        self.shared.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}/stream", self.shared.addr)
    }

    pub fn redirect_url(&self) -> String {
        format!("http://{}/redirect", self.shared.addr)
    }

    pub fn loop_url(&self) -> String {
        format!("http://{}/loop", self.shared.addr)
    }

    pub fn missing_url(&self) -> String {
        format!("http://{}/missing", self.shared.addr)
    }

    /// Number of stream responses started so far.
    pub fn streams_served(&self) -> usize {
        self.shared.streams_served.load(Ordering::SeqCst)
    }

    /// The ICY body sent to metadata-capable clients.
    pub fn encoded(&self) -> &[u8] {
        &self.shared.encoded
    }

    pub fn shutdown(mut self) {
        self.stop();
    }

    fn stop(&mut self) {
        self.shared.shutdown.store(true, Ordering::SeqCst);
        if let Some(h) = self.acceptor.take() {
            let _ = h.join();
        }
    }
}

impl Drop for MockStreamServer {
    fn drop(&mut self) {
        self.stop();
    }
}

fn accept_loop(listener: TcpListener, shared: Arc<Shared>) {
    let mut connection = 0u64;
    while !shared.shutdown.load(Ordering::SeqCst) {
        match listener.accept() {
            Ok((stream, _)) => {
                connection += 1;
                let shared = Arc::clone(&shared);
                let seed = shared.config.chunk_seed.wrapping_add(connection);
                thread::spawn(move || {
                    if let Err(e) = handle(stream, &shared, seed) {
                        log::debug!("mock stream connection: {e}");
                    }
                });
            }
            Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => thread::sleep(Duration::from_millis(5)),
            Err(e) => {
                log::warn!("mock stream accept: {e}");
                thread::sleep(Duration::from_millis(20));
            }
        }
    }
}

fn handle(stream: TcpStream, shared: &Shared, seed: u64) -> std::io::Result<()> {
    stream.set_nonblocking(false)?;
    stream.set_nodelay(true)?;
    stream.set_read_timeout(Some(Duration::from_secs(5)))?;
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut request_line = String::new();
    reader.read_line(&mut request_line)?;
    let path = request_line.split_whitespace().nth(1).unwrap_or("/").to_string();
    let mut wants_metadata = false;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line)? == 0 || line.trim().is_empty() {
            break;
        }
        if let Some((name, value)) = line.split_once(':') {
            if name.trim().eq_ignore_ascii_case("icy-metadata") && value.trim() == "1" {
                wants_metadata = true;
            }
        }
    }

    let mut out = stream;
    let route = path.split('?').next().unwrap_or("/");
    match route {
        "/redirect" => {
            let location = format!("http://{}/stream", shared.addr);
            return write!(out, "HTTP/1.0 302 Found\r\nLocation: {location}\r\nContent-Length: 0\r\n\r\n");
        }
        "/loop" => return write!(out, "HTTP/1.0 302 Found\r\nLocation: /loop\r\nContent-Length: 0\r\n\r\n"),
        "/missing" => return write!(out, "HTTP/1.0 404 Not Found\r\nContent-Length: 0\r\n\r\n"),
        _ => {}
    }

    let cfg = &shared.config;
    let mut head = match cfg.status_style {
        StatusStyle::Http => "HTTP/1.0 200 OK\r\n".to_string(),
        StatusStyle::Icy => "ICY 200 OK\r\n".to_string(),
    };
    head.push_str("Content-Type: audio/mpeg\r\n");
    if let Some(name) = &cfg.station_name {
        head.push_str(&format!("icy-name: {name}\r\n"));
    }
    let body = if wants_metadata {
        head.push_str(&format!("icy-metaint: {}\r\n", cfg.metaint));
        &shared.encoded
    } else {
        &shared.audio
    };
    head.push_str("\r\n");
    out.write_all(head.as_bytes())?;
    shared.streams_served.fetch_add(1, Ordering::SeqCst);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pos = 0;
    while pos < body.len() {
        if shared.shutdown.load(Ordering::SeqCst) {
            break;
        }
        let n = rng.gen_range(1..=cfg.max_write.max(1)).min(body.len() - pos);
        out.write_all(&body[pos..pos + n])?;
        pos += n;
        if let Some(d) = cfg.write_delay {
            thread::sleep(d);
        }
    }
    out.flush()
}
