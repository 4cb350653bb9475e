//! Blocking ICY stream client.
//!
//! A session runs on its own thread: it issues `GET` with
//! `Icy-MetaData: 1`, follows redirects, demuxes the body and writes audio
//! to the sink. Title changes and transport problems are reported through
//! the event callback, in order.

use std::io::{self, BufRead, BufReader, Read, Write};
use std::net::{Shutdown, TcpStream, ToSocketAddrs};
use std::sync::{Arc, Condvar, Mutex};
use std::thread::{self, JoinHandle};
use std::time::Duration;

use url::Url;

use super::icy::{IcyDemuxer, IcyHeaders, IcyStreamEvent};
use super::sink::AudioSink;
use super::StreamError;

pub const MAX_REDIRECTS: usize = 5;
const MAX_HEADER_LINE: usize = 8 * 1024;
const MAX_HEADERS: usize = 128;

/// Capped exponential reconnect delay.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Backoff {
    pub initial: Duration,
    pub max: Duration,
}

impl Default for Backoff {
    fn default() -> Self {
        Self { initial: Duration::from_secs(1), max: Duration::from_secs(30) }
    }
}

impl Backoff {
    pub fn delay(&self, attempt: u32) -> Duration {
        self.initial.saturating_mul(1u32 << attempt.min(20)).min(self.max)
    }
}

#[derive(Debug, Clone)]
pub struct PlayOptions {
    pub max_redirects: usize,
    pub connect_timeout: Duration,
    pub read_timeout: Duration,
    /// Reconnect after the stream drops mid-way. Failures before the first
    /// successful response always end the session.
    pub reconnect: bool,
    pub backoff: Backoff,
    pub user_agent: String,
    pub read_buffer: usize,
}

impl Default for PlayOptions {
    fn default() -> Self {
        Self {
            max_redirects: MAX_REDIRECTS,
            connect_timeout: Duration::from_secs(5),
            read_timeout: Duration::from_secs(15),
            reconnect: true,
            backoff: Backoff::default(),
            user_agent: concat!("beamradio/", env!("CARGO_PKG_VERSION")).to_string(),
            read_buffer: 8 * 1024,
        }
    }
}

#[derive(Debug, Default)]
struct Control {
    stopped: Mutex<bool>,
    wake: Condvar,
    socket: Mutex<Option<TcpStream>>,
}

impl Control {
    fn stop(&self) {
        *self.stopped.lock().unwrap() = true;
        self.wake.notify_all();
        if let Some(s) = self.socket.lock().unwrap().take() {
            let _ = s.shutdown(Shutdown::Both);
        }
    }

    fn is_stopped(&self) -> bool {
        *self.stopped.lock().unwrap()
    }

    /// Sleeps for `d` unless stopped first; returns whether it was stopped.
    fn wait(&self, d: Duration) -> bool {
        let guard = self.stopped.lock().unwrap();
        let (guard, _) = self.wake.wait_timeout_while(guard, d, |stopped| !*stopped).unwrap();
        *guard
    }

    fn attach(&self, s: &TcpStream) {
        let mut slot = self.socket.lock().unwrap();
        *slot = s.try_clone().ok();
        if self.is_stopped() {
            let _ = s.shutdown(Shutdown::Both);
        }
    }
}

/// Cloneable handle that stops a session from any thread without waiting.
#[derive(Debug, Clone)]
pub struct StopHandle(Arc<Control>);

impl StopHandle {
    pub fn stop(&self) {
        self.0.stop();
    }
}

/// A running stream. Dropping it stops the stream.
#[derive(Debug)]
pub struct StreamSession {
    url: String,
    control: Arc<Control>,
    handle: Option<JoinHandle<()>>,
}

impl StreamSession {
    pub fn url(&self) -> &str {
        &self.url
    }

    pub fn stop_handle(&self) -> StopHandle {
        StopHandle(Arc::clone(&self.control))
    }

    /// Stops the session and waits for its thread; no sink writes happen
    /// after this returns. Calling it again is a no-op.
    pub fn stop(&mut self) {
        self.control.stop();
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }

    pub fn is_finished(&self) -> bool {
        self.handle.as_ref().is_none_or(|h| h.is_finished())
    }

    /// Waits for the stream to end on its own.
    pub fn wait(mut self) {
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

impl Drop for StreamSession {
    fn drop(&mut self) {
        self.stop();
    }
}

/// Starts streaming `url` into `sink` with default options.
pub fn play<S, F>(url: &str, sink: S, on_event: F) -> Result<StreamSession, StreamError>
where
    S: AudioSink + 'static,
    F: FnMut(IcyStreamEvent) + Send + 'static,
{
    play_with(url, sink, on_event, PlayOptions::default())
}

pub fn play_with<S, F>(url: &str, sink: S, on_event: F, options: PlayOptions) -> Result<StreamSession, StreamError>
where
    S: AudioSink + 'static,
    F: FnMut(IcyStreamEvent) + Send + 'static,
{
    let parsed = Url::parse(url).map_err(|_| StreamError::BadUrl(url.to_string()))?;
    if !matches!(parsed.scheme(), "http" | "https") || parsed.host_str().is_none() {
        return Err(StreamError::BadUrl(url.to_string()));
    }
    let control = Arc::new(Control::default());
    let thread_control = Arc::clone(&control);
    let handle = thread::Builder::new()
        .name("stream-session".into())
        .spawn(move || run_session(parsed, options, sink, on_event, &thread_control))
        .map_err(StreamError::Io)?;
    Ok(StreamSession { url: url.to_string(), control, handle: Some(handle) })
}

enum Outcome {
    Ended,
    Stopped,
    Dropped(String),
    SinkFailed(String),
}

fn run_session<S, F>(url: Url, opts: PlayOptions, mut sink: S, mut on_event: F, control: &Control)
where
    S: AudioSink,
    F: FnMut(IcyStreamEvent),
{
    let mut established = false;
    let mut attempt = 0u32;
    let mut last_title = None;
    loop {
        if control.is_stopped() {
            break;
        }
        match open(&url, &opts, control) {
            Err(reason) => {
                if control.is_stopped() {
                    break;
                }
                log::warn!("stream {url}: {reason}");
                on_event(IcyStreamEvent::TransportError(reason));
                if !established || !opts.reconnect {
                    break;
                }
            }
            Ok(response) => {
                established = true;
                attempt = 0;
                match pump(response, &opts, &mut sink, &mut on_event, &mut last_title, control) {
                    Outcome::Ended => {
                        on_event(IcyStreamEvent::EndOfStream);
                        break;
                    }
                    Outcome::Stopped => break,
                    Outcome::SinkFailed(reason) => {
                        on_event(IcyStreamEvent::TransportError(reason));
                        break;
                    }
                    Outcome::Dropped(reason) => {
                        log::warn!("stream {url} dropped: {reason}");
                        on_event(IcyStreamEvent::TransportError(reason));
                        if !opts.reconnect {
                            break;
                        }
                    }
                }
            }
        }
        let delay = opts.backoff.delay(attempt);
        attempt += 1;
        log::info!("reconnecting to {url} in {delay:?}");
        if control.wait(delay) {
            break;
        }
    }
    if let Err(e) = sink.finish() {
        log::warn!("sink finish: {e}");
    }
}

fn pump<S, F>(
    response: Response,
    opts: &PlayOptions,
    sink: &mut S,
    on_event: &mut F,
    last_title: &mut Option<String>,
    control: &Control,
) -> Outcome
where
    S: AudioSink,
    F: FnMut(IcyStreamEvent),
{
    let Response { headers, mut body } = response;
    let mut demux = IcyDemuxer::new(headers.metaint).with_last_title(last_title.take());
    let mut buf = vec![0u8; opts.read_buffer.max(1)];
    let outcome = loop {
        if control.is_stopped() {
            break Outcome::Stopped;
        }
        let n = match body.read(&mut buf) {
            Ok(0) => {
                break match demux.finish() {
                    IcyStreamEvent::TransportError(r) => Outcome::Dropped(r),
                    _ => Outcome::Ended,
                }
            }
            Ok(n) => n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
            Err(_) if control.is_stopped() => break Outcome::Stopped,
            Err(e) if matches!(e.kind(), io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut) => {
                break Outcome::Dropped("read timeout".into())
            }
            Err(e) => break Outcome::Dropped(format!("read: {e}")),
        };
        if control.is_stopped() {
            break Outcome::Stopped;
        }
        let mut sink_err = None;
        demux.push(&buf[..n], |ev| match ev {
            IcyStreamEvent::AudioChunk(bytes) => {
                if sink_err.is_none() {
                    sink_err = sink.write_audio(&bytes).err();
                }
            }
            other => on_event(other),
        });
        if let Some(e) = sink_err {
            break Outcome::SinkFailed(format!("sink: {e}"));
        }
    };
    *last_title = demux.last_title().map(str::to_string);
    outcome
}

struct Response {
    headers: IcyHeaders,
    body: Box<dyn Read + Send>,
}

fn open(start: &Url, opts: &PlayOptions, control: &Control) -> Result<Response, String> {
    let mut url = start.clone();
    let mut redirects = 0;
    loop {
        if url.scheme() == "https" {
            return Err("tls not supported".into());
        }
        if url.scheme() != "http" {
            return Err(format!("unsupported scheme {}", url.scheme()));
        }
        let host = url.host_str().ok_or("missing host")?.to_string();
        let port = url.port_or_known_default().unwrap_or(80);
        let addrs: Vec<_> = (host.as_str(), port).to_socket_addrs().map_err(|_| "dns".to_string())?.collect();
        let stream = addrs
            .iter()
            .find_map(|a| TcpStream::connect_timeout(a, opts.connect_timeout).ok())
            .ok_or("connect")?;
        control.attach(&stream);
        stream.set_read_timeout(Some(opts.read_timeout)).map_err(|e| format!("socket: {e}"))?;
        let _ = stream.set_nodelay(true);

        let mut target = url.path().to_string();
        if let Some(q) = url.query() {
            target.push('?');
            target.push_str(q);
        }
        let host_header = match url.port() {
            Some(p) => format!("{host}:{p}"),
            None => host.clone(),
        };
        let request = format!(
            "GET {target} HTTP/1.0\r\nHost: {host_header}\r\nUser-Agent: {}\r\nAccept: */*\r\nIcy-MetaData: 1\r\nConnection: close\r\n\r\n",
            opts.user_agent
        );
        (&stream).write_all(request.as_bytes()).map_err(|e| format!("write: {e}"))?;

        let mut reader = BufReader::new(stream);
        let status_line = read_line(&mut reader)?;
        let status = parse_status_line(&status_line)?;
        let mut header_lines = Vec::new();
        loop {
            let line = read_line(&mut reader)?;
            if line.is_empty() {
                break;
            }
            if header_lines.len() == MAX_HEADERS {
                return Err("too many headers".into());
            }
            header_lines.push(line);
        }
        let header = |name: &str| {
            header_lines.iter().find_map(|l| {
                let (n, v) = l.split_once(':')?;
                n.trim().eq_ignore_ascii_case(name).then(|| v.trim().to_string())
            })
        };

        if matches!(status, 301 | 302 | 303 | 307 | 308) {
            let location = header("location").ok_or("redirect without location")?;
            if redirects == opts.max_redirects {
                return Err("too many redirects".into());
            }
            redirects += 1;
            url = url.join(&location).map_err(|_| format!("bad redirect location {location:?}"))?;
            log::debug!("redirect {redirects} to {url}");
            continue;
        }
        if !(200..300).contains(&status) {
            return Err(format!("http status {status}"));
        }
        let headers = IcyHeaders::parse(&header_lines).map_err(|e| e.to_string())?;
        let chunked = header("transfer-encoding").is_some_and(|v| v.eq_ignore_ascii_case("chunked"));
        let length = header("content-length").and_then(|v| v.parse::<u64>().ok());
        let body: Box<dyn Read + Send> = match (chunked, length) {
            (true, _) => Box::new(ChunkedReader::new(reader)),
            (false, Some(n)) => Box::new(reader.take(n)),
            (false, None) => Box::new(reader),
        };
        return Ok(Response { headers, body });
    }
}

fn read_line<R: BufRead>(r: &mut R) -> Result<String, String> {
    let mut line = Vec::new();
    let n = r
        .take(MAX_HEADER_LINE as u64 + 1)
        .read_until(b'\n', &mut line)
        .map_err(|e| format!("read: {e}"))?;
    if n == 0 {
        return Err("connection closed before response".into());
    }
    if line.len() > MAX_HEADER_LINE {
        return Err("header line too long".into());
    }
    while matches!(line.last(), Some(b'\n' | b'\r')) {
        line.pop();
    }
    Ok(String::from_utf8_lossy(&line).into_owned())
}

/// Status code from `HTTP/1.x NNN ...` or the legacy `ICY NNN ...`.
pub(crate) fn parse_status_line(line: &str) -> Result<u16, String> {
    let mut parts = line.split_whitespace();
    let proto = parts.next().unwrap_or_default();
    if !(proto == "ICY" || proto.starts_with("HTTP/1.")) {
        return Err(format!("bad status line {line:?}"));
    }
    parts
        .next()
        .and_then(|c| c.parse().ok())
        .ok_or_else(|| format!("bad status line {line:?}"))
}

/// `Transfer-Encoding: chunked` body decoder.
struct ChunkedReader<R> {
    inner: R,
    remaining: u64,
    done: bool,
}

impl<R: BufRead> ChunkedReader<R> {
    fn new(inner: R) -> Self {
        Self { inner, remaining: 0, done: false }
    }

    fn line(&mut self) -> io::Result<String> {
        read_line(&mut self.inner).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
    }
}

impl<R: BufRead> Read for ChunkedReader<R> {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        if self.done || buf.is_empty() {
            return Ok(0);
        }
        if self.remaining == 0 {
            let size_line = self.line()?;
            let size = size_line.split(';').next().unwrap_or_default().trim();
            self.remaining = u64::from_str_radix(size, 16)
                .map_err(|_| io::Error::new(io::ErrorKind::InvalidData, "bad chunk size"))?;
            if self.remaining == 0 {
                while !self.line()?.is_empty() {}
                self.done = true;
                return Ok(0);
            }
        }
        let max = buf.len().min(self.remaining as usize);
        let n = self.inner.read(&mut buf[..max])?;
        if n == 0 {
            return Err(io::ErrorKind::UnexpectedEof.into());
        }
        self.remaining -= n as u64;
        if self.remaining == 0 && !self.line()?.is_empty() {
            return Err(io::Error::new(io::ErrorKind::InvalidData, "missing chunk terminator"));
        }
        Ok(n)
    }
}
