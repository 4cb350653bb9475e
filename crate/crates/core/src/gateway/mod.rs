//! The running radio: antenna selection at boot, then the preset control
//! plane over HTTP, one stream session and the display ticker.
//!
//! Status, presets and display live behind one mutex with short critical
//! sections. The stream session never touches that state directly; its
//! events arrive over a channel and are applied by a pump thread, tagged
//! with a generation number so events from a replaced session are ignored.
//! Starting and stopping sessions is serialized by a second mutex so the
//! status endpoint never waits on the network.

mod config;
mod status;

use std::io;
use std::net::SocketAddr;
use std::path::{Component, Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, Sender};
use std::sync::{Arc, Condvar, Mutex};
use std::thread::{self, JoinHandle};
use std::time::Duration;

use thiserror::Error;

pub use config::{AudioSinkConfig, ConfigError, EnvironmentConfig, GatewayConfig, DEFAULT_DISPLAY_TICK_MS, DEFAULT_PRESETS_FILE};
pub use status::{antenna_indicator, GatewayPhase, GatewayStatus, IndicatorError};

use crate::display::DisplayModel;
use crate::preset::{parse_command, ActionEffect, PresetStore, ProtocolError};
use crate::rf::SimulatedFrontEnd;
use crate::selector::{run_selection, SelectorError};
use crate::stream::{play, AudioSink, FileSink, IcyStreamEvent, NullSink, StreamSession};

const HTTP_WORKERS: usize = 4;

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("presets file {path}: {reason}")]
    Presets { path: PathBuf, reason: String },
    #[error("cannot listen on {addr}: {reason}")]
    Bind { addr: String, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// A response produced by [`Gateway::handle_request`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpReply {
    pub status: u16,
    pub content_type: &'static str,
    pub body: Vec<u8>,
}

impl HttpReply {
    fn text(status: u16, body: impl Into<String>) -> Self {
        Self { status, content_type: "text/plain; charset=utf-8", body: body.into().into_bytes() }
    }

    fn json(status: &GatewayStatus) -> Self {
        let body = serde_json::to_vec(status).expect("status serializes");
        Self { status: 200, content_type: "application/json", body }
    }

    pub fn body_text(&self) -> String {
        String::from_utf8_lossy(&self.body).into_owned()
    }
}

fn error_status(e: &ProtocolError) -> u16 {
    match e {
        ProtocolError::EmptySlot(_) | ProtocolError::NoStations => 404,
        _ => 400,
    }
}

enum GatewayEvent {
    Stream(u64, IcyStreamEvent),
    Finished(u64),
    Shutdown,
}

/// Reports the end of a session when the session thread drops its callback.
struct FinishGuard {
    tx: Sender<GatewayEvent>,
    generation: u64,
}

impl Drop for FinishGuard {
    fn drop(&mut self) {
        let _ = self.tx.send(GatewayEvent::Finished(self.generation));
    }
}

struct State {
    phase: GatewayPhase,
    ant_rssi: Vec<Option<i32>>,
    best_antenna: Option<usize>,
    store: PresetStore,
    station_url: Option<String>,
    stream_title: Option<String>,
    ip_address: String,
    display: DisplayModel,
    generation: u64,
}

struct Shared {
    config: GatewayConfig,
    state: Mutex<State>,
    playback: Mutex<Option<StreamSession>>,
    front_end: Mutex<SimulatedFrontEnd>,
    events: Sender<GatewayEvent>,
    shutdown: AtomicBool,
    ticker_wake: (Mutex<()>, Condvar),
}

pub struct Gateway {
    shared: Arc<Shared>,
    server: Arc<tiny_http::Server>,
    addr: SocketAddr,
    threads: Vec<JoinHandle<()>>,
}

fn load_presets(path: &Path) -> Result<PresetStore, GatewayError> {
    match std::fs::read(path) {
        Ok(bytes) => PresetStore::load(&bytes)
            .map_err(|e| GatewayError::Presets { path: path.to_path_buf(), reason: e.to_string() }),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(PresetStore::new()),
        Err(e) => Err(GatewayError::Presets { path: path.to_path_buf(), reason: e.to_string() }),
    }
}

fn save_presets(path: &Path, store: &PresetStore) -> io::Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension("tsv.tmp");
    std::fs::write(&tmp, store.save())?;
    std::fs::rename(&tmp, path)
}

impl Gateway {
    /// Starts the HTTP server, selects the antenna, loads presets and
    /// starts playback of the current slot.
    ///
    /// A failed selection leaves the gateway in the `Error` phase with the
    /// control plane still up.
    pub fn boot(config: GatewayConfig) -> Result<Self, GatewayError> {
        config.validate()?;
        let front_end = config.front_end()?;
        let store = load_presets(&config.presets_file)?;
        let server = tiny_http::Server::http(&config.listen_address)
            .map_err(|e| GatewayError::Bind { addr: config.listen_address.clone(), reason: e.to_string() })?;
        let addr = server
            .server_addr()
            .to_ip()
            .ok_or_else(|| GatewayError::Bind { addr: config.listen_address.clone(), reason: "not an IP socket".into() })?;

        let (tx, rx) = mpsc::channel();
        let state = State {
            phase: GatewayPhase::Selecting,
            ant_rssi: vec![None; config.num_antennas],
            best_antenna: None,
            store,
            station_url: None,
            stream_title: None,
            ip_address: addr.ip().to_string(),
            display: DisplayModel::new(config.display_width),
            generation: 0,
        };
        let shared = Arc::new(Shared {
            config,
            state: Mutex::new(state),
            playback: Mutex::new(None),
            front_end: Mutex::new(front_end),
            events: tx,
            shutdown: AtomicBool::new(false),
            ticker_wake: (Mutex::new(()), Condvar::new()),
        });
        shared.refresh_display(&mut shared.state.lock().unwrap());

        let server = Arc::new(server);
        let mut threads = Vec::new();
        let pump_shared = Arc::clone(&shared);
        threads.push(thread::Builder::new().name("gateway-events".into()).spawn(move || pump_shared.pump(rx))?);
        let tick_shared = Arc::clone(&shared);
        threads.push(thread::Builder::new().name("display-ticker".into()).spawn(move || tick_shared.tick_loop())?);
        for i in 0..HTTP_WORKERS {
            let (s, srv) = (Arc::clone(&shared), Arc::clone(&server));
            threads.push(thread::Builder::new().name(format!("http-{i}")).spawn(move || s.serve(&srv))?);
        }

        shared.select_antenna();
        shared.restart_playback();
        log::info!("gateway listening on http://{addr}");
        Ok(Self { shared, server, addr, threads })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn status(&self) -> GatewayStatus {
        self.shared.status()
    }

    pub fn handle_request(&self, method: &str, path: &str) -> HttpReply {
        self.shared.handle_request(method, path)
    }

    /// Pauses the stream, reruns antenna selection and resumes playback.
    pub fn rescan(&self) -> GatewayStatus {
        self.shared.rescan()
    }

    /// Blocks until the gateway is shut down from another thread.
    pub fn wait(mut self) {
        for t in self.threads.drain(..) {
            let _ = t.join();
        }
    }

    pub fn shutdown(mut self) {
        self.stop();
    }

    fn stop(&mut self) {
        if self.shared.shutdown.swap(true, Ordering::SeqCst) {
            return;
        }
        self.shared.stop_playback();
        let _ = self.shared.events.send(GatewayEvent::Shutdown);
        self.shared.ticker_wake.1.notify_all();
        self.server.unblock();
        for t in self.threads.drain(..) {
            let _ = t.join();
        }
    }
}

impl Drop for Gateway {
    fn drop(&mut self) {
        self.stop();
    }
}

impl Shared {
    fn status(&self) -> GatewayStatus {
        let st = self.state.lock().unwrap();
        GatewayStatus {
            phase: st.phase,
            ant_rssi: st.ant_rssi.clone(),
            best_antenna: st.best_antenna,
            antenna_color: st.best_antenna.and_then(|b| antenna_indicator(b).ok()).map(str::to_string),
            current_slot: (!st.store.is_empty()).then(|| st.store.current().index()),
            station_url: st.station_url.clone(),
            stream_title: st.stream_title.clone(),
            ip_address: st.ip_address.clone(),
            display: st.display.render(),
        }
    }

    fn refresh_display(&self, st: &mut State) {
        let first = match st.phase {
            GatewayPhase::Selecting => "Selecting antenna".to_string(),
            GatewayPhase::Error => format!("No signal: {}", self.config.target_ssid),
            GatewayPhase::Idle | GatewayPhase::Playing => {
                let best = st.best_antenna.unwrap_or_default();
                let rssi = st.ant_rssi.get(best).copied().flatten().unwrap_or_default();
                let mut line = format!("ANT#{} {rssi}dBm", best + 1);
                if let (GatewayPhase::Playing, Some(title)) = (st.phase, &st.stream_title) {
                    line.push(' ');
                    line.push_str(title);
                }
                line
            }
        };
        let second = st.station_url.clone().unwrap_or_else(|| "no station".into());
        let third = st.ip_address.clone();
        st.display.set_line(0, &first);
        st.display.set_line(1, &second);
        st.display.set_line(2, &third);
    }

    fn select_antenna(&self) {
        {
            let mut st = self.state.lock().unwrap();
            st.phase = GatewayPhase::Selecting;
            self.refresh_display(&mut st);
        }
        let result = {
            let mut front_end = self.front_end.lock().unwrap();
            run_selection(&mut *front_end, &self.config.selector_config())
        };
        let mut st = self.state.lock().unwrap();
        match result {
            Ok(sel) => {
                log::info!("selected antenna {} ({:?})", sel.best_antenna + 1, sel.ant_rssi);
                st.ant_rssi = sel.ant_rssi;
                st.best_antenna = Some(sel.best_antenna);
                st.phase = GatewayPhase::Idle;
            }
            Err(e) => {
                log::error!("antenna selection failed: {e}");
                st.ant_rssi = match e {
                    SelectorError::SelectionFailed { ant_rssi, .. } => ant_rssi,
                    _ => vec![None; self.config.num_antennas],
                };
                st.best_antenna = None;
                st.phase = GatewayPhase::Error;
            }
        }
        self.refresh_display(&mut st);
    }

    fn make_sink(&self) -> io::Result<Box<dyn AudioSink>> {
        Ok(match &self.config.audio_sink {
            AudioSinkConfig::Null => Box::new(NullSink::new()),
            AudioSinkConfig::File { path } => Box::new(FileSink::create(path)?),
        })
    }

    /// Stops any session and starts one on the current slot, if there is a
    /// selected antenna and a station to play.
    fn restart_playback(&self) {
        let mut playback = self.playback.lock().unwrap();
        if let Some(mut old) = playback.take() {
            old.stop();
        }
        let (url, generation) = {
            let mut st = self.state.lock().unwrap();
            st.generation += 1;
            st.stream_title = None;
            st.station_url = st.store.current_url().map(str::to_string);
            let ready = st.best_antenna.is_some() && matches!(st.phase, GatewayPhase::Idle | GatewayPhase::Playing);
            let url = match (&st.station_url, ready) {
                (Some(url), true) => url.clone(),
                _ => {
                    if st.phase == GatewayPhase::Playing {
                        st.phase = GatewayPhase::Idle;
                    }
                    self.refresh_display(&mut st);
                    return;
                }
            };
            st.phase = GatewayPhase::Playing;
            self.refresh_display(&mut st);
            (url, st.generation)
        };

        let tx = self.events.clone();
        let guard = FinishGuard { tx: tx.clone(), generation };
        let started = self.make_sink().map_err(|e| e.to_string()).and_then(|sink| {
            play(&url, sink, move |ev| {
                let _ = &guard;
                let _ = tx.send(GatewayEvent::Stream(generation, ev));
            })
            .map_err(|e| e.to_string())
        });
        match started {
            Ok(session) => {
                log::info!("playing {url}");
                *playback = Some(session);
            }
            Err(e) => {
                log::error!("cannot start {url}: {e}");
                let mut st = self.state.lock().unwrap();
                if st.generation == generation {
                    st.phase = GatewayPhase::Idle;
                    self.refresh_display(&mut st);
                }
            }
        }
    }

    fn stop_playback(&self) {
        let mut playback = self.playback.lock().unwrap();
        if let Some(mut old) = playback.take() {
            old.stop();
        }
        let mut st = self.state.lock().unwrap();
        st.generation += 1;
        st.stream_title = None;
        st.station_url = st.store.current_url().map(str::to_string);
        if st.phase == GatewayPhase::Playing {
            st.phase = GatewayPhase::Idle;
        }
        self.refresh_display(&mut st);
    }

    fn rescan(&self) -> GatewayStatus {
        self.stop_playback();
        self.select_antenna();
        self.restart_playback();
        self.status()
    }

    fn pump(&self, rx: Receiver<GatewayEvent>) {
        for event in rx {
            let mut st = self.state.lock().unwrap();
            match event {
                GatewayEvent::Shutdown => break,
                GatewayEvent::Stream(g, _) | GatewayEvent::Finished(g) if g != st.generation => {}
                GatewayEvent::Stream(_, IcyStreamEvent::TitleChange(title)) => {
                    log::info!("now playing: {title}");
                    st.stream_title = Some(title);
                }
                GatewayEvent::Stream(_, IcyStreamEvent::TransportError(reason)) => {
                    log::warn!("stream error: {reason}");
                }
                GatewayEvent::Stream(_, IcyStreamEvent::EndOfStream) | GatewayEvent::Finished(_) => {
                    if st.phase == GatewayPhase::Playing {
                        st.phase = GatewayPhase::Idle;
                    }
                }
                GatewayEvent::Stream(_, IcyStreamEvent::AudioChunk(_)) => {}
            }
            self.refresh_display(&mut st);
        }
    }

    fn tick_loop(&self) {
        let period = Duration::from_millis(self.config.display_tick_ms);
        let (lock, cv) = &self.ticker_wake;
        let mut guard = lock.lock().unwrap();
        while !self.shutdown.load(Ordering::SeqCst) {
            guard = cv.wait_timeout(guard, period).unwrap().0;
            if self.shutdown.load(Ordering::SeqCst) {
                break;
            }
            self.state.lock().unwrap().display.tick();
        }
    }

    fn serve(&self, server: &tiny_http::Server) {
        while !self.shutdown.load(Ordering::SeqCst) {
            let request = match server.recv_timeout(Duration::from_millis(100)) {
                Ok(Some(r)) => r,
                Ok(None) => continue,
                Err(e) => {
                    log::warn!("http accept: {e}");
                    continue;
                }
            };
            let reply = self.handle_request(request.method().as_str(), request.url());
            log::debug!("{} {} -> {}", request.method(), request.url(), reply.status);
            let header = tiny_http::Header::from_bytes(&b"Content-Type"[..], reply.content_type.as_bytes())
                .expect("static header");
            let response = tiny_http::Response::from_data(reply.body).with_status_code(reply.status).with_header(header);
            if let Err(e) = request.respond(response) {
                log::debug!("http respond: {e}");
            }
        }
    }

    fn handle_request(&self, method: &str, path: &str) -> HttpReply {
        let route = path.split('?').next().unwrap_or(path);
        match route {
            "/api/status" => {
                return match method {
                    "GET" | "HEAD" => HttpReply::json(&self.status()),
                    _ => HttpReply::text(405, "method not allowed\n"),
                }
            }
            "/api/rescan" => {
                return match method {
                    "POST" => HttpReply::json(&self.rescan()),
                    _ => HttpReply::text(405, "method not allowed\n"),
                }
            }
            r if r == "/api" || r.starts_with("/api/") => return HttpReply::text(404, "not found\n"),
            r if r == "/ui" || r.starts_with("/ui/") => return self.serve_ui(r),
            _ => {}
        }
        if !matches!(method, "GET" | "HEAD") {
            return HttpReply::text(405, "method not allowed\n");
        }
        let cmd = match parse_command(path) {
            Ok(cmd) => cmd,
            Err(e) => return HttpReply::text(error_status(&e), format!("error: {e}\n")),
        };
        let response = {
            let mut st = self.state.lock().unwrap();
            let before = st.store.clone();
            let response = match st.store.apply(&cmd) {
                Ok(r) => r,
                Err(e) => return HttpReply::text(error_status(&e), format!("error: {e}\n")),
            };
            // selection changes `current`, which is part of the saved file too
            if st.store != before {
                if let Err(e) = save_presets(&self.config.presets_file, &st.store) {
                    log::error!("saving presets to {}: {e}", self.config.presets_file.display());
                }
            }
            st.station_url = st.store.current_url().map(str::to_string);
            self.refresh_display(&mut st);
            response
        };
        match response.effect {
            ActionEffect::StationChanged(_) => self.restart_playback(),
            ActionEffect::Stopped => self.stop_playback(),
            ActionEffect::None => {}
        }
        HttpReply::text(200, response.body)
    }

    fn serve_ui(&self, route: &str) -> HttpReply {
        let Some(dir) = &self.config.ui_dir else {
            return HttpReply::text(404, "not found\n");
        };
        let rel = route.trim_start_matches("/ui").trim_start_matches('/');
        let rel = if rel.is_empty() { "index.html" } else { rel };
        let rel = Path::new(rel);
        if rel.components().any(|c| !matches!(c, Component::Normal(_))) {
            return HttpReply::text(404, "not found\n");
        }
        let content_type = match rel.extension().and_then(|e| e.to_str()) {
            Some("html") => "text/html; charset=utf-8",
            Some("js") => "text/javascript",
            Some("css") => "text/css",
            Some("json") => "application/json",
            Some("svg") => "image/svg+xml",
            _ => "application/octet-stream",
        };
        match std::fs::read(dir.join(rel)) {
            Ok(body) => HttpReply { status: 200, content_type, body },
            Err(_) => HttpReply::text(404, "not found\n"),
        }
    }
}
