#![allow(dead_code)]

use std::io::{Read, Write};
use std::net::{SocketAddr, TcpStream};
use std::path::Path;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use beamradio_core::gateway::{AudioSinkConfig, GatewayConfig};
use beamradio_core::rf::{AccessPoint, Bssid, Point, RfEnvironment};
use beamradio_core::stream::{play_with, IcyStreamEvent, MemorySink, PlayOptions, ScheduledTitle};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const TARGET_SSID: &str = "HomeNet";

pub fn random_bytes(len: usize, seed: u64) -> Vec<u8> {
    let mut v = vec![0u8; len];
    ChaCha8Rng::seed_from_u64(seed).fill(&mut v[..]);
    v
}

/// MPEG-1 Layer III, 128 kbit/s, 44.1 kHz frames: sync header followed by
/// a payload with no 0xFF bytes, so frame starts are the only syncs.
pub fn fake_mp3(frames: usize, seed: u64) -> Vec<u8> {
    const FRAME_LEN: usize = 417;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(frames * FRAME_LEN);
    for _ in 0..frames {
        out.extend_from_slice(&[0xFF, 0xFB, 0x90, 0x64]);
        out.extend((4..FRAME_LEN).map(|_| rng.gen_range(0u8..0xFF)));
    }
    out
}

/// Title events the demuxer should report for an encoded stream, as
/// (audio bytes before the event, title). Built slot by slot from the
/// framing rules rather than by calling the encoder.
pub fn expected_titles(audio_len: usize, metaint: usize, schedule: &[ScheduledTitle]) -> Vec<(usize, String)> {
    let mut out: Vec<(usize, String)> = Vec::new();
    let mut last: Option<&str> = None;
    for k in 1..=audio_len / metaint {
        let in_slot = schedule.iter().rev().find(|t| {
            let o = t.offset as usize;
            let first_slot = o.div_ceil(metaint).max(1);
            first_slot == k
        });
        if let Some(t) = in_slot {
            if last != Some(t.title.as_str()) {
                out.push((k * metaint, t.title.clone()));
                last = Some(&t.title);
            }
        }
    }
    out
}

#[derive(Debug, Default)]
pub struct Recorded {
    pub audio: Vec<u8>,
    pub titles: Vec<(usize, String)>,
    pub errors: Vec<String>,
    pub ended: bool,
}

/// Plays `url` to completion into memory, noting the audio position of
/// every title change.
pub fn record_stream(url: &str, options: PlayOptions) -> Recorded {
    let sink = MemorySink::new();
    let (probe, audio) = (sink.clone(), sink.clone());
    let log = Arc::new(Mutex::new(Recorded::default()));
    let events = Arc::clone(&log);
    let session = play_with(
        url,
        sink,
        move |ev| {
            let mut r = events.lock().unwrap();
            match ev {
                IcyStreamEvent::TitleChange(t) => r.titles.push((probe.len(), t)),
                IcyStreamEvent::TransportError(e) => r.errors.push(e),
                IcyStreamEvent::EndOfStream => r.ended = true,
                IcyStreamEvent::AudioChunk(_) => {}
            }
        },
        options,
    )
    .expect("session starts");
    session.wait();
    let mut out = std::mem::take(&mut *log.lock().unwrap());
    out.audio = audio.contents();
    out
}

pub fn no_reconnect() -> PlayOptions {
    PlayOptions { reconnect: false, ..PlayOptions::default() }
}

/// A one-shot HTTP/1.0 request. Returns (status, body).
pub fn http(addr: SocketAddr, method: &str, path: &str) -> (u16, String) {
    let mut s = TcpStream::connect_timeout(&addr, Duration::from_secs(5)).expect("connect");
    s.set_read_timeout(Some(Duration::from_secs(10))).unwrap();
    write!(s, "{method} {path} HTTP/1.0\r\nHost: {addr}\r\nConnection: close\r\n\r\n").unwrap();
    let mut raw = Vec::new();
    s.read_to_end(&mut raw).expect("response");
    let text = String::from_utf8_lossy(&raw).into_owned();
    let (head, body) = text.split_once("\r\n\r\n").expect("header terminator");
    let status = head.split_whitespace().nth(1).and_then(|c| c.parse().ok()).expect("status code");
    (status, body.to_string())
}

pub fn wait_until(timeout: Duration, mut cond: impl FnMut() -> bool) -> bool {
    let end = Instant::now() + timeout;
    while Instant::now() < end {
        if cond() {
            return true;
        }
        std::thread::sleep(Duration::from_millis(10));
    }
    cond()
}

/// One AP named [`TARGET_SSID`] at `bearing_deg`, `dist` metres, no noise.
pub fn environment(bearing_deg: f64, dist: f64, tx_dbm: f64) -> RfEnvironment {
    let (s, c) = bearing_deg.to_radians().sin_cos();
    RfEnvironment {
        access_points: vec![AccessPoint {
            ssid: TARGET_SSID.into(),
            bssid: "02:00:00:00:00:01".parse::<Bssid>().unwrap(),
            position: Point::new(dist * c, dist * s),
            tx_power_dbm: tx_dbm,
        }],
        ..Default::default()
    }
}

pub fn gateway_config(dir: &Path, env: RfEnvironment) -> GatewayConfig {
    let mut cfg = GatewayConfig {
        target_ssid: TARGET_SSID.into(),
        listen_address: "127.0.0.1:0".into(),
        presets_file: dir.join("presets.tsv"),
        audio_sink: AudioSinkConfig::Null,
        display_tick_ms: 50,
        ..Default::default()
    };
    cfg.environment.rf = env;
    cfg
}
