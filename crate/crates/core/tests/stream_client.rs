mod common;

use std::net::TcpListener;
use std::time::{Duration, Instant};

use beamradio_core::stream::{
    demux_icy, encode_icy_stream, find_mp3_frame_syncs, play, serve_mock_bytes, serve_mock_stream, IcyDemuxer,
    IcyStreamEvent, MockStreamConfig, NullSink, PlayOptions, ScheduledTitle, StatusStyle,
};
use common::{expected_titles, fake_mp3, no_reconnect, random_bytes, record_stream};
use proptest::prelude::*;

#[test]
fn fixture_file_at_metaint_16000() {
    let dir = tempfile::tempdir().unwrap();
    let audio = fake_mp3(200, 1);
    let path = dir.path().join("fixture.mp3");
    std::fs::write(&path, &audio).unwrap();
    let cfg = MockStreamConfig::new(16000).with_titles(vec![ScheduledTitle::new(0, "Hey Jude")]);
    let server = serve_mock_stream(&path, cfg).unwrap();

    let rec = record_stream(&server.url(), no_reconnect());
    assert_eq!(rec.audio, audio);
    assert_eq!(rec.titles, vec![(16000, "Hey Jude".to_string())]);
    assert!(rec.ended && rec.errors.is_empty(), "{:?}", rec.errors);

    let via_redirect = record_stream(&server.redirect_url(), no_reconnect());
    assert_eq!(via_redirect.audio, audio);
    assert_eq!(via_redirect.titles, rec.titles);
    assert_eq!(server.streams_served(), 2);
}

#[test]
fn http_and_icy_status_lines_behave_alike() {
    let audio = random_bytes(50_000, 9);
    let titles = vec![ScheduledTitle::new(100, "A"), ScheduledTitle::new(30_000, "B")];
    let mut results = Vec::new();
    for style in [StatusStyle::Http, StatusStyle::Icy] {
        let mut cfg = MockStreamConfig::new(4096).with_titles(titles.clone());
        cfg.status_style = style;
        let server = serve_mock_bytes(audio.clone(), cfg).unwrap();
        let rec = record_stream(&server.url(), no_reconnect());
        assert_eq!(rec.audio, audio, "{style:?}");
        results.push(rec.titles);
    }
    assert_eq!(results[0], results[1]);
    assert_eq!(results[0], expected_titles(audio.len(), 4096, &titles));
}

#[test]
fn closed_port_reports_connect() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let rec = record_stream(&format!("http://127.0.0.1:{port}/stream"), PlayOptions::default());
    assert_eq!(rec.errors, vec!["connect".to_string()]);
    assert!(rec.audio.is_empty() && !rec.ended);
}

#[test]
fn redirect_loop_and_missing_path() {
    let server = serve_mock_bytes(random_bytes(10, 0), MockStreamConfig::new(16000)).unwrap();
    let rec = record_stream(&server.loop_url(), PlayOptions::default());
    assert_eq!(rec.errors, vec!["too many redirects".to_string()]);
    let rec = record_stream(&server.missing_url(), PlayOptions::default());
    assert_eq!(rec.errors, vec!["http status 404".to_string()]);
    assert_eq!(server.streams_served(), 0);
}

#[test]
fn https_and_bad_urls() {
    let rec = record_stream("https://example.invalid/stream", PlayOptions::default());
    assert_eq!(rec.errors, vec!["tls not supported".to_string()]);
    assert!(play("not a url", NullSink::new(), |_| {}).is_err());
    assert!(play("ftp://host/stream", NullSink::new(), |_| {}).is_err());
}

#[test]
fn stop_is_idempotent_and_prompt() {
    let mut cfg = MockStreamConfig::new(16000);
    cfg.write_delay = Some(Duration::from_millis(20));
    cfg.max_write = 512;
    let server = serve_mock_bytes(random_bytes(2_000_000, 4), cfg).unwrap();
    let sink = NullSink::new();
    let counter = sink.counter();
    let mut session = play(&server.url(), sink, |_| {}).unwrap();
    assert!(common::wait_until(Duration::from_secs(10), || counter.load(std::sync::atomic::Ordering::SeqCst) > 0));
    let t = Instant::now();
    session.stop();
    assert!(t.elapsed() < Duration::from_secs(2));
    assert!(session.is_finished());
    session.stop();
    session.stop_handle().stop();
    assert!(counter.load(std::sync::atomic::Ordering::SeqCst) < 2_000_000);
}

#[test]
fn mid_stream_drop_reconnects() {
    // the first connection dies inside a metadata block; the client retries
    // and the second connection delivers a complete stream
    use std::io::{BufRead, BufReader, Write};
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let audio = random_bytes(1000, 2);
    let full = encode_icy_stream(&audio, 100, &[ScheduledTitle::new(0, "Live")]).unwrap();
    let cut = full[..110].to_vec();
    let server = std::thread::spawn(move || {
        for (i, conn) in listener.incoming().take(2).enumerate() {
            let mut conn = conn.unwrap();
            let mut reader = BufReader::new(conn.try_clone().unwrap());
            let mut line = String::new();
            while reader.read_line(&mut line).unwrap() > 2 {
                line.clear();
            }
            conn.write_all(b"ICY 200 OK\r\nicy-metaint: 100\r\n\r\n").unwrap();
            conn.write_all(if i == 0 { &cut } else { &full }).unwrap();
        }
    });
    let options = PlayOptions {
        backoff: beamradio_core::stream::Backoff { initial: Duration::from_millis(10), max: Duration::from_millis(10) },
        ..PlayOptions::default()
    };
    let rec = record_stream(&format!("http://{addr}/"), options);
    assert_eq!(rec.errors, vec!["truncated metadata".to_string()]);
    assert!(rec.ended);
    let mut expected = audio[..100].to_vec();
    expected.extend_from_slice(&audio);
    assert_eq!(rec.audio, expected);
    // the title was never completed on the first connection
    assert_eq!(rec.titles, vec![(200, "Live".to_string())]);
    server.join().unwrap();
}

#[test]
fn sixty_four_kib_layout() {
    let audio = random_bytes(65536, 5);
    let encoded = encode_icy_stream(&audio, 16000, &[]).unwrap();
    // four full intervals, each followed by a zero length byte
    assert_eq!(encoded.len(), 65536 + 4);
    for k in 1..=4 {
        assert_eq!(encoded[k * 16000 + (k - 1)], 0);
    }
    assert_eq!(&encoded[64004..], &audio[64000..]);
}

/// Byte-by-byte sync search with no shortcuts.
fn naive_syncs(bytes: &[u8]) -> Vec<usize> {
    let mut out = Vec::new();
    for i in 0..bytes.len() {
        if i + 1 < bytes.len() && bytes[i] == 0xFF && bytes[i + 1] & 0xE0 == 0xE0 {
            out.push(i);
        }
    }
    out
}

#[test]
fn fake_mp3_frame_starts() {
    let audio = fake_mp3(20, 3);
    let expected: Vec<usize> = (0..20).map(|i| i * 417).collect();
    assert_eq!(find_mp3_frame_syncs(&audio), expected);
}

fn titles_strategy() -> impl Strategy<Value = Vec<ScheduledTitle>> {
    prop::collection::vec((0u64..200_000, "[A-Za-z0-9 ]{1,20}"), 0..6)
        .prop_map(|v| v.into_iter().map(|(o, t)| ScheduledTitle::new(o, t)).collect())
}

proptest! {
    #[test]
    fn frame_sync_matches_naive(bytes in prop::collection::vec(prop_oneof![Just(0xFFu8), any::<u8>()], 0..2000)) {
        prop_assert_eq!(find_mp3_frame_syncs(&bytes), naive_syncs(&bytes));
    }

    #[test]
    fn demux_inverts_encode_for_any_split(
        len in 0usize..40_000,
        metaint in prop::sample::select(vec![1usize, 7, 4096, 16000]),
        titles in titles_strategy(),
        cuts in prop::collection::vec(any::<prop::sample::Index>(), 0..30),
        seed in any::<u64>(),
    ) {
        let audio = random_bytes(len, seed);
        let encoded = encode_icy_stream(&audio, metaint, &titles).unwrap();
        let mut points: Vec<usize> = cuts.iter().map(|c| c.index(encoded.len() + 1)).collect();
        points.push(0);
        points.push(encoded.len());
        points.sort_unstable();

        let mut demux = IcyDemuxer::new(Some(metaint));
        let mut got = Vec::new();
        let mut titles_seen = Vec::new();
        for w in points.windows(2) {
            demux.push(&encoded[w[0]..w[1]], |ev| match ev {
                IcyStreamEvent::AudioChunk(b) => got.extend_from_slice(&b),
                IcyStreamEvent::TitleChange(t) => titles_seen.push((got.len(), t)),
                other => panic!("unexpected {other:?}"),
            });
        }
        prop_assert_eq!(demux.finish(), IcyStreamEvent::EndOfStream);
        prop_assert_eq!(&got, &audio);
        prop_assert_eq!(titles_seen, expected_titles(len, metaint, &titles));
        prop_assert_eq!(demux.consumed(), encoded.len() as u64);
        prop_assert_eq!(demux.audio_bytes(), len as u64);
    }

    #[test]
    fn empty_schedule_has_only_zero_length_slots(len in 0usize..20_000, metaint in 1usize..5000) {
        let audio = random_bytes(len, 7);
        let encoded = encode_icy_stream(&audio, metaint, &[]).unwrap();
        prop_assert_eq!(encoded.len(), len + len / metaint);
        let events = demux_icy(&encoded, Some(metaint));
        prop_assert!(events.iter().all(|e| matches!(e, IcyStreamEvent::AudioChunk(_) | IcyStreamEvent::EndOfStream)));
    }

    #[test]
    fn truncated_metadata_is_an_error(cut in 0usize..16) {
        let encoded = encode_icy_stream(&random_bytes(30, 1), 10, &[ScheduledTitle::new(0, "T")]).unwrap();
        // 10 audio bytes, length byte 1, then 16 bytes of metadata
        let events = demux_icy(&encoded[..11 + cut], Some(10));
        prop_assert_eq!(events.last(), Some(&IcyStreamEvent::TransportError("truncated metadata".into())));
    }
}
