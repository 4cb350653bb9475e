//! Internet radio stream client.
//!
//! Fetches a station over HTTP, splits ICY metadata out of the body and
//! hands the remaining audio bytes to an [`AudioSink`]. Audio is never
//! decoded here.

mod client;
mod icy;
mod mock;
mod mp3;
mod sink;

use thiserror::Error;

pub use client::{play, play_with, Backoff, PlayOptions, StopHandle, StreamSession, MAX_REDIRECTS};
pub use icy::{
    demux_icy, encode_icy_stream, metadata_block, parse_stream_title, IcyDemuxer, IcyHeaders,
    IcyStreamEvent, ScheduledTitle, MAX_METADATA_LEN, MAX_METAINT, METADATA_BLOCK_UNIT,
};
pub use mock::{serve_mock_bytes, serve_mock_on, serve_mock_stream, MockStreamConfig, MockStreamServer, StatusStyle};
pub use mp3::find_mp3_frame_syncs;
pub use sink::{AudioSink, FileSink, MemorySink, NullSink};

#[derive(Debug, Error)]
pub enum StreamError {
    #[error("icy protocol error: {0}")]
    Protocol(String),
    #[error("not an http(s) url: {0:?}")]
    BadUrl(String),
    #[error("mock server startup failed: {0}")]
    Startup(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
