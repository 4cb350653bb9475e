//! ICY (SHOUTcast) in-band metadata.
//!
//! With `icy-metaint: N` the body repeats `[N audio bytes][L][16·L bytes]`
//! where the metadata text looks like `StreamTitle='...';` padded with
//! zeros. `L = 0` means no metadata in that slot.

use super::StreamError;

/// Largest metadata interval accepted from a server.
pub const MAX_METAINT: usize = 1 << 24;
pub const METADATA_BLOCK_UNIT: usize = 16;
pub const MAX_METADATA_LEN: usize = 255 * METADATA_BLOCK_UNIT;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct IcyHeaders {
    pub metaint: Option<usize>,
    pub station_name: Option<String>,
    pub content_type: Option<String>,
}

impl IcyHeaders {
    /// Reads `icy-metaint`, `icy-name` and `content-type` from `name: value`
    /// lines; names are case-insensitive and other headers are ignored.
    pub fn parse<S: AsRef<str>>(header_lines: &[S]) -> Result<Self, StreamError> {
        let mut out = IcyHeaders::default();
        for line in header_lines {
            let Some((name, value)) = line.as_ref().split_once(':') else {
                continue;
            };
            let value = value.trim();
            match name.trim().to_ascii_lowercase().as_str() {
                "icy-metaint" => {
                    let n: usize = value
                        .parse()
                        .map_err(|_| StreamError::Protocol(format!("icy-metaint {value:?} is not a number")))?;
                    if n == 0 || n > MAX_METAINT {
                        return Err(StreamError::Protocol(format!("icy-metaint {n} out of range")));
                    }
                    out.metaint = Some(n);
                }
                "icy-name" => out.station_name = Some(value.to_string()),
                "content-type" => out.content_type = Some(value.to_string()),
                _ => {}
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IcyStreamEvent {
    AudioChunk(Vec<u8>),
    TitleChange(String),
    EndOfStream,
    TransportError(String),
}

/// Value of `StreamTitle='...'` in a zero-padded metadata block.
pub fn parse_stream_title(block: &[u8]) -> Option<String> {
    let end = block.iter().rposition(|&b| b != 0).map_or(0, |i| i + 1);
    if end == 0 {
        return None;
    }
    let text = String::from_utf8_lossy(&block[..end]);
    let Some(start) = text.find("StreamTitle='") else {
        log::debug!("metadata without StreamTitle: {text:?}");
        return None;
    };
    let rest = &text[start + "StreamTitle='".len()..];
    // titles may contain apostrophes, so prefer the `';` terminator
    match rest.find("';").or_else(|| rest.rfind('\'')) {
        Some(stop) => Some(rest[..stop].to_string()),
        None => {
            log::debug!("unterminated StreamTitle: {text:?}");
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum DemuxState {
    Audio { remaining: usize },
    Length,
    Metadata { remaining: usize },
}

/// Incremental ICY demuxer; input may be split at any byte.
#[derive(Debug, Clone)]
pub struct IcyDemuxer {
    metaint: Option<usize>,
    state: DemuxState,
    metadata: Vec<u8>,
    last_title: Option<String>,
    audio_bytes: u64,
    consumed: u64,
}

impl IcyDemuxer {
    /// `None` treats the whole body as audio.
    pub fn new(metaint: Option<usize>) -> Self {
        let metaint = metaint.filter(|&n| n > 0);
        Self {
            metaint,
            state: DemuxState::Audio { remaining: metaint.unwrap_or(usize::MAX) },
            metadata: Vec::new(),
            last_title: None,
            audio_bytes: 0,
            consumed: 0,
        }
    }

    /// Keeps title deduplication across a reconnect.
    pub fn with_last_title(mut self, title: Option<String>) -> Self {
        self.last_title = title;
        self
    }

    pub fn last_title(&self) -> Option<&str> {
        self.last_title.as_deref()
    }

    pub fn audio_bytes(&self) -> u64 {
        self.audio_bytes
    }

    pub fn consumed(&self) -> u64 {
        self.consumed
    }

    pub fn push<F: FnMut(IcyStreamEvent)>(&mut self, mut data: &[u8], mut emit: F) {
        self.consumed += data.len() as u64;
        while !data.is_empty() {
            match self.state {
                DemuxState::Audio { remaining } => {
                    let n = remaining.min(data.len());
                    emit(IcyStreamEvent::AudioChunk(data[..n].to_vec()));
                    self.audio_bytes += n as u64;
                    data = &data[n..];
                    self.state = match (remaining - n, self.metaint) {
                        (0, Some(_)) => DemuxState::Length,
                        (left, Some(_)) => DemuxState::Audio { remaining: left },
                        (_, None) => DemuxState::Audio { remaining: usize::MAX },
                    };
                }
                DemuxState::Length => {
                    let len = data[0] as usize * METADATA_BLOCK_UNIT;
                    data = &data[1..];
                    self.state = if len == 0 {
                        self.audio_state()
                    } else {
                        self.metadata.clear();
                        DemuxState::Metadata { remaining: len }
                    };
                }
                DemuxState::Metadata { remaining } => {
                    let n = remaining.min(data.len());
                    self.metadata.extend_from_slice(&data[..n]);
                    data = &data[n..];
                    if remaining == n {
                        self.finish_metadata(&mut emit);
                        self.state = self.audio_state();
                    } else {
                        self.state = DemuxState::Metadata { remaining: remaining - n };
                    }
                }
            }
        }
    }

    /// Final event once the input is exhausted.
    pub fn finish(&self) -> IcyStreamEvent {
        match self.state {
            DemuxState::Metadata { .. } => IcyStreamEvent::TransportError("truncated metadata".into()),
            _ => IcyStreamEvent::EndOfStream,
        }
    }

    fn audio_state(&self) -> DemuxState {
        DemuxState::Audio { remaining: self.metaint.unwrap_or(usize::MAX) }
    }

    fn finish_metadata<F: FnMut(IcyStreamEvent)>(&mut self, emit: &mut F) {
        if let Some(title) = parse_stream_title(&self.metadata) {
            if self.last_title.as_deref() != Some(title.as_str()) {
                self.last_title = Some(title.clone());
                emit(IcyStreamEvent::TitleChange(title));
            }
        }
        self.metadata.clear();
    }
}

/// Demuxes a complete body, ending with `EndOfStream` or `TransportError`.
pub fn demux_icy(bytes: &[u8], metaint: Option<usize>) -> Vec<IcyStreamEvent> {
    let mut demux = IcyDemuxer::new(metaint);
    let mut events = Vec::new();
    demux.push(bytes, |e| events.push(e));
    events.push(demux.finish());
    events
}

/// A title to announce once the stream has passed `offset` audio bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScheduledTitle {
    pub offset: u64,
    pub title: String,
}

impl ScheduledTitle {
    pub fn new(offset: u64, title: impl Into<String>) -> Self {
        Self { offset, title: title.into() }
    }
}

/// Builds an ICY body from raw audio.
///
/// A metadata slot follows every full `metaint` bytes of audio; trailing
/// audio shorter than `metaint` gets no slot. A title scheduled at offset
/// `o` rides in the first slot at or after `o` (the slot after interval
/// `max(1, ceil(o / metaint))`); when several land in the same slot the
/// last one listed wins. All other slots are empty (`L = 0`).
pub fn encode_icy_stream(audio: &[u8], metaint: usize, titles: &[ScheduledTitle]) -> Result<Vec<u8>, StreamError> {
    if metaint == 0 || metaint > MAX_METAINT {
        return Err(StreamError::Protocol(format!("metaint {metaint} out of range")));
    }
    let blocks = audio.len() / metaint;
    let mut slot_titles: Vec<Option<&str>> = vec![None; blocks];
    for t in titles {
        if t.title.contains("';") {
            return Err(StreamError::Protocol(format!("title {:?} contains the terminator", t.title)));
        }
        let slot = (t.offset.div_ceil(metaint as u64)).max(1) as usize;
        if slot <= blocks {
            slot_titles[slot - 1] = Some(&t.title);
        }
    }
    let mut out = Vec::with_capacity(audio.len() + blocks + 64);
    for (k, title) in slot_titles.iter().enumerate() {
        out.extend_from_slice(&audio[k * metaint..(k + 1) * metaint]);
        match title {
            None => out.push(0),
            Some(t) => out.extend_from_slice(&metadata_block(t)?),
        }
    }
    out.extend_from_slice(&audio[blocks * metaint..]);
    Ok(out)
}

/// Length byte followed by the zero-padded `StreamTitle='...';` text.
pub fn metadata_block(title: &str) -> Result<Vec<u8>, StreamError> {
    let text = format!("StreamTitle='{title}';");
    let units = text.len().div_ceil(METADATA_BLOCK_UNIT);
    if units > 255 {
        return Err(StreamError::Protocol(format!("title too long ({} bytes)", text.len())));
    }
    let mut block = Vec::with_capacity(1 + units * METADATA_BLOCK_UNIT);
    block.push(units as u8);
    block.extend_from_slice(text.as_bytes());
    block.resize(1 + units * METADATA_BLOCK_UNIT, 0);
    Ok(block)
}
