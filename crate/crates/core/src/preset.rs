//! Station preset commands carried in the request path, and the ten-slot
//! store they operate on.
//!
//! | path          | command                 |
//! |---------------|-------------------------|
//! | `/`           | list stations           |
//! | `/P`          | previous station        |
//! | `/N`          | next station            |
//! | `/d`          | select slot `d`         |
//! | `/d+URL`      | store `URL` in slot `d` |
//! | `/d-` `/d-URL`| clear slot `d`          |

use std::fmt;
use std::fmt::Write as _;

use percent_encoding::{percent_decode_str, utf8_percent_encode, AsciiSet, CONTROLS};
use thiserror::Error;

pub const NUM_SLOTS: usize = 10;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProtocolError {
    #[error("unknown command {0:?}")]
    UnknownCommand(String),
    #[error("bad station url {0:?}")]
    BadUrl(String),
    #[error("path is not valid percent-encoded UTF-8")]
    BadEncoding,
    #[error("slot {0} is empty")]
    EmptySlot(Slot),
    #[error("no stations stored")]
    NoStations,
    #[error("preset file line {line}: {reason}")]
    Format { line: usize, reason: String },
}

/// Preset slot index, always in `0..=9`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Slot(u8);

impl Slot {
    pub fn new(index: usize) -> Option<Self> {
        (index < NUM_SLOTS).then_some(Slot(index as u8))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn all() -> impl Iterator<Item = Slot> {
        (0..NUM_SLOTS as u8).map(Slot)
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    List,
    Prev,
    Next,
    Select(Slot),
    Set(Slot, String),
    /// The trailing URL is accepted but does not have to match.
    Remove(Slot, Option<String>),
}

// Only '%' needs escaping for the path to survive decoding unchanged;
// controls and spaces are escaped so the result is a valid request target.
const PATH_ESCAPE: &AsciiSet = &CONTROLS.add(b'%').add(b' ');

impl Command {
    /// Request path that [`parse_command`] maps back to this command.
    pub fn to_path(&self) -> String {
        let enc = |s: &str| utf8_percent_encode(s, PATH_ESCAPE).to_string();
        match self {
            Command::List => "/".into(),
            Command::Prev => "/P".into(),
            Command::Next => "/N".into(),
            Command::Select(d) => format!("/{d}"),
            Command::Set(d, url) => format!("/{d}+{}", enc(url)),
            Command::Remove(d, None) => format!("/{d}-"),
            Command::Remove(d, Some(url)) => format!("/{d}-{}", enc(url)),
        }
    }

    pub fn is_mutation(&self) -> bool {
        matches!(self, Command::Set(..) | Command::Remove(..))
    }
}

pub fn is_valid_station_url(s: &str) -> bool {
    // the URL parser silently drops tabs and newlines, which would corrupt the store file
    if s.chars().any(char::is_control) {
        return false;
    }
    match url::Url::parse(s) {
        Ok(u) => matches!(u.scheme(), "http" | "https") && u.host_str().is_some_and(|h| !h.is_empty()),
        Err(_) => false,
    }
}

pub fn parse_command(path: &str) -> Result<Command, ProtocolError> {
    let decoded = percent_decode_str(path).decode_utf8().map_err(|_| ProtocolError::BadEncoding)?;
    let unknown = || ProtocolError::UnknownCommand(path.to_string());
    let rest = decoded.strip_prefix('/').ok_or_else(unknown)?;
    match rest {
        "" => return Ok(Command::List),
        "P" => return Ok(Command::Prev),
        "N" => return Ok(Command::Next),
        _ => {}
    }
    let mut chars = rest.chars();
    let slot = chars
        .next()
        .and_then(|c| c.to_digit(10))
        .and_then(|d| Slot::new(d as usize))
        .ok_or_else(unknown)?;
    let tail = chars.as_str();
    match tail.chars().next() {
        None => Ok(Command::Select(slot)),
        Some('+') => {
            let url = &tail[1..];
            if !is_valid_station_url(url) {
                return Err(ProtocolError::BadUrl(url.to_string()));
            }
            Ok(Command::Set(slot, url.to_string()))
        }
        Some('-') => {
            let url = &tail[1..];
            Ok(Command::Remove(slot, (!url.is_empty()).then(|| url.to_string())))
        }
        Some(_) => Err(unknown()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionEffect {
    None,
    /// Playback should (re)start on this slot.
    StationChanged(Slot),
    /// The playing station was removed and nothing is left to play.
    Stopped,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandResponse {
    pub body: String,
    pub effect: ActionEffect,
}

/// Ten station slots plus the current one.
///
/// Whenever any slot is filled, `current` points at a filled slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PresetStore {
    slots: [Option<String>; NUM_SLOTS],
    current: Slot,
}

impl Default for PresetStore {
    fn default() -> Self {
        Self { slots: Default::default(), current: Slot(0) }
    }
}

impl PresetStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn current(&self) -> Slot {
        self.current
    }

    pub fn get(&self, slot: Slot) -> Option<&str> {
        self.slots[slot.index()].as_deref()
    }

    /// URL of the current slot, if it holds one.
    pub fn current_url(&self) -> Option<&str> {
        self.get(self.current)
    }

    pub fn is_empty(&self) -> bool {
        self.slots.iter().all(Option::is_none)
    }

    pub fn filled(&self) -> impl Iterator<Item = (Slot, &str)> + '_ {
        Slot::all().filter_map(move |s| self.get(s).map(|u| (s, u)))
    }

    /// One line per filled slot, `*` marking the current station.
    pub fn listing(&self) -> String {
        let mut out = String::new();
        for (slot, url) in self.filled() {
            let mark = if slot == self.current { '*' } else { ' ' };
            let _ = writeln!(out, "{mark} {slot} {url}");
        }
        out
    }

    /// Next filled slot strictly after `from`, cyclically (may return `from`).
    fn step(&self, from: Slot, forward: bool) -> Option<Slot> {
        (1..=NUM_SLOTS)
            .map(|k| {
                let i = if forward { from.index() + k } else { from.index() + NUM_SLOTS * 2 - k };
                Slot((i % NUM_SLOTS) as u8)
            })
            .find(|s| self.slots[s.index()].is_some())
    }

    /// Applies `cmd`. On error the store is left untouched.
    pub fn apply(&mut self, cmd: &Command) -> Result<CommandResponse, ProtocolError> {
        let effect = match cmd {
            Command::List => ActionEffect::None,
            Command::Select(d) => {
                if self.get(*d).is_none() {
                    return Err(ProtocolError::EmptySlot(*d));
                }
                self.current = *d;
                ActionEffect::StationChanged(*d)
            }
            Command::Prev | Command::Next => {
                let to = self.step(self.current, matches!(cmd, Command::Next)).ok_or(ProtocolError::NoStations)?;
                self.current = to;
                ActionEffect::StationChanged(to)
            }
            Command::Set(d, url) => {
                if !is_valid_station_url(url) {
                    return Err(ProtocolError::BadUrl(url.clone()));
                }
                let was_empty = self.is_empty();
                let previous = self.slots[d.index()].replace(url.clone());
                if was_empty {
                    self.current = *d;
                    ActionEffect::StationChanged(*d)
                } else if *d == self.current && previous.as_deref() != Some(url.as_str()) {
                    ActionEffect::StationChanged(*d)
                } else {
                    ActionEffect::None
                }
            }
            Command::Remove(d, _) => {
                let removed = self.slots[d.index()].take();
                if removed.is_some() && *d == self.current {
                    match self.step(*d, true) {
                        Some(next) => {
                            self.current = next;
                            ActionEffect::StationChanged(next)
                        }
                        None => ActionEffect::Stopped,
                    }
                } else {
                    ActionEffect::None
                }
            }
        };
        Ok(CommandResponse { body: self.listing(), effect })
    }

    /// Text form: `d<TAB>url` per filled slot, then `current<TAB>d`.
    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        for (slot, url) in self.filled() {
            let _ = writeln!(out, "{slot}\t{url}");
        }
        let _ = writeln!(out, "current\t{}", self.current);
        out
    }

    pub fn save(&self) -> Vec<u8> {
        self.to_file_string().into_bytes()
    }

    /// Parses the text form. A `current` pointing at an empty slot while
    /// other slots are filled is moved to the next filled slot.
    pub fn load(bytes: &[u8]) -> Result<Self, ProtocolError> {
        let fmt_err = |line: usize, reason: &str| ProtocolError::Format { line, reason: reason.into() };
        let text = std::str::from_utf8(bytes).map_err(|_| fmt_err(0, "not UTF-8"))?;
        let mut store = PresetStore::new();
        let mut current = None;
        for (idx, raw) in text.split('\n').enumerate() {
            let line = idx + 1;
            let raw = raw.strip_suffix('\r').unwrap_or(raw);
            if raw.is_empty() {
                continue;
            }
            let (key, value) = raw.split_once('\t').ok_or_else(|| fmt_err(line, "missing tab"))?;
            if key == "current" {
                if current.is_some() {
                    return Err(fmt_err(line, "duplicate current line"));
                }
                let slot = parse_slot(value).ok_or_else(|| fmt_err(line, "current slot outside 0-9"))?;
                current = Some(slot);
                continue;
            }
            let slot = parse_slot(key).ok_or_else(|| fmt_err(line, "slot outside 0-9"))?;
            if store.slots[slot.index()].is_some() {
                return Err(fmt_err(line, "duplicate slot"));
            }
            if !is_valid_station_url(value) {
                return Err(fmt_err(line, "invalid station url"));
            }
            store.slots[slot.index()] = Some(value.to_string());
        }
        store.current = current.ok_or_else(|| fmt_err(0, "missing current line"))?;
        if store.current_url().is_none() {
            if let Some(next) = store.step(store.current, true) {
                store.current = next;
            }
        }
        Ok(store)
    }
}

fn parse_slot(s: &str) -> Option<Slot> {
    if s.len() != 1 {
        return None;
    }
    s.parse::<usize>().ok().and_then(Slot::new)
}
