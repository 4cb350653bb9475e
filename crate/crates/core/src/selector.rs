//! Boot-time antenna selection.
//!
//! Every antenna is switched in turn, a Wi-Fi scan is taken through it and
//! the RSSI of the target SSID is stored in a per-antenna table. Once all
//! antennas have been measured the strongest one wins.

use thiserror::Error;

use crate::rf::{ScanEntry, SimulatedFrontEnd, RSSI_MIN_DBM};

pub const DEFAULT_NUM_ANTENNAS: usize = 3;
pub const DEFAULT_RETRIES_PER_ANTENNA: usize = 3;

/// Value logged for an antenna that never saw the target SSID.
pub const MISSING_RSSI_SENTINEL: i32 = RSSI_MIN_DBM;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SelectorError {
    #[error("antenna {antenna} out of range (have {num_antennas})")]
    AntennaOutOfRange { antenna: usize, num_antennas: usize },
    #[error("no antenna has a signal")]
    NoSignal,
    #[error("target ssid not seen on any antenna after {attempts} scans")]
    SelectionFailed { ant_rssi: Vec<Option<i32>>, attempts: usize },
    #[error("invalid selector config: {0}")]
    Config(&'static str),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectorConfig {
    pub target_ssid: String,
    pub num_antennas: usize,
    pub retries_per_antenna: usize,
}

impl SelectorConfig {
    pub fn new(target_ssid: impl Into<String>) -> Self {
        Self {
            target_ssid: target_ssid.into(),
            num_antennas: DEFAULT_NUM_ANTENNAS,
            retries_per_antenna: DEFAULT_RETRIES_PER_ANTENNA,
        }
    }

    pub fn validate(&self) -> Result<(), SelectorError> {
        if self.num_antennas == 0 {
            return Err(SelectorError::Config("num_antennas must be >= 1"));
        }
        if self.retries_per_antenna == 0 {
            return Err(SelectorError::Config("retries_per_antenna must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectorPhase {
    Scanning,
    Selected,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectorState {
    ant_rssi: Vec<Option<i32>>,
    current_antenna: usize,
    phase: SelectorPhase,
}

impl SelectorState {
    pub fn new(num_antennas: usize) -> Self {
        assert!(num_antennas >= 1, "at least one antenna");
        Self { ant_rssi: vec![None; num_antennas], current_antenna: 0, phase: SelectorPhase::Scanning }
    }

    pub fn ant_rssi(&self) -> &[Option<i32>] {
        &self.ant_rssi
    }

    pub fn current_antenna(&self) -> usize {
        self.current_antenna
    }

    pub fn phase(&self) -> SelectorPhase {
        self.phase
    }

    /// Stores the target SSID's RSSI seen on `antenna`. With several
    /// matching BSSIDs the strongest is kept; with none the entry is left
    /// as it was.
    pub fn record_scan(
        &mut self,
        antenna: usize,
        scan: &[ScanEntry],
        target_ssid: &str,
    ) -> Result<Option<i32>, SelectorError> {
        let num_antennas = self.ant_rssi.len();
        if antenna >= num_antennas {
            return Err(SelectorError::AntennaOutOfRange { antenna, num_antennas });
        }
        self.current_antenna = antenna;
        let best = scan
            .iter()
            .filter(|e| e.ssid.as_bytes() == target_ssid.as_bytes())
            .map(|e| e.rssi)
            .max();
        if best.is_some() {
            self.ant_rssi[antenna] = best;
        }
        Ok(best)
    }

    /// Picks the best antenna and moves to `Selected`.
    pub fn select(&mut self) -> Result<usize, SelectorError> {
        let best = best_antenna(&self.ant_rssi)?;
        self.current_antenna = best;
        self.phase = SelectorPhase::Selected;
        Ok(best)
    }
}

/// Index of the strongest present entry; ties go to the lowest index.
pub fn best_antenna(ant_rssi: &[Option<i32>]) -> Result<usize, SelectorError> {
    ant_rssi
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.map(|r| (i, r)))
        .fold(None, |best: Option<(usize, i32)>, (i, r)| match best {
            Some((_, b)) if b >= r => best,
            _ => Some((i, r)),
        })
        .map(|(i, _)| i)
        .ok_or(SelectorError::NoSignal)
}

/// Something that can take a Wi-Fi scan through a chosen antenna.
pub trait AntennaScanner {
    fn scan(&mut self, antenna: usize) -> Vec<ScanEntry>;
}

impl AntennaScanner for SimulatedFrontEnd {
    fn scan(&mut self, antenna: usize) -> Vec<ScanEntry> {
        self.scan_antenna(antenna).unwrap_or_default()
    }
}

impl<F: FnMut(usize) -> Vec<ScanEntry>> AntennaScanner for F {
    fn scan(&mut self, antenna: usize) -> Vec<ScanEntry> {
        self(antenna)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectionResult {
    pub best_antenna: usize,
    pub ant_rssi: Vec<Option<i32>>,
    pub attempts: usize,
}

/// Runs the full selection, logging each scan through the `log` crate.
pub fn run_selection<S: AntennaScanner + ?Sized>(
    scanner: &mut S,
    config: &SelectorConfig,
) -> Result<SelectionResult, SelectorError> {
    run_selection_with_log(scanner, config, |line| log::info!("{line}"))
}

/// Runs the full selection. `log_line` receives `rssi: <dBm>` after every
/// scan (the sentinel when the target was not seen) and a final
/// `best antenna: <n>` with 1-based numbering.
pub fn run_selection_with_log<S, L>(
    scanner: &mut S,
    config: &SelectorConfig,
    mut log_line: L,
) -> Result<SelectionResult, SelectorError>
where
    S: AntennaScanner + ?Sized,
    L: FnMut(&str),
{
    config.validate()?;
    let mut state = SelectorState::new(config.num_antennas);
    let mut attempts = 0;
    for antenna in 0..config.num_antennas {
        for _ in 0..config.retries_per_antenna {
            let scan = scanner.scan(antenna);
            attempts += 1;
            let seen = state.record_scan(antenna, &scan, &config.target_ssid)?;
            log_line(&format!("rssi: {}", seen.unwrap_or(MISSING_RSSI_SENTINEL)));
            if seen.is_some() {
                break;
            }
        }
    }
    match state.select() {
        Ok(best) => {
            log_line(&format!("best antenna: {}", best + 1));
            Ok(SelectionResult { best_antenna: best, ant_rssi: state.ant_rssi, attempts })
        }
        Err(SelectorError::NoSignal) => {
            Err(SelectorError::SelectionFailed { ant_rssi: state.ant_rssi, attempts })
        }
        Err(e) => Err(e),
    }
}
