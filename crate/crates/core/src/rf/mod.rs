//! Simulated switched-antenna front end and Wi-Fi environment.
//!
//! Each antenna has a horizontal gain pattern; an environment of access
//! points turns a pattern into a scan list with integer-dBm RSSI using a
//! log-distance channel with optional seeded shadowing and scan noise.

mod environment;
mod pattern;

pub use environment::{
    quantize_rssi, AccessPoint, Bssid, BssidParseError, EnvError, GeometryError, Point,
    RfEnvironment, ScanContext, ScanEntry, DEFAULT_PATH_LOSS_EXPONENT, DEFAULT_REFERENCE_LOSS_DB,
    DEFAULT_SENSITIVITY_FLOOR_DBM, RSSI_MAX_DBM, RSSI_MIN_DBM,
};
pub use pattern::{
    default_patterns, AntennaPattern, PatternError, DEFAULT_BORESIGHTS, DEFAULT_PEAK_DBI,
    MAX_PATTERN_SPAN_DB, MIN_CSV_ROWS, PATTERN_SAMPLES,
};

/// The three antennas behind the RF switch, paired with the environment
/// they see. Owns its own [`ScanContext`].
#[derive(Debug, Clone)]
pub struct SimulatedFrontEnd {
    env: RfEnvironment,
    patterns: Vec<AntennaPattern>,
    ctx: ScanContext,
}

impl SimulatedFrontEnd {
    pub fn new(env: RfEnvironment, patterns: Vec<AntennaPattern>) -> Self {
        Self { env, patterns, ctx: ScanContext::new() }
    }

    pub fn environment(&self) -> &RfEnvironment {
        &self.env
    }

    pub fn patterns(&self) -> &[AntennaPattern] {
        &self.patterns
    }

    pub fn num_antennas(&self) -> usize {
        self.patterns.len()
    }

    /// Scan through antenna `antenna`; `None` if no such antenna exists.
    pub fn scan_antenna(&mut self, antenna: usize) -> Option<Vec<ScanEntry>> {
        let pattern = self.patterns.get(antenna)?;
        Some(self.env.scan(pattern, &mut self.ctx))
    }
}
