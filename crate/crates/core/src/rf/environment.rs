use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use super::pattern::AntennaPattern;

pub const DEFAULT_PATH_LOSS_EXPONENT: f64 = 2.0;
/// Free-space loss at 1 m for 2.44 GHz.
pub const DEFAULT_REFERENCE_LOSS_DB: f64 = 40.2;
pub const DEFAULT_SENSITIVITY_FLOOR_DBM: i32 = -100;
pub const RSSI_MIN_DBM: i32 = -127;
pub const RSSI_MAX_DBM: i32 = 0;
pub const MAX_SSID_BYTES: usize = 32;

const MIN_SEPARATION_M: f64 = 0.01;
const SHADOW_DOMAIN: u64 = 0x5348_4144_4f57_0001;
const NOISE_DOMAIN: u64 = 0x4e4f_4953_4500_0002;

#[derive(Debug, Error, PartialEq)]
pub enum EnvError {
    #[error("path loss exponent {0} outside [1.5, 6.0]")]
    PathLossExponent(f64),
    #[error("reference loss must be positive, got {0}")]
    ReferenceLoss(f64),
    #[error("{name} must be finite and >= 0, got {value}")]
    Sigma { name: &'static str, value: f64 },
    #[error("duplicate bssid {0}")]
    DuplicateBssid(Bssid),
    #[error("access point {bssid}: tx power {dbm} dBm outside [-20, 30]")]
    TxPower { bssid: Bssid, dbm: f64 },
    #[error("access point {0}: ssid longer than {MAX_SSID_BYTES} bytes")]
    SsidTooLong(Bssid),
    #[error("access point {0} is within 1 cm of the device")]
    Coincident(Bssid),
    #[error("non-finite coordinate or orientation")]
    NonFinite,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("access point {0} coincides with the device position")]
pub struct GeometryError(pub Bssid);

/// 6-byte access point identifier, written `aa:bb:cc:dd:ee:ff`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Bssid(pub [u8; 6]);

impl Bssid {
    fn as_u64(&self) -> u64 {
        self.0.iter().fold(0u64, |acc, &b| (acc << 8) | b as u64)
    }
}

impl fmt::Display for Bssid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let b = self.0;
        write!(f, "{:02x}:{:02x}:{:02x}:{:02x}:{:02x}:{:02x}", b[0], b[1], b[2], b[3], b[4], b[5])
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("invalid bssid {0:?}")]
pub struct BssidParseError(String);

impl FromStr for Bssid {
    type Err = BssidParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || BssidParseError(s.to_string());
        let mut out = [0u8; 6];
        let mut parts = s.split([':', '-']);
        for byte in out.iter_mut() {
            let part = parts.next().ok_or_else(err)?;
            if part.len() != 2 {
                return Err(err());
            }
            *byte = u8::from_str_radix(part, 16).map_err(|_| err())?;
        }
        if parts.next().is_some() {
            return Err(err());
        }
        Ok(Bssid(out))
    }
}

impl Serialize for Bssid {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Bssid {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (other.x - self.x).hypot(other.y - self.y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccessPoint {
    pub ssid: String,
    pub bssid: Bssid,
    pub position: Point,
    pub tx_power_dbm: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanEntry {
    pub ssid: String,
    pub bssid: Bssid,
    pub rssi: i32,
}

/// Per-scan state: the counter that seeds scan noise draws.
///
/// Each thread that scans should own its own context.
#[derive(Debug, Clone, Default)]
pub struct ScanContext {
    counter: u64,
}

impl ScanContext {
    pub fn new() -> Self {
        Self::default()
    }

    /// Context whose noise stream starts at `counter`.
    pub fn starting_at(counter: u64) -> Self {
        Self { counter }
    }

    pub fn calls(&self) -> u64 {
        self.counter
    }

    fn next(&mut self) -> u64 {
        let c = self.counter;
        self.counter = self.counter.wrapping_add(1);
        c
    }
}

/// Simulated horizontal-plane radio environment around the device.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RfEnvironment {
    pub access_points: Vec<AccessPoint>,
    pub device_position: Point,
    pub device_orientation_deg: f64,
    pub path_loss_exponent: f64,
    pub reference_loss_db: f64,
    pub shadowing_sigma_db: f64,
    pub scan_noise_sigma_db: f64,
    pub sensitivity_floor_dbm: i32,
    pub seed: u64,
}

impl Default for RfEnvironment {
    fn default() -> Self {
        Self {
            access_points: Vec::new(),
            device_position: Point::default(),
            device_orientation_deg: 0.0,
            path_loss_exponent: DEFAULT_PATH_LOSS_EXPONENT,
            reference_loss_db: DEFAULT_REFERENCE_LOSS_DB,
            shadowing_sigma_db: 0.0,
            scan_noise_sigma_db: 0.0,
            sensitivity_floor_dbm: DEFAULT_SENSITIVITY_FLOOR_DBM,
            seed: 0,
        }
    }
}

impl RfEnvironment {
    pub fn validate(&self) -> Result<(), EnvError> {
        if !(1.5..=6.0).contains(&self.path_loss_exponent) {
            return Err(EnvError::PathLossExponent(self.path_loss_exponent));
        }
        if !(self.reference_loss_db > 0.0 && self.reference_loss_db.is_finite()) {
            return Err(EnvError::ReferenceLoss(self.reference_loss_db));
        }
        for (name, value) in [
            ("shadowing_sigma_db", self.shadowing_sigma_db),
            ("scan_noise_sigma_db", self.scan_noise_sigma_db),
        ] {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(EnvError::Sigma { name, value });
            }
        }
        let dev = self.device_position;
        if !(dev.x.is_finite() && dev.y.is_finite() && self.device_orientation_deg.is_finite()) {
            return Err(EnvError::NonFinite);
        }
        for (i, ap) in self.access_points.iter().enumerate() {
            if self.access_points[..i].iter().any(|other| other.bssid == ap.bssid) {
                return Err(EnvError::DuplicateBssid(ap.bssid));
            }
            if !(-20.0..=30.0).contains(&ap.tx_power_dbm) {
                return Err(EnvError::TxPower { bssid: ap.bssid, dbm: ap.tx_power_dbm });
            }
            if ap.ssid.len() > MAX_SSID_BYTES {
                return Err(EnvError::SsidTooLong(ap.bssid));
            }
            if !(ap.position.x.is_finite() && ap.position.y.is_finite()) {
                return Err(EnvError::NonFinite);
            }
            if dev.distance(&ap.position) < MIN_SEPARATION_M {
                return Err(EnvError::Coincident(ap.bssid));
            }
        }
        Ok(())
    }

    /// Azimuth of `ap` relative to the device's heading, in `[0, 360)`.
    pub fn bearing_to(&self, ap: &AccessPoint) -> f64 {
        let dx = ap.position.x - self.device_position.x;
        let dy = ap.position.y - self.device_position.y;
        (dy.atan2(dx).to_degrees() - self.device_orientation_deg).rem_euclid(360.0)
    }

    /// Log-distance path loss for distance `d` metres (clamped at 1 m).
    pub fn path_loss_db(&self, distance_m: f64) -> f64 {
        self.reference_loss_db + 10.0 * self.path_loss_exponent * distance_m.max(1.0).log10()
    }

    /// Per-link shadowing term, fixed for a given (seed, bssid).
    pub fn shadowing_db(&self, bssid: Bssid) -> f64 {
        gaussian(self.shadowing_sigma_db, mix(self.seed ^ SHADOW_DOMAIN, bssid.as_u64()))
    }

    fn scan_noise_db(&self, ctx: &mut ScanContext) -> f64 {
        let call = ctx.next();
        gaussian(self.scan_noise_sigma_db, mix(self.seed ^ NOISE_DOMAIN, call))
    }

    /// Unquantized received power in dBm, before rounding and clamping.
    pub fn received_power_raw(
        &self,
        pattern: &AntennaPattern,
        ap: &AccessPoint,
        ctx: &mut ScanContext,
    ) -> Result<f64, GeometryError> {
        let d = self.device_position.distance(&ap.position);
        if d.is_nan() || d < MIN_SEPARATION_M {
            return Err(GeometryError(ap.bssid));
        }
        let gain = pattern.gain(self.bearing_to(ap));
        let noise = self.scan_noise_db(ctx);
        Ok(ap.tx_power_dbm + gain - self.path_loss_db(d) - self.shadowing_db(ap.bssid) + noise)
    }

    /// Integer RSSI in dBm clamped to `[-127, 0]`.
    pub fn received_power(
        &self,
        pattern: &AntennaPattern,
        ap: &AccessPoint,
        ctx: &mut ScanContext,
    ) -> Result<i32, GeometryError> {
        self.received_power_raw(pattern, ap, ctx).map(quantize_rssi)
    }

    /// Simulated Wi-Fi scan through one antenna: strongest first, ties by
    /// bssid, APs below the sensitivity floor omitted.
    pub fn scan(&self, pattern: &AntennaPattern, ctx: &mut ScanContext) -> Vec<ScanEntry> {
        let mut entries: Vec<ScanEntry> = self
            .access_points
            .iter()
            .filter_map(|ap| match self.received_power(pattern, ap, ctx) {
                Ok(rssi) => Some(ScanEntry { ssid: ap.ssid.clone(), bssid: ap.bssid, rssi }),
                Err(e) => {
                    log::warn!("skipping {e}");
                    None
                }
            })
            .filter(|e| e.rssi >= self.sensitivity_floor_dbm)
            .collect();
        entries.sort_by(|a, b| b.rssi.cmp(&a.rssi).then(a.bssid.cmp(&b.bssid)));
        entries
    }
}

pub fn quantize_rssi(raw_dbm: f64) -> i32 {
    if raw_dbm.is_nan() {
        return RSSI_MIN_DBM;
    }
    (raw_dbm.round().clamp(RSSI_MIN_DBM as f64, RSSI_MAX_DBM as f64)) as i32
}

fn gaussian(sigma: f64, seed: u64) -> f64 {
    if sigma == 0.0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Normal::new(0.0, sigma).expect("sigma validated").sample(&mut rng)
}

// splitmix64 finalizer over the pair
fn mix(a: u64, b: u64) -> u64 {
    let mut z = a.wrapping_add(b.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
