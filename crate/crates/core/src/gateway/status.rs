use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GatewayPhase {
    Selecting,
    Idle,
    Playing,
    Error,
}

/// Body of `GET /api/status`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GatewayStatus {
    pub phase: GatewayPhase,
    /// One entry per antenna, dBm; `null` where the SSID was not seen.
    pub ant_rssi: Vec<Option<i32>>,
    pub best_antenna: Option<usize>,
    pub antenna_color: Option<String>,
    pub current_slot: Option<usize>,
    pub station_url: Option<String>,
    pub stream_title: Option<String>,
    pub ip_address: String,
    pub display: [String; 3],
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("no indicator color for antenna {0}")]
pub struct IndicatorError(pub usize);

const INDICATOR_COLORS: [&str; 3] = ["red", "green", "blue"];

/// Color of the RGB LED that marks the selected antenna.
pub fn antenna_indicator(antenna: usize) -> Result<&'static str, IndicatorError> {
    INDICATOR_COLORS.get(antenna).copied().ok_or(IndicatorError(antenna))
}
