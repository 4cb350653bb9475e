//! Batch evaluation over many independent inputs.
//!
//! With the `parallel` feature (on by default) the batch entry points fan
//! out over rayon's thread pool; without it they run the `*_sequential`
//! versions. Both produce identical output: every item gets its own
//! [`ScanContext`] derived from its index, so results do not depend on
//! scheduling.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::rf::{AntennaPattern, RfEnvironment, ScanContext};
use crate::selector::{best_antenna, SelectorState};

/// Selection outcome with the device turned to one heading.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub orientation_deg: f64,
    pub ant_rssi: Vec<Option<i32>>,
    pub best_antenna: Option<usize>,
}

/// Strongest antenna toward one azimuth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopePoint {
    pub theta_deg: f64,
    pub max_gain_dbi: f64,
    pub best_antenna: usize,
}

fn sweep_point(
    env: &RfEnvironment,
    patterns: &[AntennaPattern],
    target_ssid: &str,
    index: usize,
    orientation_deg: f64,
) -> SweepPoint {
    let mut turned = env.clone();
    turned.device_orientation_deg = orientation_deg;
    let mut ctx = ScanContext::starting_at((index as u64) << 32);
    let mut state = SelectorState::new(patterns.len());
    for (antenna, pattern) in patterns.iter().enumerate() {
        let scan = turned.scan(pattern, &mut ctx);
        state.record_scan(antenna, &scan, target_ssid).expect("antenna index in range");
    }
    let best = best_antenna(state.ant_rssi()).ok();
    SweepPoint { orientation_deg, ant_rssi: state.ant_rssi().to_vec(), best_antenna: best }
}

fn envelope_point(patterns: &[AntennaPattern], theta_deg: f64) -> EnvelopePoint {
    let (best_antenna, max_gain_dbi) = patterns
        .iter()
        .map(|p| p.gain(theta_deg))
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bg), (i, g)| if g > bg { (i, g) } else { (bi, bg) });
    EnvelopePoint { theta_deg, max_gain_dbi, best_antenna }
}

/// One scan per antenna at each heading in `orientations`.
pub fn orientation_sweep_sequential(
    env: &RfEnvironment,
    patterns: &[AntennaPattern],
    target_ssid: &str,
    orientations: &[f64],
) -> Vec<SweepPoint> {
    orientations
        .iter()
        .enumerate()
        .map(|(i, &o)| sweep_point(env, patterns, target_ssid, i, o))
        .collect()
}

#[cfg(feature = "parallel")]
pub fn orientation_sweep(
    env: &RfEnvironment,
    patterns: &[AntennaPattern],
    target_ssid: &str,
    orientations: &[f64],
) -> Vec<SweepPoint> {
    orientations
        .par_iter()
        .enumerate()
        .map(|(i, &o)| sweep_point(env, patterns, target_ssid, i, o))
        .collect()
}

#[cfg(not(feature = "parallel"))]
pub fn orientation_sweep(
    env: &RfEnvironment,
    patterns: &[AntennaPattern],
    target_ssid: &str,
    orientations: &[f64],
) -> Vec<SweepPoint> {
    orientation_sweep_sequential(env, patterns, target_ssid, orientations)
}

/// Max-over-antennas gain at `steps` evenly spaced azimuths from 0°.
pub fn gain_envelope_sequential(patterns: &[AntennaPattern], steps: usize) -> Vec<EnvelopePoint> {
    (0..steps).map(|k| envelope_point(patterns, k as f64 * 360.0 / steps as f64)).collect()
}

#[cfg(feature = "parallel")]
pub fn gain_envelope(patterns: &[AntennaPattern], steps: usize) -> Vec<EnvelopePoint> {
    (0..steps)
        .into_par_iter()
        .map(|k| envelope_point(patterns, k as f64 * 360.0 / steps as f64))
        .collect()
}

#[cfg(not(feature = "parallel"))]
pub fn gain_envelope(patterns: &[AntennaPattern], steps: usize) -> Vec<EnvelopePoint> {
    gain_envelope_sequential(patterns, steps)
}

/// `best_antenna` over many tables; `None` where no entry is present.
pub fn best_antennas_sequential(tables: &[Vec<Option<i32>>]) -> Vec<Option<usize>> {
    tables.iter().map(|t| best_antenna(t).ok()).collect()
}

#[cfg(feature = "parallel")]
pub fn best_antennas(tables: &[Vec<Option<i32>>]) -> Vec<Option<usize>> {
    tables.par_iter().map(|t| best_antenna(t).ok()).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn best_antennas(tables: &[Vec<Option<i32>>]) -> Vec<Option<usize>> {
    best_antennas_sequential(tables)
}

/// Headings `0, step, 2·step, …` below 360°.
pub fn headings(step_deg: f64) -> Vec<f64> {
    assert!(step_deg > 0.0, "step must be positive");
    (0..).map(|k| k as f64 * step_deg).take_while(|&h| h < 360.0).collect()
}
