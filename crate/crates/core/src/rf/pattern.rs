//! Azimuthal antenna gain tables.
//!
//! A pattern stores one gain value (dBi) per integer degree of azimuth.
//! Lookups between integer degrees interpolate linearly and wrap at 360°.

use thiserror::Error;

/// Number of stored azimuth samples, one per degree.
pub const PATTERN_SAMPLES: usize = 360;

/// Largest allowed spread between the strongest and weakest entry.
pub const MAX_PATTERN_SPAN_DB: f64 = 60.0;

/// Peak gain of the built-in synthetic patterns.
pub const DEFAULT_PEAK_DBI: f64 = 2.0;

/// Boresights of the three built-in patterns, in degrees.
pub const DEFAULT_BORESIGHTS: [f64; 3] = [0.0, 180.0, 90.0];

const DEFAULT_FLOOR_AMPLITUDE: f64 = 1e-2;

/// Fewest CSV rows accepted by [`AntennaPattern::from_csv`].
pub const MIN_CSV_ROWS: usize = 2;

#[derive(Debug, Error, PartialEq)]
pub enum PatternError {
    #[error("pattern must have exactly {PATTERN_SAMPLES} gains, got {0}")]
    WrongLength(usize),
    #[error("gain at {0} deg is not finite")]
    NonFinite(usize),
    #[error("gain span {0:.1} dB exceeds {MAX_PATTERN_SPAN_DB} dB")]
    SpanTooLarge(f64),
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("need at least {MIN_CSV_ROWS} distinct angles, got {0}")]
    InsufficientData(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AntennaPattern {
    antenna_id: usize,
    gains: Vec<f64>,
}

impl AntennaPattern {
    pub fn new(antenna_id: usize, gains: Vec<f64>) -> Result<Self, PatternError> {
        if gains.len() != PATTERN_SAMPLES {
            return Err(PatternError::WrongLength(gains.len()));
        }
        if let Some(deg) = gains.iter().position(|g| !g.is_finite()) {
            return Err(PatternError::NonFinite(deg));
        }
        let (lo, hi) = gains
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &g| (lo.min(g), hi.max(g)));
        if hi - lo > MAX_PATTERN_SPAN_DB {
            return Err(PatternError::SpanTooLarge(hi - lo));
        }
        Ok(Self { antenna_id, gains })
    }

    /// Pattern with the same gain in every direction.
    pub fn isotropic(antenna_id: usize, gain_dbi: f64) -> Self {
        Self { antenna_id, gains: vec![gain_dbi; PATTERN_SAMPLES] }
    }

    /// Synthetic cardioid-like pattern with its peak at `boresight_deg` and a
    /// floored null on the opposite side.
    ///
    /// `G(θ) = 2 + 20·log10(max(|cos((θ − b)/2)|, 0.01))`
    pub fn synthetic(antenna_id: usize, boresight_deg: f64) -> Self {
        let gains = (0..PATTERN_SAMPLES)
            .map(|deg| {
                let half = ((deg as f64 - boresight_deg) / 2.0).to_radians();
                DEFAULT_PEAK_DBI + 20.0 * half.cos().abs().max(DEFAULT_FLOOR_AMPLITUDE).log10()
            })
            .collect();
        Self { antenna_id, gains }
    }

    /// Parses `angle_deg,gain_dbi` rows and fills every integer degree by
    /// wrapping linear interpolation between the nearest given angles.
    ///
    /// Blank lines and lines starting with `#` are skipped. Angles are taken
    /// modulo 360; the same angle given twice is rejected.
    pub fn from_csv(antenna_id: usize, text: &str) -> Result<Self, PatternError> {
        let mut points: Vec<(f64, f64)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let row = raw.trim();
            if row.is_empty() || row.starts_with('#') {
                continue;
            }
            let parse_err = |reason: String| PatternError::Parse { line, reason };
            let mut fields = row.split(',');
            let (Some(a), Some(g), None) = (fields.next(), fields.next(), fields.next()) else {
                return Err(parse_err("expected `angle_deg,gain_dbi`".into()));
            };
            let angle: f64 = a
                .trim()
                .parse()
                .map_err(|_| parse_err(format!("bad angle {:?}", a.trim())))?;
            let gain: f64 = g
                .trim()
                .parse()
                .map_err(|_| parse_err(format!("bad gain {:?}", g.trim())))?;
            if !angle.is_finite() || !gain.is_finite() {
                return Err(parse_err("non-finite value".into()));
            }
            let angle = angle.rem_euclid(360.0);
            if points.iter().any(|&(p, _)| p == angle) {
                return Err(parse_err(format!("duplicate angle {angle}")));
            }
            points.push((angle, gain));
        }
        if points.len() < MIN_CSV_ROWS {
            return Err(PatternError::InsufficientData(points.len()));
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));

        let gains = (0..PATTERN_SAMPLES)
            .map(|deg| interpolate_wrapped(&points, deg as f64))
            .collect();
        Self::new(antenna_id, gains)
    }

    pub fn antenna_id(&self) -> usize {
        self.antenna_id
    }

    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    /// Gain in dBi toward azimuth `theta_deg`; any finite angle is accepted.
    pub fn gain(&self, theta_deg: f64) -> f64 {
        let t = theta_deg.rem_euclid(360.0);
        let lower = t.floor();
        let frac = t - lower;
        let i = (lower as usize) % PATTERN_SAMPLES;
        let a = self.gains[i];
        if frac == 0.0 {
            return a;
        }
        let b = self.gains[(i + 1) % PATTERN_SAMPLES];
        a + frac * (b - a)
    }

    pub fn peak_gain(&self) -> f64 {
        self.gains.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Integer degree of the weakest gain. A flat floor spanning several
    /// degrees reports the centre of the first such run, wrapping at 360°.
    pub fn null_angle(&self) -> usize {
        let min = self.gains.iter().copied().fold(f64::INFINITY, f64::min);
        let is_min = |deg: usize| self.gains[deg % PATTERN_SAMPLES] == min;
        let Some(start) = (0..PATTERN_SAMPLES).find(|&d| is_min(d) && !is_min(d + PATTERN_SAMPLES - 1)) else {
            return 0; // constant pattern
        };
        let run = (start..start + PATTERN_SAMPLES).take_while(|&d| is_min(d)).count();
        (start + (run - 1) / 2) % PATTERN_SAMPLES
    }
}

/// `points` is sorted by angle in `[0, 360)` and holds at least two entries.
fn interpolate_wrapped(points: &[(f64, f64)], deg: f64) -> f64 {
    // First point at or after `deg`, wrapping to the first point + 360.
    let after = points.iter().position(|&(a, _)| a >= deg);
    let (a0, g0, a1, g1) = match after {
        Some(j) if points[j].0 == deg => return points[j].1,
        Some(0) => {
            let (la, lg) = points[points.len() - 1];
            (la - 360.0, lg, points[0].0, points[0].1)
        }
        Some(j) => (points[j - 1].0, points[j - 1].1, points[j].0, points[j].1),
        None => {
            let (la, lg) = points[points.len() - 1];
            (la, lg, points[0].0 + 360.0, points[0].1)
        }
    };
    g0 + (deg - a0) / (a1 - a0) * (g1 - g0)
}

/// The three built-in patterns: nulls at 180° and 0° for the first two,
/// and a third aimed at 90° that fills both nulls.
pub fn default_patterns() -> Vec<AntennaPattern> {
    DEFAULT_BORESIGHTS
        .iter()
        .enumerate()
        .map(|(id, &b)| AntennaPattern::synthetic(id, b))
        .collect()
}
