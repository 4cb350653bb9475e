use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::display::DEFAULT_DISPLAY_WIDTH;
use crate::rf::{default_patterns, AntennaPattern, EnvError, PatternError, RfEnvironment, SimulatedFrontEnd};
use crate::selector::{SelectorConfig, DEFAULT_NUM_ANTENNAS, DEFAULT_RETRIES_PER_ANTENNA};

pub const DEFAULT_PRESETS_FILE: &str = "presets.tsv";
pub const DEFAULT_DISPLAY_TICK_MS: u64 = 250;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("config json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("listen_address {0:?} is not host:port")]
    ListenAddress(String),
    #[error("environment: {0}")]
    Environment(#[from] EnvError),
    #[error("pattern {path}: {source}")]
    Pattern { path: PathBuf, source: PatternError },
    #[error("num_antennas is {num_antennas} but {patterns} patterns are configured")]
    AntennaCount { num_antennas: usize, patterns: usize },
    #[error("{0} must be >= 1")]
    NonPositive(&'static str),
    #[error("target_ssid is empty")]
    EmptySsid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum AudioSinkConfig {
    #[default]
    Null,
    File { path: PathBuf },
}

/// RF environment plus optional measured pattern files, one per antenna.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct EnvironmentConfig {
    #[serde(flatten)]
    pub rf: RfEnvironment,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pattern_csv: Option<Vec<PathBuf>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GatewayConfig {
    pub target_ssid: String,
    /// Kept for parity with the device configuration; never used.
    pub password: Option<String>,
    pub listen_address: String,
    pub environment: EnvironmentConfig,
    pub num_antennas: usize,
    pub retries_per_antenna: usize,
    pub presets_file: PathBuf,
    pub audio_sink: AudioSinkConfig,
    pub display_width: usize,
    pub display_tick_ms: u64,
    /// Directory served under `/ui/`.
    pub ui_dir: Option<PathBuf>,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        Self {
            target_ssid: String::new(),
            password: None,
            listen_address: "127.0.0.1:8080".into(),
            environment: EnvironmentConfig::default(),
            num_antennas: DEFAULT_NUM_ANTENNAS,
            retries_per_antenna: DEFAULT_RETRIES_PER_ANTENNA,
            presets_file: PathBuf::from(DEFAULT_PRESETS_FILE),
            audio_sink: AudioSinkConfig::Null,
            display_width: DEFAULT_DISPLAY_WIDTH,
            display_tick_ms: DEFAULT_DISPLAY_TICK_MS,
            ui_dir: None,
        }
    }
}

impl GatewayConfig {
    /// Reads a JSON config; relative paths inside it are taken relative to
    /// the config file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Read { path: path.to_path_buf(), source })?;
        let mut cfg: GatewayConfig = serde_json::from_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(text: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let mut cfg: GatewayConfig = serde_json::from_str(text)?;
        cfg.resolve_paths(base_dir);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.presets_file);
        if let AudioSinkConfig::File { path } = &mut self.audio_sink {
            fix(path);
        }
        if let Some(files) = &mut self.environment.pattern_csv {
            files.iter_mut().for_each(fix);
        }
        if let Some(dir) = &mut self.ui_dir {
            fix(dir);
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.listen_address
            .parse::<SocketAddr>()
            .map(|_| ())
            .or_else(|_| match self.listen_address.rsplit_once(':') {
                Some((host, port)) if !host.is_empty() && port.parse::<u16>().is_ok() => Ok(()),
                _ => Err(ConfigError::ListenAddress(self.listen_address.clone())),
            })?;
        self.environment.rf.validate()?;
        if self.target_ssid.is_empty() {
            return Err(ConfigError::EmptySsid);
        }
        if self.num_antennas == 0 {
            return Err(ConfigError::NonPositive("num_antennas"));
        }
        if self.retries_per_antenna == 0 {
            return Err(ConfigError::NonPositive("retries_per_antenna"));
        }
        if self.display_width == 0 {
            return Err(ConfigError::NonPositive("display_width"));
        }
        if self.display_tick_ms == 0 {
            return Err(ConfigError::NonPositive("display_tick_ms"));
        }
        let patterns = self.environment.pattern_csv.as_ref().map_or(default_patterns().len(), Vec::len);
        if patterns != self.num_antennas {
            return Err(ConfigError::AntennaCount { num_antennas: self.num_antennas, patterns });
        }
        Ok(())
    }

    pub fn patterns(&self) -> Result<Vec<AntennaPattern>, ConfigError> {
        let Some(files) = &self.environment.pattern_csv else {
            return Ok(default_patterns());
        };
        files
            .iter()
            .enumerate()
            .map(|(id, path)| {
                let text = std::fs::read_to_string(path)
                    .map_err(|source| ConfigError::Read { path: path.clone(), source })?;
                AntennaPattern::from_csv(id, &text).map_err(|source| ConfigError::Pattern { path: path.clone(), source })
            })
            .collect()
    }

    pub fn front_end(&self) -> Result<SimulatedFrontEnd, ConfigError> {
        let patterns = self.patterns()?;
        if patterns.len() != self.num_antennas {
            return Err(ConfigError::AntennaCount { num_antennas: self.num_antennas, patterns: patterns.len() });
        }
        Ok(SimulatedFrontEnd::new(self.environment.rf.clone(), patterns))
    }

    pub fn selector_config(&self) -> SelectorConfig {
        SelectorConfig {
            target_ssid: self.target_ssid.clone(),
            num_antennas: self.num_antennas,
            retries_per_antenna: self.retries_per_antenna,
        }
    }
}
