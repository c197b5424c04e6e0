//! Synthesis input: band specification, substrate choice and layout knobs.

use std::path::Path;

use mlfilter_core::layout::{MlHairpinParams, DEFAULT_FEED_LENGTH};
use mlfilter_core::prototype::FilterSpec;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

fn default_z0() -> f64 {
    50.0
}

fn default_feed_length() -> f64 {
    DEFAULT_FEED_LENGTH
}

/// Band specification in GHz, dB and Ω.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecConfig {
    pub f_lower_ghz: f64,
    pub f_upper_ghz: f64,
    /// Geometric mean of the band edges when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f0_ghz: Option<f64>,
    pub ripple_db: f64,
    pub stop_freq_ghz: f64,
    pub stop_atten_db: f64,
    #[serde(default = "default_z0")]
    pub z0: f64,
}

impl SpecConfig {
    pub fn to_spec(&self) -> Result<FilterSpec, CliError> {
        Ok(FilterSpec::new(
            self.f_lower_ghz,
            self.f_upper_ghz,
            self.f0_ghz,
            self.ripple_db,
            self.stop_freq_ghz,
            self.stop_atten_db,
            self.z0,
        )?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PclLayoutConfig {
    #[serde(default = "default_feed_length")]
    pub feed_length: f64,
}

impl Default for PclLayoutConfig {
    fn default() -> Self {
        Self { feed_length: DEFAULT_FEED_LENGTH }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub substrate: String,
    pub spec: SpecConfig,
    #[serde(default)]
    pub pcl: PclLayoutConfig,
    #[serde(default)]
    pub ml: MlHairpinParams,
}

impl Config {
    pub fn parse(text: &str, origin: &Path) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::parse(origin, e.message()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, path)
    }
}
