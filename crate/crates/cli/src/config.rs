//! The pipeline configuration document.

use std::path::{Path, PathBuf};

use brakesense::eval::EvalProtocol;
use brakesense::pipeline::{CohortConfig, DEFAULT_NO_BRAKE_EPOCHS};
use brakesense::preprocess::{
    design_bandpass, EpochWindowSpec, FirFilter, DEFAULT_HIGH_HZ, DEFAULT_LOW_HZ, DEFAULT_NUM_TAPS,
};
use brakesense::synth::{fit_default_rt_model, ErpTemplateConfig, NoiseConfig, ScenarioConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterConfig {
    pub low_hz: f64,
    pub high_hz: f64,
    pub num_taps: usize,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            low_hz: DEFAULT_LOW_HZ,
            high_hz: DEFAULT_HIGH_HZ,
            num_taps: DEFAULT_NUM_TAPS,
        }
    }
}

/// Every field is required and unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub subjects: usize,
    pub no_brake_epochs: usize,
    pub scenario: ScenarioConfig,
    pub erp: ErpTemplateConfig,
    pub noise: NoiseConfig,
    pub epochs: EpochWindowSpec,
    pub filter: FilterConfig,
    pub protocol: EvalProtocol,
    pub output_dir: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            subjects: 11,
            no_brake_epochs: DEFAULT_NO_BRAKE_EPOCHS,
            scenario: ScenarioConfig::default(),
            erp: ErpTemplateConfig::default(),
            noise: NoiseConfig::default(),
            epochs: EpochWindowSpec::default(),
            filter: FilterConfig::default(),
            protocol: EvalProtocol::default(),
            output_dir: PathBuf::from("brakesense-out"),
        }
    }
}

impl PipelineConfig {
    pub fn from_json(text: &str, origin: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: PipelineConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::Config(format!("{origin}: at `{path}`: {}", e.inner()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text, &path.display().to_string())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let config_err = |e: brakesense::Error| CliError::Config(e.to_string());
        if self.subjects == 0 {
            return Err(CliError::Config("subjects must be at least 1".into()));
        }
        self.scenario.validate().map_err(config_err)?;
        self.erp.validate().map_err(config_err)?;
        self.noise.validate().map_err(config_err)?;
        self.epochs.validate().map_err(config_err)?;
        self.protocol.validate().map_err(config_err)?;
        self.filter()?;
        Ok(())
    }

    pub fn filter(&self) -> Result<FirFilter, CliError> {
        let f = self.filter;
        design_bandpass(f.low_hz, f.high_hz, self.scenario.sample_rate_hz as f64, f.num_taps)
            .map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn cohort(&self) -> CohortConfig {
        CohortConfig {
            scenario: self.scenario,
            erp: self.erp,
            noise: self.noise,
            reaction: fit_default_rt_model(),
            epochs: self.epochs,
        }
    }

    /// Hex SHA-256 of the compact JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex(&Sha256::digest(&json))
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
