//! Versioned JSON configuration for batch jobs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::augment::{AugmentConfig, ExternalNoiseBank, NoiseKind};
use crate::ddpm::train::TrainConfig;
use crate::{Error, Result};

use super::wav::{load_wav, WavFormat};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RearrangeToggle {
    /// Rearrange cycles before augmenting each copy.
    pub augment: bool,
    pub probability: f64,
}

impl Default for RearrangeToggle {
    fn default() -> Self {
        Self { augment: false, probability: 0.75 }
    }
}

/// Noise clip paths, relative to the config file's directory.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoisePaths {
    pub pcg: Vec<PathBuf>,
    pub ecg: Vec<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FragmentConfig {
    pub seconds: f64,
    pub count: usize,
}

impl Default for FragmentConfig {
    fn default() -> Self {
        Self { seconds: 1.5, count: 3 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub version: u32,
    /// Master seed; a command-line seed overrides it.
    pub seed: Option<u64>,
    pub copies: usize,
    pub sample_rate: f64,
    pub wav_format: WavFormat,
    pub output_dir: Option<PathBuf>,
    pub rearrange: RearrangeToggle,
    pub fragments: Option<FragmentConfig>,
    pub noise: NoisePaths,
    pub augment: AugmentConfig,
    pub train: TrainConfig,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            version: CONFIG_VERSION,
            seed: None,
            copies: 30,
            sample_rate: 2000.0,
            wav_format: WavFormat::Float32,
            output_dir: None,
            rearrange: RearrangeToggle::default(),
            fragments: None,
            noise: NoisePaths::default(),
            augment: AugmentConfig::default(),
            train: TrainConfig::default(),
            base_dir: PathBuf::new(),
        }
    }
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::from_json(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::Config(format!(
                "unsupported config version {} (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        if !(self.sample_rate > 0.0 && self.sample_rate.fract() == 0.0) {
            return Err(Error::Config(format!("sample_rate must be a positive integer, got {}", self.sample_rate)));
        }
        if !(0.0..=1.0).contains(&self.rearrange.probability) {
            return Err(Error::Config(format!(
                "rearrange.probability {} outside [0, 1]",
                self.rearrange.probability
            )));
        }
        if let Some(f) = &self.fragments {
            if f.seconds.is_nan() || f.seconds <= 0.0 || f.count == 0 {
                return Err(Error::Config("fragments need seconds > 0 and count ≥ 1".into()));
            }
        }
        self.augment.validate()?;
        self.train.validate()
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn noise_bank(&self) -> Result<ExternalNoiseBank> {
        let mut bank = ExternalNoiseBank::new();
        for (kind, paths) in [(NoiseKind::Pcg, &self.noise.pcg), (NoiseKind::Ecg, &self.noise.ecg)] {
            for p in paths {
                bank.add(kind, load_wav(&self.resolve(p))?)?;
            }
        }
        Ok(bank)
    }
}
