use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::adversary::{BlindingConfig, CountermeasureConfig, SiphoningConfig};
use crate::channel::{ChannelParams, DetectorModel, SourceParams};
use crate::error::{Error, Result};
use crate::postproc::DistillParams;
use crate::protocol::ProtocolConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    #[default]
    Honest,
    Blinding,
    Siphoning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    AttenuationDb,
    DistanceKm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: SweepAxis,
    pub points: Vec<f64>,
    /// Candidate intensities; a log grid over `[mu_min, mu_max]` when empty.
    pub mu_grid: Vec<f64>,
    pub mu_min: f64,
    pub mu_max: f64,
    pub mu_points: usize,
    /// Sifted bits simulated per candidate intensity; the bound is evaluated
    /// on the pilot tallies scaled up to `block_size`.
    pub pilot_sifted: u64,
    /// Leak assumed during the search, as a multiple of `n·h₂(QBER)`.
    pub pilot_ec_efficiency: f64,
    /// Write each point's final session next to the CSV.
    pub save_sessions: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            axis: SweepAxis::AttenuationDb,
            points: vec![0.28, 2.8, 6.8],
            mu_grid: Vec::new(),
            mu_min: 1e-3,
            mu_max: 0.3,
            mu_points: 12,
            pilot_sifted: 200_000,
            pilot_ec_efficiency: 1.1,
            save_sessions: false,
        }
    }
}

impl SweepConfig {
    pub fn grid(&self) -> Vec<f64> {
        if self.mu_grid.is_empty() {
            crate::finite_key::log_grid(self.mu_min, self.mu_max, self.mu_points)
        } else {
            self.mu_grid.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("ddiqkd-out") }
    }
}

/// Everything one experiment needs, read from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub seed: u64,
    /// Sifted bits per distilled block.
    pub block_size: u64,
    pub source: SourceParams,
    pub channel: ChannelParams,
    /// Model shared by all four detectors.
    pub detector: DetectorModel,
    pub protocol: ProtocolConfig,
    pub distill: DistillParams,
    pub siphoning: SiphoningConfig,
    pub blinding: BlindingConfig,
    pub countermeasure: CountermeasureConfig,
    pub sweep: SweepConfig,
    pub output: OutputConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::Honest,
            seed: 1,
            block_size: 10_000_000,
            source: SourceParams::default(),
            channel: ChannelParams::default(),
            detector: DetectorModel::default(),
            protocol: ProtocolConfig::default(),
            distill: DistillParams::default(),
            siphoning: SiphoningConfig::default(),
            blinding: BlindingConfig::default(),
            countermeasure: CountermeasureConfig::default(),
            sweep: SweepConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn detectors(&self) -> [DetectorModel; 4] {
        [self.detector; 4]
    }

    pub fn validate(&self) -> Result<()> {
        self.source.validate()?;
        self.channel.validate()?;
        self.detector.validate()?;
        self.protocol.validate()?;
        self.distill.cascade.validate()?;
        self.siphoning.validate()?;
        self.blinding.validate()?;
        for (name, e) in [("eps_sec", self.distill.eps_sec), ("eps_cor", self.distill.eps_cor)] {
            if !(e > 0.0 && e < 1.0) {
                return Err(Error::Config(format!("distill.{name} must lie in (0, 1), got {e}")));
            }
        }
        if self.block_size == 0 {
            return Err(Error::Config("block_size must be positive".into()));
        }
        let s = &self.sweep;
        if s.points.is_empty() {
            return Err(Error::Config("sweep.points must not be empty".into()));
        }
        if s.points.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::Config("sweep points must be finite and >= 0".into()));
        }
        let grid = s.grid();
        if grid.is_empty() || grid.iter().any(|m| !(*m > 0.0 && m.is_finite())) {
            return Err(Error::Config("mu grid must be nonempty with positive entries".into()));
        }
        if s.pilot_sifted == 0 || !(s.pilot_ec_efficiency >= 1.0) {
            return Err(Error::Config("sweep.pilot_sifted must be > 0 and pilot_ec_efficiency >= 1".into()));
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}
