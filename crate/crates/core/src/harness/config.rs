use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::ChannelConfig;
use crate::error::{IqiError, Result};
use crate::estimation::{Method, SegmentationPlan};
use crate::impairment::{iqi_params, InterferenceModulation, IqiParams};
use crate::waveforms::FrameConfig;

pub const DEFAULT_TRIALS: usize = 2000;
pub const DEFAULT_SEED: u64 = 1;

/// How each trial's output SIR is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SirMetric {
    /// From the estimate and the true coefficients, at the nominal SIR_in.
    ClosedForm,
    /// Component-wise compensation of the simulated data spans.
    Empirical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Recipe {
    /// SNR 35 dB, SIR_in in {0, -10} dB, 1 and 10 frames.
    Fig3,
    /// SIR_in -10 dB, 10 frames, SNR in {15, 25, 35} dB.
    Fig4,
}

impl std::str::FromStr for Recipe {
    type Err = IqiError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "fig3" => Ok(Recipe::Fig3),
            "fig4" => Ok(Recipe::Fig4),
            other => Err(IqiError::InvalidConfig(format!("unknown recipe '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// `f64::INFINITY` disables receiver noise.
    #[serde(with = "db_list")]
    pub snr_db: Vec<f64>,
    pub sir_in_db: Vec<f64>,
    pub frames: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub frame: FrameConfig,
    pub channel: ChannelConfig,
    pub gain_imbalance_db: f64,
    pub theta_deg: f64,
    pub segments: usize,
    pub methods: Vec<Method>,
    pub interference: InterferenceModulation,
    pub sir_metric: SirMetric,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            snr_db: vec![35.0],
            sir_in_db: vec![0.0],
            frames: vec![1],
            trials: DEFAULT_TRIALS,
            seed: DEFAULT_SEED,
            frame: FrameConfig::default(),
            channel: ChannelConfig::default(),
            gain_imbalance_db: 1.0,
            theta_deg: 2.0,
            segments: 1,
            methods: Method::ALL.to_vec(),
            interference: InterferenceModulation::Qam64,
            sir_metric: SirMetric::ClosedForm,
        }
    }
}

impl SimConfig {
    pub fn recipe(recipe: Recipe) -> Self {
        let mut cfg = Self::default();
        cfg.apply_recipe(recipe);
        cfg
    }

    /// Overwrites the sweep axes and method list with a preset.
    pub fn apply_recipe(&mut self, recipe: Recipe) {
        match recipe {
            Recipe::Fig3 => {
                self.snr_db = vec![35.0];
                self.sir_in_db = vec![0.0, -10.0];
                self.frames = vec![1, 10];
            }
            Recipe::Fig4 => {
                self.snr_db = vec![15.0, 25.0, 35.0];
                self.sir_in_db = vec![-10.0];
                self.frames = vec![10];
            }
        }
        self.methods = vec![Method::SubspaceProduct, Method::Blind];
    }

    pub fn truth(&self) -> IqiParams {
        iqi_params(self.gain_imbalance_db, self.theta_deg.to_radians())
    }

    pub fn plan(&self) -> Result<SegmentationPlan> {
        Ok(
            SegmentationPlan::new(self.frame.pilot_len, self.segments)?
                .with_coherence_len(self.channel.coherence_len()),
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(IqiError::InvalidConfig("trials must be at least 1".into()));
        }
        if self.snr_db.is_empty() || self.sir_in_db.is_empty() || self.frames.is_empty() {
            return Err(IqiError::InvalidConfig(
                "SNR, SIR_in and frame lists must be non-empty".into(),
            ));
        }
        if self.snr_db.iter().any(|v| v.is_nan() || *v == f64::NEG_INFINITY) {
            return Err(IqiError::InvalidConfig("SNR values must be finite or +inf".into()));
        }
        if self.sir_in_db.iter().any(|v| !v.is_finite()) {
            return Err(IqiError::InvalidConfig("SIR_in values must be finite".into()));
        }
        if self.frames.contains(&0) {
            return Err(IqiError::InvalidConfig("frame counts must be positive".into()));
        }
        if !self.gain_imbalance_db.is_finite() || !self.theta_deg.is_finite() {
            return Err(IqiError::InvalidConfig("imbalance parameters must be finite".into()));
        }
        self.frame.validate()?;
        self.channel.validate()?;
        self.plan()?;
        Ok(())
    }

    /// Applies one `key = value` setting. Keys match the long CLI flags
    /// without the leading dashes; lists are comma separated.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        match key.as_str() {
            "snr-db" => self.snr_db = parse_list(value, parse_snr)?,
            "sir-in-db" => self.sir_in_db = parse_list(value, parse_num)?,
            "frames" => self.frames = parse_list(value, parse_num)?,
            "trials" => self.trials = parse_num(value)?,
            "seed" => self.seed = parse_num(value)?,
            "gain-imbalance-db" => self.gain_imbalance_db = parse_num(value)?,
            "theta-deg" => self.theta_deg = parse_num(value)?,
            "pilot-len" => self.frame.pilot_len = parse_num(value)?,
            "data-len" => self.frame.data_len = parse_num(value)?,
            "zc-root" => self.frame.zc_root = parse_num(value)?,
            "segments" => self.segments = parse_num(value)?,
            "doppler-hz" => self.channel.doppler_hz = parse_num(value)?,
            "sample-time-us" => self.channel.sample_time = parse_num::<f64>(value)? * 1e-6,
            "oscillators" => self.channel.oscillators = parse_num(value)?,
            "methods" => self.methods = parse_list(value, |v| v.parse::<Method>())?,
            "interference" => {
                self.interference = match value {
                    "qam64" => InterferenceModulation::Qam64,
                    "gaussian" => InterferenceModulation::Gaussian,
                    other => return Err(IqiError::InvalidConfig(format!("unknown interference model '{other}'"))),
                }
            }
            "sir-metric" => {
                self.sir_metric = match value {
                    "closed-form" => SirMetric::ClosedForm,
                    "empirical" => SirMetric::Empirical,
                    other => return Err(IqiError::InvalidConfig(format!("unknown SIR metric '{other}'"))),
                }
            }
            "recipe" => self.apply_recipe(value.parse()?),
            other => return Err(IqiError::InvalidConfig(format!("unknown setting '{other}'"))),
        }
        Ok(())
    }
}

fn parse_num<T: std::str::FromStr>(v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| IqiError::InvalidConfig(format!("cannot parse '{v}'")))
}

/// Accepts plain numbers or `inf` for a noise-free run.
pub fn parse_snr(v: &str) -> Result<f64> {
    match v.trim().to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" | "noise-free" => Ok(f64::INFINITY),
        other => parse_num(other),
    }
}

fn parse_list<T>(v: &str, item: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    let v = v.trim().trim_start_matches('[').trim_end_matches(']');
    if v.trim().is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|s| item(s.trim().trim_matches('"'))).collect()
}

/// Reads a TOML key-value file into ordered `(key, value)` settings for
/// [`SimConfig::set`]. Arrays become comma-separated lists. Keys the
/// simulator does not know (for example `output`) are returned as well.
pub fn load_config_pairs(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path).map_err(|source| IqiError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config_pairs(&text).map_err(|message| IqiError::Format {
        path: path.to_path_buf(),
        message,
    })
}

pub fn parse_config_pairs(text: &str) -> std::result::Result<Vec<(String, String)>, String> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| e.to_string())?;
    table.into_iter().map(|(k, v)| Ok((k, value_to_setting(&v)?))).collect()
}

fn value_to_setting(v: &toml::Value) -> std::result::Result<String, String> {
    Ok(match v {
        toml::Value::String(s) => s.clone(),
        toml::Value::Integer(i) => i.to_string(),
        toml::Value::Float(f) => f.to_string(),
        toml::Value::Boolean(b) => b.to_string(),
        toml::Value::Array(items) => items
            .iter()
            .map(value_to_setting)
            .collect::<std::result::Result<Vec<_>, _>>()?
            .join(","),
        other => return Err(format!("unsupported value {other}")),
    })
}

/// Serializes dB values so that infinities survive JSON as strings.
pub(crate) mod db_list {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::super::export::Db;

    pub fn serialize<S: Serializer>(values: &[f64], s: S) -> Result<S::Ok, S::Error> {
        values.iter().map(|v| Db(*v)).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Ok(Vec::<Db>::deserialize(d)?.into_iter().map(|v| v.0).collect())
    }
}
