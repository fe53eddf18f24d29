//! Run configuration: flat `key = value` text with optional `[section]`
//! headers and `#` comments.
//!
//! ```text
//! [crystal]
//! thickness_m = 4e-3
//! boost.k_sigma = 0.05   # dotted keys work anywhere
//! ```
//!
//! Keys inside a section are prefixed with the section name. Every key has
//! a default, so an empty file is a complete configuration.

use core::fmt;
use std::collections::BTreeSet;

use cowvad_core::{
    BeamSpec, BoostSpec, CrystalSpec, Error as CoreError, PhaseModel, Regime, RegimeThresholds, SelectionSpec, Setup,
    DEFAULT_DTHETA, P_FLOOR,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl OutputFormat {
    pub fn name(self) -> &'static str {
        match self {
            Self::Csv => "csv",
            Self::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub crystal: CrystalSpec,
    /// Kept alongside `beam` so the echo reproduces the input exactly.
    pub wavelength: f64,
    pub beam: BeamSpec,
    pub selection: SelectionSpec,
    pub boost: BoostSpec,
    pub thresholds: RegimeThresholds,
    pub p_floor: f64,
    pub dtheta: f64,
    pub format: OutputFormat,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            crystal: CrystalSpec::default(),
            wavelength: BeamSpec::DEFAULT_WAVELENGTH,
            beam: BeamSpec::default(),
            selection: SelectionSpec::default(),
            boost: BoostSpec::default(),
            thresholds: RegimeThresholds::default(),
            p_floor: P_FLOOR,
            dtheta: DEFAULT_DTHETA,
            format: OutputFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` given twice")]
    Duplicate { line: usize, key: String },
    #[error("line {line}: `{key}`: cannot parse `{value}`")]
    BadValue { line: usize, key: String, value: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

pub const KEYS: &[&str] = &[
    "crystal.thickness_m",
    "crystal.n_o",
    "crystal.n_e",
    "crystal.n_air",
    "crystal.phase_model",
    "beam.wavelength_m",
    "beam.sigma_m",
    "selection.epsilon_rad",
    "selection.regime",
    "boost.k_sigma",
    "thresholds.ratio",
    "thresholds.cap",
    "thresholds.strong",
    "tolerances.p_floor",
    "tolerances.dtheta",
    "output.format",
];

fn number(line: usize, key: &str, value: &str) -> Result<f64, ConfigError> {
    value
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| ConfigError::BadValue {
            line,
            key: key.into(),
            value: value.into(),
        })
}

fn invalid(e: CoreError) -> ConfigError {
    match e {
        CoreError::InvalidParameter(what) => ConfigError::Invalid(what.into()),
        other => ConfigError::Invalid(other.to_string()),
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    let mut epsilon = 0.0;
    let mut regime = Regime::Coherency;
    let mut k_sigma = 0.0;
    let mut sigma = BeamSpec::DEFAULT_SIGMA;
    let mut section = String::new();
    let mut seen = BTreeSet::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| ConfigError::Syntax {
                line,
                message: "unterminated section header".into(),
            })?;
            section = name.trim().to_string();
            if section.is_empty() || section.contains(char::is_whitespace) {
                return Err(ConfigError::Syntax {
                    line,
                    message: "bad section name".into(),
                });
            }
            continue;
        }
        let (k, v) = content.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line,
            message: "expected `key = value`".into(),
        })?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || v.is_empty() {
            return Err(ConfigError::Syntax {
                line,
                message: "expected `key = value`".into(),
            });
        }
        let key = if section.is_empty() || k.contains('.') {
            k.to_string()
        } else {
            format!("{section}.{k}")
        };
        if !KEYS.contains(&key.as_str()) {
            return Err(ConfigError::UnknownKey { line, key });
        }
        if !seen.insert(key.clone()) {
            return Err(ConfigError::Duplicate { line, key });
        }
        match key.as_str() {
            "crystal.thickness_m" => cfg.crystal.thickness = number(line, &key, v)?,
            "crystal.n_o" => cfg.crystal.n_o = number(line, &key, v)?,
            "crystal.n_e" => cfg.crystal.n_e = number(line, &key, v)?,
            "crystal.n_air" => cfg.crystal.n_air = number(line, &key, v)?,
            "crystal.phase_model" => {
                cfg.crystal.phase_model = match v {
                    "difference" => PhaseModel::Difference,
                    "ratio" => PhaseModel::Ratio,
                    _ => {
                        return Err(ConfigError::BadValue {
                            line,
                            key,
                            value: v.into(),
                        })
                    }
                }
            }
            "beam.wavelength_m" => cfg.wavelength = number(line, &key, v)?,
            "beam.sigma_m" => sigma = number(line, &key, v)?,
            "selection.epsilon_rad" => epsilon = number(line, &key, v)?,
            "selection.regime" => {
                regime = match v {
                    "coherency" => Regime::Coherency,
                    "anti-coherency" | "anti_coherency" => Regime::AntiCoherency,
                    _ => {
                        return Err(ConfigError::BadValue {
                            line,
                            key,
                            value: v.into(),
                        })
                    }
                }
            }
            "boost.k_sigma" => k_sigma = number(line, &key, v)?,
            "thresholds.ratio" => cfg.thresholds.separation = number(line, &key, v)?,
            "thresholds.cap" => cfg.thresholds.cap = number(line, &key, v)?,
            "thresholds.strong" => cfg.thresholds.strong = number(line, &key, v)?,
            "tolerances.p_floor" => cfg.p_floor = number(line, &key, v)?,
            "tolerances.dtheta" => cfg.dtheta = number(line, &key, v)?,
            "output.format" => {
                cfg.format = match v {
                    "csv" => OutputFormat::Csv,
                    "json" => OutputFormat::Json,
                    _ => {
                        return Err(ConfigError::BadValue {
                            line,
                            key,
                            value: v.into(),
                        })
                    }
                }
            }
            _ => unreachable!("key list and match arms agree"),
        }
    }

    cfg.crystal.validate().map_err(invalid)?;
    cfg.beam = BeamSpec::from_wavelength(cfg.wavelength, sigma).map_err(invalid)?;
    cfg.selection = SelectionSpec::new(epsilon, regime).map_err(invalid)?;
    cfg.boost = BoostSpec::new(k_sigma).map_err(invalid)?;
    let t = &cfg.thresholds;
    if !(t.separation > 0.0 && t.cap > 0.0 && t.strong > 0.0) {
        return Err(ConfigError::Invalid("thresholds > 0".into()));
    }
    if !(cfg.p_floor >= 0.0 && cfg.p_floor < 1.0) {
        return Err(ConfigError::Invalid("0 <= p_floor < 1".into()));
    }
    if !(cfg.dtheta > 0.0) {
        return Err(ConfigError::Invalid("dtheta > 0".into()));
    }
    Ok(cfg)
}

impl RunConfig {
    pub fn setup(&self) -> Setup {
        Setup {
            crystal: self.crystal,
            beam: self.beam,
            selection: self.selection,
            boost: self.boost,
            p_floor: self.p_floor,
        }
    }

    /// Fully resolved `(key, value)` pairs in [`KEYS`] order. The values
    /// print every number exactly, so the echo parses back to `self`.
    pub fn echo(&self) -> Vec<(&'static str, String)> {
        let c = &self.crystal;
        let phase = match c.phase_model {
            PhaseModel::Difference => "difference",
            PhaseModel::Ratio => "ratio",
        };
        let regime = match self.selection.regime() {
            Regime::Coherency => "coherency",
            Regime::AntiCoherency => "anti-coherency",
        };
        let values = [
            c.thickness.to_string(),
            c.n_o.to_string(),
            c.n_e.to_string(),
            c.n_air.to_string(),
            phase.to_string(),
            self.wavelength.to_string(),
            self.beam.sigma.to_string(),
            self.selection.epsilon().to_string(),
            regime.to_string(),
            self.boost.k_sigma.to_string(),
            self.thresholds.separation.to_string(),
            self.thresholds.cap.to_string(),
            self.thresholds.strong.to_string(),
            self.p_floor.to_string(),
            self.dtheta.to_string(),
            self.format.name().to_string(),
        ];
        KEYS.iter().copied().zip(values).collect()
    }
}

impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.echo() {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}
