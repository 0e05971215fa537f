//! Flat `key=value` experiment configuration.
//!
//! ```text
//! # Fig.-2 style scan at a larger mutation rate
//! L=60
//! p_mut=0.01
//! p_grid=0.1,0.2,0.3
//! replicas=3
//! ```

use std::collections::HashSet;
use std::path::PathBuf;

use thiserror::Error;

use crate::lattice::{ModelParams, ParamError, Schedule};

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected key=value, got {text:?}")]
    Malformed { line: usize, text: String },
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key {key:?} given twice")]
    Duplicate { line: usize, key: String },
    #[error("{key}: cannot parse {value:?}: {reason}")]
    Invalid {
        key: String,
        value: String,
        reason: String,
    },
    #[error("{key}: {reason}")]
    Invariant { key: String, reason: String },
}

impl ConfigError {
    fn invariant(key: &str, reason: impl Into<String>) -> Self {
        Self::Invariant {
            key: key.to_string(),
            reason: reason.into(),
        }
    }

    /// The configuration key the error is about, when there is one.
    pub fn key(&self) -> Option<&str> {
        match self {
            Self::Malformed { .. } => None,
            Self::UnknownKey { key, .. }
            | Self::Duplicate { key, .. }
            | Self::Invalid { key, .. }
            | Self::Invariant { key, .. } => Some(key),
        }
    }
}

impl From<ParamError> for ConfigError {
    fn from(e: ParamError) -> Self {
        match e {
            ParamError::OutOfRange { name, .. } => ConfigError::invariant(name, e.to_string()),
            ParamError::Schedule(reason) => ConfigError::invariant("schedule", reason),
        }
    }
}

/// Default scan grid: 0.05, 0.10, ..., 0.50.
pub fn default_p_grid() -> Vec<f64> {
    (1..=10).map(|i| i as f64 * 0.05).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub model: ModelParams,
    pub seed: u64,
    pub n_sweeps: u64,
    pub relax_sweeps: u64,
    /// Sweeps per time-series row.
    pub window: u64,
    /// Overrides `model.p` when present.
    pub schedule: Option<Schedule>,
    pub replicas: usize,
    pub p_grid: Vec<f64>,
    pub out_dir: PathBuf,
    pub snapshot_every: Option<u64>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            model: ModelParams::default(),
            seed: 1,
            n_sweeps: 100_000,
            relax_sweeps: 30_000,
            window: 100,
            schedule: None,
            replicas: 1,
            p_grid: default_p_grid(),
            out_dir: PathBuf::from("out"),
            snapshot_every: None,
        }
    }
}

const KEYS: &[&str] = &[
    "L",
    "p",
    "p_mut",
    "a",
    "b",
    "fixed_learning",
    "seed",
    "n_sweeps",
    "relax_sweeps",
    "window",
    "schedule",
    "replicas",
    "p_grid",
    "out_dir",
    "snapshot_every",
];

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.parse::<T>().map_err(|e| ConfigError::Invalid {
        key: key.to_string(),
        value: value.to_string(),
        reason: e.to_string(),
    })
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>, ConfigError> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse::<f64>(key, s))
        .collect()
}

fn parse_schedule(value: &str) -> Result<Schedule, ConfigError> {
    let mut steps = Vec::new();
    for part in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (at, p) = part.split_once(':').ok_or_else(|| ConfigError::Invalid {
            key: "schedule".into(),
            value: part.to_string(),
            reason: "expected sweep:p".into(),
        })?;
        steps.push((parse::<u64>("schedule", at.trim())?, parse::<f64>("schedule", p.trim())?));
    }
    Ok(Schedule::new(steps)?)
}

impl Config {
    /// Parses a configuration document. Missing keys keep their defaults.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Config::default();
        let mut seen = HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Malformed {
                line,
                text: raw.to_string(),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: key.to_string(),
                });
            }
            if !seen.insert(key.to_string()) {
                return Err(ConfigError::Duplicate {
                    line,
                    key: key.to_string(),
                });
            }
            match key {
                "L" => cfg.model.side = parse(key, value)?,
                "p" => cfg.model.p = parse(key, value)?,
                "p_mut" => cfg.model.p_mut = parse(key, value)?,
                "a" => cfg.model.survival.a = parse(key, value)?,
                "b" => cfg.model.survival.b = parse(key, value)?,
                "fixed_learning" => cfg.model.fixed_learning = Some(parse(key, value)?),
                "seed" => cfg.seed = parse(key, value)?,
                "n_sweeps" => cfg.n_sweeps = parse(key, value)?,
                "relax_sweeps" => cfg.relax_sweeps = parse(key, value)?,
                "window" => cfg.window = parse(key, value)?,
                "schedule" => cfg.schedule = Some(parse_schedule(value)?),
                "replicas" => cfg.replicas = parse(key, value)?,
                "p_grid" => cfg.p_grid = parse_list(key, value)?,
                "out_dir" => cfg.out_dir = PathBuf::from(value),
                "snapshot_every" => cfg.snapshot_every = Some(parse(key, value)?),
                _ => unreachable!("key list and match arms disagree"),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.model.validate()?;
        if self.relax_sweeps >= self.n_sweeps {
            return Err(ConfigError::invariant(
                "relax_sweeps",
                format!(
                    "must be smaller than n_sweeps ({} >= {})",
                    self.relax_sweeps, self.n_sweeps
                ),
            ));
        }
        if self.window == 0 {
            return Err(ConfigError::invariant("window", "must be at least 1"));
        }
        if self.replicas == 0 {
            return Err(ConfigError::invariant("replicas", "must be at least 1"));
        }
        if let Some(p) = self.p_grid.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(ConfigError::invariant(
                "p_grid",
                format!("{p} is not a probability"),
            ));
        }
        if self.snapshot_every == Some(0) {
            return Err(ConfigError::invariant("snapshot_every", "must be at least 1"));
        }
        Ok(())
    }

    /// The p-schedule a single run follows.
    pub fn schedule(&self) -> Schedule {
        self.schedule
            .clone()
            .unwrap_or_else(|| Schedule::constant(self.model.p))
    }
}

pub fn load_config(text: &str) -> Result<Config, ConfigError> {
    Config::parse(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let c = load_config("").unwrap();
        assert_eq!(c, Config::default());
        assert_eq!(c.model.side, 40);
        assert_eq!(c.model.p_mut, 0.001);
        assert_eq!(c.model.survival.a, 0.05);
        assert_eq!(c.model.survival.b, 5.0);
        assert_eq!((c.n_sweeps, c.relax_sweeps, c.window), (100_000, 30_000, 100));
    }

    #[test]
    fn overrides_and_comments() {
        let c = load_config("# robustness pair\nL=60\np_mut=0.01  # tenfold\n\n").unwrap();
        assert_eq!(c.model.side, 60);
        assert_eq!(c.model.p_mut, 0.01);
    }

    #[test]
    fn unknown_key_is_named() {
        let e = load_config("Lx=40").unwrap_err();
        assert_eq!(e.key(), Some("Lx"));
        assert!(e.to_string().contains("Lx"));
    }

    #[test]
    fn bad_values_are_named() {
        assert_eq!(load_config("p=abc").unwrap_err().key(), Some("p"));
        assert_eq!(load_config("p=1.5").unwrap_err().key(), Some("p"));
        assert_eq!(load_config("L=1").unwrap_err().key(), Some("L"));
        assert_eq!(load_config("n_sweeps=0").unwrap_err().key(), Some("relax_sweeps"));
        assert_eq!(load_config("replicas=0").unwrap_err().key(), Some("replicas"));
        assert_eq!(load_config("fixed_learning=1").unwrap_err().key(), Some("fixed_learning"));
        assert_eq!(load_config("schedule=5:0.1").unwrap_err().key(), Some("schedule"));
        assert!(matches!(load_config("p").unwrap_err(), ConfigError::Malformed { line: 1, .. }));
        assert!(matches!(
            load_config("p=0.1\np=0.2").unwrap_err(),
            ConfigError::Duplicate { line: 2, .. }
        ));
    }

    #[test]
    fn lists_and_schedules() {
        let c = load_config("p_grid=0.1, 0.4\nschedule=0:0.1,8000:0.98\nseed=7").unwrap();
        assert_eq!(c.p_grid, vec![0.1, 0.4]);
        let s = c.schedule();
        assert_eq!(s.steps(), &[(0, 0.1), (8000, 0.98)]);
        assert_eq!(c.seed, 7);
        assert_eq!(load_config("p=0.2").unwrap().schedule(), Schedule::constant(0.2));
    }
}
