//! Experiment configuration: a flat `key=value` file.
//!
//! Required keys are `dims`, `n`, `eps`, `mechanisms`, `trials`, `seed`,
//! `sampler` and `output`; `delta` is required when `gaussian` is listed.
//! Lists are comma separated, `#` starts a comment. Optional tuning keys:
//! `walk_beta`, `walk_steps`, `walk_burn_in`, `mcmc_steps`,
//! `covariance_samples`, `volume_trials`, `database`.

use std::path::PathBuf;
use std::str::FromStr;

use knorm_core::geometry::{SamplerChoice, WalkSettings};
use knorm_core::{Error, MechanismKind, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dims: Vec<usize>,
    pub n: usize,
    pub eps: f64,
    pub delta: f64,
    pub mechanisms: Vec<MechanismKind>,
    pub trials: u64,
    pub seed: u64,
    pub sampler: SamplerChoice,
    pub output: PathBuf,
    pub walk: WalkSettings,
    pub mcmc_steps: Option<u64>,
    pub covariance_samples: Option<usize>,
    pub volume_trials: u64,
    /// Database file overriding the default `x = 0`.
    pub database: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dims: Vec::new(),
            n: 0,
            eps: 1.0,
            delta: 0.0,
            mechanisms: Vec::new(),
            trials: 0,
            seed: 0,
            sampler: SamplerChoice::Rejection,
            output: PathBuf::from("results.csv"),
            walk: WalkSettings::default(),
            mcmc_steps: None,
            covariance_samples: None,
            volume_trials: 100_000,
            database: None,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Parse(format!("bad value {value:?} for key {key}")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_value(key, s))
        .collect()
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Parse(format!("line {}: expected key=value", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "dims" => cfg.dims = parse_list(key, value)?,
                "n" => cfg.n = parse_value(key, value)?,
                "eps" => cfg.eps = parse_value(key, value)?,
                "delta" => cfg.delta = parse_value(key, value)?,
                "mechanisms" => cfg.mechanisms = parse_list(key, value)?,
                "trials" => cfg.trials = parse_value(key, value)?,
                "seed" => cfg.seed = parse_value(key, value)?,
                "sampler" => cfg.sampler = parse_value(key, value)?,
                "output" => cfg.output = PathBuf::from(value),
                "walk_beta" => cfg.walk.beta = Some(parse_value(key, value)?),
                "walk_steps" => cfg.walk.steps = Some(parse_value(key, value)?),
                "walk_burn_in" => cfg.walk.burn_in = Some(parse_value(key, value)?),
                "mcmc_steps" => cfg.mcmc_steps = Some(parse_value(key, value)?),
                "covariance_samples" => cfg.covariance_samples = Some(parse_value(key, value)?),
                "volume_trials" => cfg.volume_trials = parse_value(key, value)?,
                "database" => cfg.database = Some(PathBuf::from(value)),
                other => return Err(Error::Parse(format!("unknown key {other:?}"))),
            }
            seen.push(key.to_string());
        }
        for required in ["dims", "n", "eps", "mechanisms", "trials", "seed", "sampler", "output"] {
            if !seen.iter().any(|k| k == required) {
                return Err(Error::Parse(format!("missing key {required}")));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be >= 1".into()));
        }
        if self.dims.is_empty() || self.mechanisms.is_empty() {
            return Err(Error::InvalidParameter("dims and mechanisms must be non-empty".into()));
        }
        if let Some(&d) = self.dims.iter().find(|&&d| d == 0 || d > self.n) {
            return Err(Error::InvalidDimensions(format!(
                "need 1 <= d <= n, got d = {d}, n = {}",
                self.n
            )));
        }
        if !(self.eps > 0.0) {
            return Err(Error::InvalidParameter(format!("eps must be > 0, got {}", self.eps)));
        }
        let needs_delta = self.mechanisms.contains(&MechanismKind::Gaussian);
        if needs_delta && !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "gaussian needs 0 < delta < 1, got {}",
                self.delta
            )));
        }
        if !(self.delta >= 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidParameter(format!("delta must lie in [0, 1), got {}", self.delta)));
        }
        if self.volume_trials == 0 {
            return Err(Error::InvalidParameter("volume_trials must be >= 1".into()));
        }
        Ok(())
    }

    /// The JSON mirror written next to the CSV output.
    pub fn json_output(&self) -> PathBuf {
        self.output.with_extension("json")
    }
}
