//! Run configuration, read from TOML. Relative paths resolve against the
//! config file's directory.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use adl_core::metrics::{Burden, LossWeights};
use adl_core::policies::PolicySpec;
use adl_core::scenario::Scenario;
use serde::{Deserialize, Serialize};

use crate::csv_io::load_scenario;
use crate::error::{LabError, Result};
use crate::generate::GeneratorSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScenarioSource {
    Replay { path: PathBuf },
    Generated(GeneratorSpec),
}

impl ScenarioSource {
    pub fn load(&self, seed: u64) -> Result<Scenario> {
        match self {
            ScenarioSource::Replay { path } => load_scenario(path),
            ScenarioSource::Generated(spec) => spec.build(seed),
        }
    }
}

fn default_out() -> PathBuf {
    PathBuf::from("results")
}

fn default_lambdas() -> Vec<f64> {
    vec![1.0]
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    pub scenario: ScenarioSource,
    /// `lambda_fair` here is replaced by each value of the sweep.
    #[serde(default)]
    pub weights: LossWeights,
    /// Fairness weights to sweep; one results file per value.
    #[serde(default = "default_lambdas")]
    pub lambda_fair: Vec<f64>,
    /// Markout horizons to evaluate; all horizons in the scenario when absent.
    #[serde(default)]
    pub delta: Option<Vec<f64>>,
    #[serde(default)]
    pub burden: Burden,
    /// Best fixed allocation in hindsight, when the winner set is constant.
    #[serde(default = "yes")]
    pub static_regret: bool,
    #[serde(rename = "policy")]
    pub policies: Vec<PolicySpec>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<RunConfig> {
        toml::from_str(text).map_err(|e| LabError::Config(e.to_string()))
    }

    /// Reads, resolves relative paths and validates.
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        let mut cfg = RunConfig::from_toml(&text).map_err(|e| match e {
            LabError::Config(m) => LabError::File { path: path.into(), message: m },
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve(&mut self, base: &Path) {
        if self.out.is_relative() {
            self.out = base.join(&self.out);
        }
        if let ScenarioSource::Replay { path } = &mut self.scenario {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.policies.is_empty() {
            return Err(LabError::Config("policy library is empty".into()));
        }
        let mut names = BTreeSet::new();
        for p in &self.policies {
            if !names.insert(p.name.as_str()) {
                return Err(LabError::Config(format!("duplicate policy name `{}`", p.name)));
            }
            p.validate().map_err(|e| LabError::Config(e.to_string()))?;
        }
        self.weights.validate().map_err(|e| LabError::Config(e.to_string()))?;
        if self.lambda_fair.is_empty() || self.lambda_fair.iter().any(|l| !(*l >= 0.0 && l.is_finite())) {
            return Err(LabError::Config("lambda_fair needs at least one non-negative value".into()));
        }
        if let Some(d) = &self.delta {
            if d.is_empty() || d.iter().any(|v| !v.is_finite()) {
                return Err(LabError::Config("delta needs at least one finite value".into()));
            }
        }
        Ok(())
    }

    /// Loss weights for one sweep value.
    pub fn weights_for(&self, lambda: f64) -> LossWeights {
        LossWeights { lambda_fair: lambda, lambda_empirical: lambda, ..self.weights }
    }
}
