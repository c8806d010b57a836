//! Run configuration, read from TOML.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instances::InstanceSpec;
use crate::mdp::{load_mdp, TabularMdp};
use crate::stopping::BoundMode;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// Diameter estimation followed by the span-bound planner.
    Dfe,
    /// Span-bound planner with a given (or exact) span bound.
    Planner,
    /// Uniform sampling with adaptive stopping.
    Stopping,
    /// Diameter estimation alone.
    Diameter,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Dfe => "dfe",
            Algorithm::Planner => "planner",
            Algorithm::Stopping => "stopping",
            Algorithm::Diameter => "diameter",
        }
    }
}

fn default_seeds() -> u64 {
    10
}
fn default_eps() -> Vec<f64> {
    vec![0.1]
}
fn default_delta() -> f64 {
    0.1
}
fn default_c2() -> f64 {
    1.0
}
fn default_max_rounds() -> u64 {
    1_000_000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_algorithm")]
    pub algorithm: Algorithm,
    /// Number of seeds; trials use `seed_start .. seed_start + seeds`.
    #[serde(default = "default_seeds")]
    pub seeds: u64,
    #[serde(default)]
    pub seed_start: u64,
    #[serde(default = "default_eps")]
    pub eps: Vec<f64>,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_c2")]
    pub c2: f64,
    /// Span bound for the planner; the exact optimal span when absent.
    #[serde(default)]
    pub h_bar: Option<f64>,
    #[serde(default)]
    pub bound_mode: BoundMode,
    #[serde(default)]
    pub check_period: Option<u64>,
    #[serde(default = "default_max_rounds")]
    pub max_rounds: u64,
    /// Let the planner phase reuse diameter-phase samples.
    #[serde(default)]
    pub reuse_samples: bool,
    /// Redraw samples every diameter round instead of accumulating.
    #[serde(default)]
    pub fresh_samples: bool,
    #[serde(default)]
    pub instance: Option<InstanceSpec>,
    /// Model file (JSON), relative to the config file.
    #[serde(default)]
    pub mdp_file: Option<PathBuf>,
}

fn default_algorithm() -> Algorithm {
    Algorithm::Dfe
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config; a relative `mdp_file` is resolved against the config's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = ExperimentConfig::from_toml(&text)?;
        if let Some(file) = cfg.mdp_file.as_mut() {
            if file.is_relative() {
                if let Some(dir) = path.parent() {
                    *file = dir.join(&*file);
                }
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.instance.is_some() == self.mdp_file.is_some() {
            return Err(Error::Config("give exactly one of [instance] or mdp_file".into()));
        }
        if self.eps.is_empty() || self.eps.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
            return Err(Error::Config("eps values must lie in (0, 1]".into()));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Config(format!("delta = {} must lie in (0, 1)", self.delta)));
        }
        if !(self.c2 > 0.0) {
            return Err(Error::Config("c2 must be positive".into()));
        }
        if self.check_period == Some(0) {
            return Err(Error::Config("check_period must be at least 1".into()));
        }
        Ok(())
    }

    /// Builds the model and a label for result files.
    pub fn build_instance(&self) -> Result<(TabularMdp, String)> {
        match (&self.instance, &self.mdp_file) {
            (Some(spec), _) => Ok((spec.build()?, spec.label())),
            (None, Some(path)) => {
                let label = path
                    .file_name()
                    .map(|f| format!("FILE[{}]", f.to_string_lossy()))
                    .unwrap_or_else(|| "FILE".into());
                Ok((load_mdp(path)?, label))
            }
            (None, None) => Err(Error::Config("no instance given".into())),
        }
    }

    pub fn seed_list(&self) -> Vec<u64> {
        (self.seed_start..self.seed_start + self.seeds).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_config() {
        let cfg = ExperimentConfig::from_toml(
            "algorithm = \"stopping\"\nseeds = 3\neps = [0.2]\n[instance]\nfamily = \"MR\"\nr = 0.4\np = 0.5\n",
        )
        .unwrap();
        assert_eq!(cfg.algorithm, Algorithm::Stopping);
        assert_eq!(cfg.seed_list(), vec![0, 1, 2]);
        assert_eq!(cfg.instance, Some(InstanceSpec::Mr { r: 0.4, p: 0.5 }));
    }

    #[test]
    fn rejects_unknown_keys_and_missing_instance() {
        assert!(ExperimentConfig::from_toml("seeds = 3\n").is_err());
        assert!(ExperimentConfig::from_toml("sedes = 3\n[instance]\nfamily = \"MR\"\nr = 0.4\np = 0.5\n").is_err());
    }
}
