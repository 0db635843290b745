//! Experiment configuration: a JSON file whose fields may be overridden by flags.

use std::fs;
use std::path::{Path, PathBuf};

use ecosim_core::increments::{IncrementLaw, LawSpec};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const DEFAULT_N: u64 = 10_000;
pub const DEFAULT_REPLICAS: usize = 100;
pub const DEFAULT_CELLS: usize = ecosim_core::limitproc::DEFAULT_CELLS;
pub const DEFAULT_LIMIT_SAMPLES: usize = 10_000;

/// Fields as they appear in a config file; all optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub experiment: Option<String>,
    pub law: Option<LawSpec>,
    pub n: Option<u64>,
    pub replicas: Option<usize>,
    pub seed: Option<u64>,
    pub f_grid: Option<Vec<f64>>,
    pub t_grid: Option<Vec<f64>>,
    pub f_c: Option<f64>,
    pub joint_f: Option<f64>,
    pub m: Option<usize>,
    pub limit_samples: Option<usize>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
}

impl ConfigFile {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| CliError::Json {
            what: path.display().to_string(),
            source,
        })
    }

    /// Fields set in `other` replace those in `self`.
    pub fn merge(self, other: ConfigFile) -> ConfigFile {
        ConfigFile {
            experiment: other.experiment.or(self.experiment),
            law: other.law.or(self.law),
            n: other.n.or(self.n),
            replicas: other.replicas.or(self.replicas),
            seed: other.seed.or(self.seed),
            f_grid: other.f_grid.or(self.f_grid),
            t_grid: other.t_grid.or(self.t_grid),
            f_c: other.f_c.or(self.f_c),
            joint_f: other.joint_f.or(self.joint_f),
            m: other.m.or(self.m),
            limit_samples: other.limit_samples.or(self.limit_samples),
            threads: other.threads.or(self.threads),
            out: other.out.or(self.out),
        }
    }
}

/// A validated experiment description.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub law: LawSpec,
    pub n: u64,
    pub replicas: usize,
    pub seed: u64,
    pub f_grid: Vec<f64>,
    pub t_grid: Vec<f64>,
    /// Replaces the law's critical fitness when set.
    pub f_c: Option<f64>,
    /// Fitness level of the first joint coordinate; defaults to `(1 + f_c) / 2`.
    pub joint_f: Option<f64>,
    pub m: usize,
    pub limit_samples: usize,
    /// Worker threads; never affects results.
    #[serde(skip)]
    pub threads: Option<usize>,
    #[serde(skip)]
    pub out: PathBuf,
}

fn default_f_grid() -> Vec<f64> {
    (0..=20).map(|k| k as f64 / 20.0).collect()
}

fn check_grid(name: &str, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(CliError::Config(format!("{name} is empty")));
    }
    if grid.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(CliError::Config(format!("{name} must lie in [0, 1]")));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::Config(format!("{name} must be strictly ascending")));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn resolve(file: ConfigFile) -> Result<Self> {
        let law = file
            .law
            .ok_or_else(|| CliError::Config("no increment law given (use --law or a config file)".into()))?;
        let cfg = ExperimentConfig {
            experiment: file.experiment.unwrap_or_else(|| "run".into()),
            law,
            n: file.n.unwrap_or(DEFAULT_N),
            replicas: file.replicas.unwrap_or(DEFAULT_REPLICAS),
            seed: file.seed.unwrap_or(0),
            f_grid: file.f_grid.unwrap_or_else(default_f_grid),
            t_grid: file.t_grid.unwrap_or_else(|| vec![0.25, 0.5, 1.0]),
            f_c: file.f_c,
            joint_f: file.joint_f,
            m: file.m.unwrap_or(DEFAULT_CELLS),
            limit_samples: file.limit_samples.unwrap_or(DEFAULT_LIMIT_SAMPLES),
            threads: file.threads,
            out: file.out.unwrap_or_else(|| PathBuf::from("out")),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.replicas == 0 {
            return Err(CliError::Config("replicas must be at least 1".into()));
        }
        check_grid("f_grid", &self.f_grid)?;
        check_grid("t_grid", &self.t_grid)?;
        if !(self.m >= 2 && self.m.is_power_of_two()) {
            return Err(CliError::Config(format!("m = {} is not a power of two >= 2", self.m)));
        }
        if self.limit_samples < 2 {
            return Err(CliError::Config("limit_samples must be at least 2".into()));
        }
        if self.threads == Some(0) {
            return Err(CliError::Config("threads must be at least 1".into()));
        }
        if let Some(f_c) = self.f_c {
            if !(0.0..1.0).contains(&f_c) {
                return Err(CliError::Config(format!("f_c = {f_c} outside [0, 1)")));
            }
        }
        if let Some(f) = self.joint_f {
            if !(0.0..=1.0).contains(&f) {
                return Err(CliError::Config(format!("joint_f = {f} outside [0, 1]")));
            }
        }
        IncrementLaw::from_spec(&self.law)?;
        Ok(())
    }

    pub fn increment_law(&self) -> Result<IncrementLaw> {
        Ok(IncrementLaw::from_spec(&self.law)?)
    }
}

/// Parses `--law`: inline JSON, or the path of a JSON file.
pub fn parse_law_arg(arg: &str) -> Result<LawSpec> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        fs::read_to_string(arg).map_err(|source| CliError::Read {
            path: PathBuf::from(arg),
            source,
        })?
    };
    serde_json::from_str(&text).map_err(|source| CliError::Json {
        what: "--law".into(),
        source,
    })
}

/// Parses `--fgrid 0.5,0.75,1`.
pub fn parse_grid_arg(arg: &str) -> Result<Vec<f64>> {
    arg.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Config(format!("bad grid value {s:?}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_point() -> LawSpec {
        parse_law_arg(r#"{"table": {"1": "2/3", "-1": "1/3"}}"#).unwrap()
    }

    #[test]
    fn flags_override_file() {
        let file = ConfigFile {
            law: Some(two_point()),
            n: Some(10),
            replicas: Some(3),
            ..ConfigFile::default()
        };
        let flags = ConfigFile {
            n: Some(20),
            ..ConfigFile::default()
        };
        let cfg = ExperimentConfig::resolve(file.merge(flags)).unwrap();
        assert_eq!((cfg.n, cfg.replicas, cfg.m), (20, 3, 4096));
        assert_eq!(cfg.f_grid.len(), 21);
    }

    #[test]
    fn rejects_bad_values() {
        let base = || ConfigFile {
            law: Some(two_point()),
            ..ConfigFile::default()
        };
        assert!(ExperimentConfig::resolve(ConfigFile::default()).is_err());
        let bad = [
            ConfigFile { replicas: Some(0), ..base() },
            ConfigFile { m: Some(1000), ..base() },
            ConfigFile { f_grid: Some(vec![0.5, 0.2]), ..base() },
            ConfigFile { f_grid: Some(vec![1.5]), ..base() },
            ConfigFile { f_c: Some(1.0), ..base() },
            ConfigFile { threads: Some(0), ..base() },
        ];
        for file in bad {
            assert!(matches!(ExperimentConfig::resolve(file), Err(CliError::Config(_))));
        }
    }

    #[test]
    fn grid_and_law_args() {
        assert_eq!(parse_grid_arg("0.5, 0.75,1").unwrap(), vec![0.5, 0.75, 1.0]);
        assert!(parse_grid_arg("0.5,x").is_err());
        assert!(parse_law_arg("{not json").is_err());
        let unknown: std::result::Result<ConfigFile, _> = serde_json::from_str(r#"{"laww": 1}"#);
        assert!(unknown.is_err());
    }
}
