use std::path::Path;
use std::time::Duration;

use serde::Deserialize;

use crate::solver::{BoundedDomain, SolverCommand, SolverConfig};

/// Overrides `solver.path` from the configuration file.
pub const SOLVER_ENV: &str = "CSE_SOLVER";

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub backend: String,
    pub path: String,
    pub args: Vec<String>,
    pub timeout_ms: u64,
    pub param_max: i64,
    pub int_min: i64,
    pub int_max: i64,
    pub max_index: i64,
    pub node_limit: u64,
}

impl Default for SolverSection {
    fn default() -> Self {
        let cmd = SolverCommand::default();
        let d = BoundedDomain::default();
        SolverSection {
            backend: "auto".to_string(),
            path: cmd.path,
            args: cmd.args,
            timeout_ms: 5000,
            param_max: d.param_max,
            int_min: d.int_min,
            int_max: d.int_max,
            max_index: d.max_index,
            node_limit: d.node_limit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub budget: usize,
    pub visit_bound: Option<u32>,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection { budget: 1000, visit_bound: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiffSection {
    pub bound: u32,
    pub classic_budget: usize,
    pub compact_budget: usize,
}

impl Default for DiffSection {
    fn default() -> Self {
        DiffSection { bound: 3, classic_budget: 500, compact_budget: 100 }
    }
}

/// Settings read from a TOML file; every key is optional.
#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub solver: SolverSection,
    pub run: RunSection,
    pub diff: DiffSection,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Read { path: String, message: String },
    #[error("invalid configuration in {path}: {message}")]
    Parse { path: String, message: String },
}

impl Config {
    pub fn parse(text: &str) -> Result<Config, toml::de::Error> {
        toml::from_str(text)
    }

    /// Defaults, then the file if given, then the environment.
    pub fn load(path: Option<&Path>) -> Result<Config, ConfigError> {
        let mut cfg = match path {
            None => Config::default(),
            Some(p) => {
                let shown = p.display().to_string();
                let text = std::fs::read_to_string(p)
                    .map_err(|e| ConfigError::Read { path: shown.clone(), message: e.to_string() })?;
                Config::parse(&text).map_err(|e| ConfigError::Parse { path: shown, message: e.to_string() })?
            }
        };
        if let Ok(path) = std::env::var(SOLVER_ENV) {
            if !path.is_empty() {
                cfg.solver.path = path;
            }
        }
        Ok(cfg)
    }

    pub fn solver_config(&self) -> SolverConfig {
        let s = &self.solver;
        SolverConfig {
            command: SolverCommand { path: s.path.clone(), args: s.args.clone() },
            timeout: Duration::from_millis(s.timeout_ms),
            domain: BoundedDomain {
                param_max: s.param_max,
                int_min: s.int_min,
                int_max: s.int_max,
                max_index: s.max_index,
                node_limit: s.node_limit,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(Config::parse("").unwrap(), Config::default());
        let d = Config::default();
        assert_eq!(d.solver.backend, "auto");
        assert_eq!((d.diff.bound, d.diff.classic_budget, d.diff.compact_budget), (3, 500, 100));
    }

    #[test]
    fn sections_override_individually() {
        let c = Config::parse("[solver]\nbackend = \"bounded\"\nint_min = -2\n[run]\nvisit_bound = 4\n").unwrap();
        assert_eq!(c.solver.backend, "bounded");
        assert_eq!(c.solver.int_min, -2);
        assert_eq!(c.solver.int_max, Config::default().solver.int_max);
        assert_eq!(c.run.visit_bound, Some(4));
        assert_eq!(c.solver_config().domain.int_min, -2);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(Config::parse("[solver]\ntimeout = 3\n").is_err());
        assert!(Config::parse("[extra]\n").is_err());
    }
}
