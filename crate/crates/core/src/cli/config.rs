use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::satcomp::EncoderOptions;

/// Settings of the 28-channel reproduction run, read from TOML.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Prefixes kept after each greedy step.
    pub pool_cap: usize,
    /// Greedy steps at most.
    pub max_steps: usize,
    /// 12-channel prefixes nested inside each 16-channel one.
    pub best_k_12ch: usize,
    /// Greedy results handed to the SAT solver.
    pub best_k_sat: usize,
    pub heuristic_restarts: u32,
    pub seed: u64,
    /// Solver template; detected from the environment when absent.
    pub solver_command: Option<String>,
    pub solver_timeout_secs: Option<u64>,
    pub total_depth: usize,
    /// Concurrent solver processes; 0 means one per CPU.
    pub parallelism: usize,
    /// Cancel the remaining instances after the first verified network.
    pub stop_on_first: bool,
    /// Require the SAT suffix to be reflection-symmetric.
    pub symmetric: bool,
    pub last_layer_adjacent: bool,
    pub second_last_distance: usize,
    pub window: bool,
    pub one_up_down: bool,
    pub monotone: bool,
    /// Extra 16-channel prefixes (network files) used next to the Van Voorhis one.
    pub sixteen_variants: Vec<PathBuf>,
    /// Use this 12-channel pool file instead of enumerating or the cache.
    pub twelve_pool: Option<PathBuf>,
    pub output_dir: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            pool_cap: 64,
            max_steps: 14,
            best_k_12ch: 4,
            best_k_sat: 8,
            heuristic_restarts: 10,
            seed: 0,
            solver_command: None,
            solver_timeout_secs: None,
            total_depth: 13,
            parallelism: 0,
            stop_on_first: true,
            symmetric: true,
            last_layer_adjacent: true,
            second_last_distance: 2,
            window: true,
            one_up_down: true,
            monotone: true,
            sixteen_variants: Vec::new(),
            twelve_pool: None,
            output_dir: PathBuf::from("sortnet-out"),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| e.to_string())?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        PipelineConfig::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("plain config")
    }

    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("pool_cap", self.pool_cap),
            ("max_steps", self.max_steps),
            ("best_k_12ch", self.best_k_12ch),
            ("best_k_sat", self.best_k_sat),
        ] {
            if v == 0 {
                return Err(format!("{name} must be positive"));
            }
        }
        if self.heuristic_restarts == 0 {
            return Err("heuristic_restarts must be positive".into());
        }
        if self.total_depth <= 6 {
            return Err(format!("total_depth must exceed 6, got {}", self.total_depth));
        }
        Ok(())
    }

    pub fn encoder(&self) -> EncoderOptions {
        EncoderOptions {
            last_layer_adjacent: self.last_layer_adjacent,
            second_last_distance: self.second_last_distance,
            window: self.window,
            one_up_down: self.one_up_down,
            monotone: self.monotone,
        }
    }

    pub fn threads(&self) -> usize {
        if self.parallelism > 0 {
            self.parallelism
        } else {
            std::thread::available_parallelism().map_or(1, |p| p.get())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = PipelineConfig::default();
        assert_eq!(cfg.pool_cap, 64);
        assert_eq!(cfg.best_k_sat, 8);
        assert_eq!(PipelineConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
        assert_eq!(PipelineConfig::from_toml("").unwrap(), cfg);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(PipelineConfig::from_toml("total_depth = 6").is_err());
        assert!(PipelineConfig::from_toml("pool_cap = 0").is_err());
        assert!(PipelineConfig::from_toml("bogus = 1").is_err());
        let cfg = PipelineConfig::from_toml("seed = 7\nwindow = false\n").unwrap();
        assert_eq!(cfg.seed, 7);
        assert!(!cfg.encoder().window && cfg.encoder().monotone);
    }
}
