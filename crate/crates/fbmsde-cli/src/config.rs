//! One JSON config document drives every subcommand. Missing fields take
//! documented defaults; unknown fields are rejected so typos surface as
//! config errors. The parsed struct serializes back to an identical struct
//! (round-trip stability), and the effective configuration is echoed into
//! the run outputs.

use serde::{Deserialize, Serialize};

use fbmsde::coeffs::{BoundsOverride, Family};
use fbmsde::harness::{ConvergenceConfig, LemmaConfig};
use fbmsde::scheme::{Generator, SchemeConfig};

fn default_horizon() -> f64 {
    1.0
}

fn default_rho() -> f64 {
    0.01
}

fn default_q() -> usize {
    8
}

fn default_n() -> usize {
    256
}

fn default_oracle_tol() -> f64 {
    1e-10
}

fn default_inflation() -> f64 {
    1.0
}

fn default_n_list() -> Vec<usize> {
    vec![32, 64, 128, 256, 512]
}

fn default_seed_list() -> Vec<u64> {
    (0..20).collect()
}

fn default_n_ref() -> usize {
    4096
}

fn default_slope_safety() -> f64 {
    0.9
}

fn default_levels() -> Vec<usize> {
    vec![16, 64, 256]
}

fn default_lemma_samples() -> usize {
    1000
}

fn default_lemma_path_n() -> usize {
    256
}

fn default_lemma_path_seed() -> u64 {
    2024
}

fn default_lemma_traj_ns() -> Vec<usize> {
    vec![64, 256]
}

fn default_lemma_sample_seed() -> u64 {
    7777
}

fn default_taylor_samples() -> usize {
    1000
}

fn default_out_dir() -> String {
    "out".to_string()
}

fn default_true() -> bool {
    true
}

/// Full run configuration: the single-run scheme parameters plus the grids
/// of the convergence and verification workflows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub coeffs: Family,
    pub hurst: f64,
    #[serde(rename = "T", default = "default_horizon")]
    pub horizon: f64,
    #[serde(default)]
    pub x0: f64,
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default = "default_q")]
    pub q: usize,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_oracle_tol")]
    pub oracle_tol: f64,
    #[serde(default)]
    pub generator: Generator,
    #[serde(default)]
    pub level_override: Option<usize>,
    #[serde(default = "default_inflation")]
    pub stats_inflation: f64,

    /// Hurst indices of the convergence grid; empty means `[hurst]`.
    #[serde(default)]
    pub hurst_list: Vec<f64>,
    #[serde(default = "default_n_list")]
    pub n_list: Vec<usize>,
    #[serde(default = "default_seed_list")]
    pub seed_list: Vec<u64>,
    #[serde(default = "default_n_ref")]
    pub n_ref: usize,
    #[serde(default = "default_slope_safety")]
    pub slope_safety: f64,

    #[serde(default = "default_levels")]
    pub levels: Vec<usize>,
    #[serde(default = "default_lemma_samples")]
    pub lemma_samples: usize,
    #[serde(default = "default_lemma_path_n")]
    pub lemma_path_n: usize,
    #[serde(default = "default_lemma_path_seed")]
    pub lemma_path_seed: u64,
    #[serde(default = "default_lemma_traj_ns")]
    pub lemma_traj_ns: Vec<usize>,
    #[serde(default = "default_lemma_sample_seed")]
    pub lemma_sample_seed: u64,
    #[serde(default = "default_taylor_samples")]
    pub taylor_samples: usize,
    #[serde(default)]
    pub bounds_override: Option<BoundsOverride>,

    #[serde(default = "default_out_dir")]
    pub out_dir: String,
    #[serde(default)]
    pub emit_paths: bool,
    #[serde(default = "default_true")]
    pub emit_trajectories: bool,
    /// Worker threads; 0 means machine parallelism.
    #[serde(default)]
    pub workers: usize,
}

impl RunConfig {
    pub fn scheme_config(&self) -> SchemeConfig {
        SchemeConfig {
            n: self.n,
            q: self.q,
            hurst: self.hurst,
            horizon: self.horizon,
            x0: self.x0,
            rho: self.rho,
            seed: self.seed,
            coeffs: self.coeffs,
            oracle_tol: self.oracle_tol,
            generator: self.generator,
            level_override: self.level_override,
            stats_inflation: self.stats_inflation,
        }
    }

    pub fn convergence_config(&self) -> ConvergenceConfig {
        let hursts = if self.hurst_list.is_empty() {
            vec![self.hurst]
        } else {
            self.hurst_list.clone()
        };
        ConvergenceConfig {
            hursts,
            ns: self.n_list.clone(),
            seeds: self.seed_list.clone(),
            coeffs: self.coeffs,
            horizon: self.horizon,
            x0: self.x0,
            rho: self.rho,
            q: self.q,
            n_ref: self.n_ref,
            oracle_tol: self.oracle_tol,
            generator: self.generator,
            slope_safety: self.slope_safety,
            stats_inflation: self.stats_inflation,
        }
    }

    pub fn lemma_config(&self) -> LemmaConfig {
        LemmaConfig {
            coeffs: self.coeffs,
            hurst: self.hurst,
            horizon: self.horizon,
            x0: self.x0,
            rho: self.rho,
            q: self.q,
            levels: self.levels.clone(),
            flow_samples: self.lemma_samples,
            flow_path_n: self.lemma_path_n,
            path_seed: self.lemma_path_seed,
            traj_ns: self.lemma_traj_ns.clone(),
            traj_seeds: self.seed_list.clone(),
            oracle_tol: self.oracle_tol,
            generator: self.generator,
            sample_seed: self.lemma_sample_seed,
            bounds_override: self.bounds_override,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_with_defaults_materialized() {
        let json = r#"{
            "coeffs": {"family": "trig", "params": [1.0, 1.0]},
            "hurst": 0.35
        }"#;
        let cfg: RunConfig = serde_json::from_str(json).unwrap();
        assert_eq!(cfg.q, 8);
        assert_eq!(cfg.n_list, vec![32, 64, 128, 256, 512]);
        let out = serde_json::to_string(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&out).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn missing_hurst_is_named() {
        let json = r#"{"coeffs": {"family": "additive", "params": [2.0]}}"#;
        let err = serde_json::from_str::<RunConfig>(json).unwrap_err();
        assert!(err.to_string().contains("hurst"), "{err}");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let json = r#"{
            "coeffs": {"family": "trig", "params": [1.0, 1.0]},
            "hurst": 0.35,
            "hirst": 0.2
        }"#;
        assert!(serde_json::from_str::<RunConfig>(json).is_err());
    }

    #[test]
    fn grid_fallback_uses_single_hurst() {
        let json = r#"{
            "coeffs": {"family": "trig", "params": [1.0, 1.0]},
            "hurst": 0.4
        }"#;
        let cfg: RunConfig = serde_json::from_str(json).unwrap();
        assert_eq!(cfg.convergence_config().hursts, vec![0.4]);
    }
}
