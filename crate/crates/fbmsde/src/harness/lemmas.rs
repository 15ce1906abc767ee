//! Bound verification: observed-versus-bound ratios for the seven
//! supporting estimates (flow approximation, flow Lipschitz, state
//! comparisons, increment growth) plus the a-priori state bound.
//!
//! Ratios at or below one pass. A bound smaller than the reference-solver
//! allowance is reported as a vacuous pass when the observation sits inside
//! that allowance (the additive family makes several bounds exactly zero
//! while the oracle still carries roundoff-level error).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coeffs::{builtin_family, BoundsOverride, Family};
use crate::constants::{compute_constants, Bound};
use crate::driver::{integrate_y_exact, integrate_y_l, step_scheme_y_dense};
use crate::error::{Error, Result};
use crate::fbm::path_stats;
use crate::flow::{build_partition, solve_phi_reference, PiecewiseFlow};
use crate::scheme::{Generator, SchemeConfig};

/// Observations below this absolute level are attributed to the reference
/// solvers rather than the approximations under test.
pub const VACUOUS_FLOOR: f64 = 1e-9;

fn default_horizon() -> f64 {
    1.0
}

fn default_rho() -> f64 {
    0.01
}

fn default_q() -> usize {
    8
}

fn default_levels() -> Vec<usize> {
    vec![16, 64, 256]
}

fn default_flow_samples() -> usize {
    1000
}

fn default_flow_path_n() -> usize {
    256
}

fn default_path_seed() -> u64 {
    2024
}

fn default_traj_ns() -> Vec<usize> {
    vec![64, 256]
}

fn default_traj_seeds() -> Vec<u64> {
    (0..20).collect()
}

fn default_oracle_tol() -> f64 {
    1e-10
}

fn default_sample_seed() -> u64 {
    7777
}

/// Configuration of the lemma suite.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LemmaConfig {
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
    /// Flow levels for the pointwise flow lemmas.
    #[serde(default = "default_levels")]
    pub levels: Vec<usize>,
    /// Sampled (z, u) pairs per level and lemma.
    #[serde(default = "default_flow_samples")]
    pub flow_samples: usize,
    /// Scheme resolution of the path that fixes the sampling box.
    #[serde(default = "default_flow_path_n")]
    pub flow_path_n: usize,
    #[serde(default = "default_path_seed")]
    pub path_seed: u64,
    /// Resolutions for the trajectory lemmas.
    #[serde(default = "default_traj_ns")]
    pub traj_ns: Vec<usize>,
    #[serde(default = "default_traj_seeds")]
    pub traj_seeds: Vec<u64>,
    #[serde(default = "default_oracle_tol")]
    pub oracle_tol: f64,
    #[serde(default)]
    pub generator: Generator,
    #[serde(default = "default_sample_seed")]
    pub sample_seed: u64,
    /// Replaces declared coefficient bounds before constants are assembled.
    /// Corrupted bounds must make the suite fail; that is the point.
    #[serde(default)]
    pub bounds_override: Option<BoundsOverride>,
}

impl LemmaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.flow_samples < 100 {
            return Err(Error::Precondition(format!(
                "flow_samples = {} must be at least 100",
                self.flow_samples
            )));
        }
        if self.levels.is_empty() || self.traj_ns.is_empty() || self.traj_seeds.is_empty() {
            return Err(Error::Precondition(
                "levels, traj_ns and traj_seeds must be nonempty".into(),
            ));
        }
        self.scheme_config(self.flow_path_n, self.path_seed).validate()?;
        Ok(())
    }

    fn scheme_config(&self, n: usize, seed: u64) -> SchemeConfig {
        SchemeConfig {
            n,
            q: self.q,
            hurst: self.hurst,
            horizon: self.horizon,
            x0: self.x0,
            rho: self.rho,
            seed,
            coeffs: self.coeffs,
            oracle_tol: self.oracle_tol,
            generator: self.generator,
            level_override: None,
            stats_inflation: 1.0,
        }
    }

    fn effective_bounds(&self, pair: &crate::coeffs::CoefficientPair) -> crate::coeffs::CoefficientBounds {
        match &self.bounds_override {
            Some(o) => o.apply(pair.bounds()),
            None => pair.bounds(),
        }
    }
}

/// Result of one lemma check.
#[derive(Debug, Clone, Serialize)]
pub struct LemmaEntry {
    pub lemma: String,
    /// Worst observed/bound ratio across samples (0 when every bound was
    /// degenerate).
    pub worst_ratio: f64,
    pub samples: usize,
    pub pass: bool,
    /// Every sampled bound sat below the solver allowance.
    pub vacuous: bool,
    /// First violating sample, when any.
    pub witness: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct LemmaReport {
    pub config: LemmaConfig,
    pub entries: Vec<LemmaEntry>,
    pub pass: bool,
}

impl LemmaReport {
    pub fn to_json_pretty(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map_err(|e| Error::Domain(format!("report serialization failed: {e}")))
    }

    pub fn failures(&self) -> Vec<&LemmaEntry> {
        self.entries.iter().filter(|e| !e.pass).collect()
    }
}

#[derive(Clone)]
struct Check {
    worst_ratio: f64,
    samples: usize,
    pass: bool,
    max_bound: f64,
    witness: Option<String>,
}

impl Check {
    fn new() -> Self {
        Self { worst_ratio: 0.0, samples: 0, pass: true, max_bound: 0.0, witness: None }
    }

    fn add(&mut self, observed: f64, bound: Bound, witness: impl FnOnce() -> String) {
        self.samples += 1;
        let ratio = bound.ratio(observed);
        if ratio > self.worst_ratio {
            self.worst_ratio = ratio;
        }
        self.max_bound = self.max_bound.max(bound.value());
        if !bound.holds_with_floor(observed, VACUOUS_FLOOR) {
            self.pass = false;
            if self.witness.is_none() {
                self.witness = Some(witness());
            }
        }
    }

    fn merge(&mut self, other: Check) {
        self.worst_ratio = self.worst_ratio.max(other.worst_ratio);
        self.samples += other.samples;
        self.max_bound = self.max_bound.max(other.max_bound);
        if !other.pass {
            self.pass = false;
            if self.witness.is_none() {
                self.witness = other.witness;
            }
        }
    }

    fn entry(self, lemma: &str) -> LemmaEntry {
        LemmaEntry {
            lemma: lemma.to_string(),
            worst_ratio: self.worst_ratio,
            samples: self.samples,
            pass: self.pass,
            vacuous: self.max_bound <= VACUOUS_FLOOR,
            witness: self.witness,
        }
    }
}

struct TrajChecks {
    l5: Check,
    l6: Check,
    l7: Check,
    state: Check,
}

/// Runs every lemma check and aggregates worst ratios.
pub fn run_lemma_suite(cfg: &LemmaConfig) -> Result<LemmaReport> {
    cfg.validate()?;
    let pair = builtin_family(cfg.coeffs)?;
    let bounds = cfg.effective_bounds(&pair);

    // Pointwise flow lemmas share one path: it only fixes the box
    // [-M, M] x [-R, R] and the bound constants.
    let box_cfg = cfg.scheme_config(cfg.flow_path_n, cfg.path_seed);
    let box_path = box_cfg.generate_path()?;
    let box_stats = path_stats(&box_path, cfg.rho)?;
    let box_constants = compute_constants(bounds, cfg.horizon, cfg.x0, &box_stats)?;

    let flow_checks: Vec<Result<[Check; 4]>> = cfg
        .levels
        .par_iter()
        .enumerate()
        .map(|(idx, &level)| {
            let flow = PiecewiseFlow::new(
                build_partition(box_stats.sup_norm, level)?,
                pair.clone(),
                box_constants.state_bound,
            );
            let mut rng =
                ChaCha12Rng::seed_from_u64(cfg.sample_seed.wrapping_add(idx as u64));
            let m = box_constants.state_bound;
            let r = box_stats.sup_norm;
            let lips = box_constants.flow_lipschitz_factor();
            let mut l1 = Check::new();
            let mut l2 = Check::new();
            let mut l3 = Check::new();
            let mut l4 = Check::new();
            for _ in 0..cfg.flow_samples {
                let z = rng.gen_range(-m..=m);
                let u = rng.gen_range(-r..=r);
                let reference = solve_phi_reference(&pair, z, u, 1e-12)?;
                let euler = flow.phi_euler(z, u)?;
                let taylor = flow.psi(z, u)?;
                l1.add((reference - euler).abs(), box_constants.flow_euler_bound(level), || {
                    format!("lemma1 level {level}: z = {z}, u = {u}")
                });
                l2.add((euler - taylor).abs(), box_constants.flow_taylor_bound(level), || {
                    format!("lemma2 level {level}: z = {z}, u = {u}")
                });
                let z2 = rng.gen_range(-m..=m);
                let dz = (z - z2).abs();
                let lip_bound = Bound::from_ln((dz * lips).ln());
                let d_psi = (taylor - flow.psi(z2, u)?).abs();
                l3.add(d_psi, lip_bound, || {
                    format!("lemma3 level {level}: z1 = {z}, z2 = {z2}, u = {u}")
                });
                let d_euler = (euler - flow.phi_euler(z2, u)?).abs();
                l4.add(d_euler, lip_bound, || {
                    format!("lemma4 level {level}: z1 = {z}, z2 = {z2}, u = {u}")
                });
            }
            // Degenerate pinch: identical start points give 0 <= 0.
            let z = 0.5 * m;
            let u = 0.5 * r;
            let same = (flow.psi(z, u)? - flow.psi(z, u)?).abs();
            l3.add(same, Bound::from_ln(f64::NEG_INFINITY), || {
                format!("lemma3 level {level}: coincident start points")
            });
            Ok([l1, l2, l3, l4])
        })
        .collect();

    let mut l1 = Check::new();
    let mut l2 = Check::new();
    let mut l3 = Check::new();
    let mut l4 = Check::new();
    for c in flow_checks {
        let [a, b, c3, c4] = c?;
        l1.merge(a);
        l2.merge(b);
        l3.merge(c3);
        l4.merge(c4);
    }

    // Trajectory lemmas: one bundle of trajectories per (n, seed).
    let cells: Vec<(usize, u64)> = cfg
        .traj_ns
        .iter()
        .flat_map(|&n| cfg.traj_seeds.iter().map(move |&s| (n, s)))
        .collect();
    let traj_checks: Vec<Result<TrajChecks>> =
        cells.par_iter().map(|&(n, seed)| run_trajectory_cell(cfg, bounds, n, seed)).collect();

    let mut l5 = Check::new();
    let mut l6 = Check::new();
    let mut l7 = Check::new();
    let mut state = Check::new();
    for c in traj_checks {
        let t = c?;
        l5.merge(t.l5);
        l6.merge(t.l6);
        l7.merge(t.l7);
        state.merge(t.state);
    }

    let entries = vec![
        l1.entry("lemma1"),
        l2.entry("lemma2"),
        l3.entry("lemma3"),
        l4.entry("lemma4"),
        l5.entry("lemma5"),
        l6.entry("lemma6"),
        l7.entry("lemma7"),
        state.entry("state_bound"),
    ];
    let pass = entries.iter().all(|e| e.pass);
    Ok(LemmaReport { config: cfg.clone(), entries, pass })
}

fn run_trajectory_cell(
    cfg: &LemmaConfig,
    bounds: crate::coeffs::CoefficientBounds,
    n: usize,
    seed: u64,
) -> Result<TrajChecks> {
    let pair = builtin_family(cfg.coeffs)?;
    let scfg = cfg.scheme_config(n, seed);
    let path = scfg.generate_path()?;
    let stats = path_stats(&path, cfg.rho)?;
    let constants = compute_constants(bounds, cfg.horizon, cfg.x0, &stats)?;
    let flow = PiecewiseFlow::new(
        build_partition(stats.sup_norm, n)?,
        pair.clone(),
        constants.state_bound,
    );

    let y_exact = integrate_y_exact(&pair, &path, cfg.x0, cfg.oracle_tol)?;
    let y_level = integrate_y_l(&pair, &flow, &path, cfg.x0)?;
    let y_dense = step_scheme_y_dense(&pair, &flow, &path, cfg.x0, n, cfg.q)?;

    let mut l5 = Check::new();
    let sup5 = y_exact
        .values()
        .iter()
        .zip(y_level.values())
        .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    l5.add(sup5, constants.y_level_bound(n), || {
        format!("lemma5 n = {n}, seed = {seed}: sup |Y - Y^n| = {sup5}")
    });

    let mut l6 = Check::new();
    let c4 = constants.increment_rate();
    let times = y_dense.times();
    let vals = y_dense.values();
    for k in 0..n {
        let base = k * cfg.q;
        for j in 1..=cfg.q {
            let obs = (vals[base + j] - vals[base]).abs();
            let gap = times[base + j] - times[base];
            l6.add(obs, Bound::from_ln((c4 * gap).ln()), || {
                format!("lemma6 n = {n}, seed = {seed}: step {k}, substep {j}")
            });
        }
    }

    let mut l7 = Check::new();
    let y_level_scheme = y_level.restrict(cfg.q)?;
    let y_scheme = y_dense.restrict(cfg.q)?;
    let sup7 = y_level_scheme
        .values()
        .iter()
        .zip(y_scheme.values())
        .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    l7.add(sup7, constants.y_scheme_bound(n), || {
        format!("lemma7 n = {n}, seed = {seed}: sup |Y^n - Y^nn| = {sup7}")
    });

    let mut state = Check::new();
    state.add(
        y_dense.sup_abs(),
        Bound::from_ln(constants.state_bound.ln()),
        || format!("state bound n = {n}, seed = {seed}"),
    );

    Ok(TrajChecks { l5, l6, l7, state })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg(coeffs: Family) -> LemmaConfig {
        LemmaConfig {
            coeffs,
            hurst: 0.35,
            horizon: 1.0,
            x0: 0.1,
            rho: 0.01,
            q: 4,
            levels: vec![8, 32],
            flow_samples: 100,
            flow_path_n: 64,
            path_seed: 9,
            traj_ns: vec![16, 32],
            traj_seeds: vec![0, 1, 2],
            oracle_tol: 1e-10,
            generator: Generator::Circulant,
            sample_seed: 123,
            bounds_override: None,
        }
    }

    #[test]
    fn trig_family_passes_all_lemmas() {
        let report = run_lemma_suite(&small_cfg(Family::Trig(1.0, 1.0))).unwrap();
        assert!(report.pass, "{:#?}", report.failures());
        assert_eq!(report.entries.len(), 8);
        for e in &report.entries {
            assert!(e.worst_ratio <= 1.0 + 1e-9, "{}: {}", e.lemma, e.worst_ratio);
            assert!(!e.vacuous, "{} unexpectedly vacuous", e.lemma);
        }
    }

    #[test]
    fn additive_family_reports_vacuous_flow_lemmas() {
        let report = run_lemma_suite(&small_cfg(Family::Additive(2.0))).unwrap();
        assert!(report.pass, "{:#?}", report.failures());
        let by_name = |n: &str| report.entries.iter().find(|e| e.lemma == n).unwrap();
        assert!(by_name("lemma1").vacuous);
        assert!(by_name("lemma2").vacuous);
        // The Lipschitz factor is exp(0) = 1, not degenerate.
        assert!(!by_name("lemma3").vacuous);
    }

    #[test]
    fn corrupted_bound_fails_lemma1_with_witness() {
        let mut cfg = small_cfg(Family::Trig(1.0, 1.0));
        cfg.bounds_override =
            Some(BoundsOverride { m2: Some(0.1), ..Default::default() });
        let report = run_lemma_suite(&cfg).unwrap();
        assert!(!report.pass);
        let l1 = report.entries.iter().find(|e| e.lemma == "lemma1").unwrap();
        assert!(!l1.pass);
        assert!(l1.worst_ratio > 1.0);
        assert!(l1.witness.as_deref().unwrap().contains("lemma1"));
    }

    #[test]
    fn sample_precondition_enforced() {
        let mut cfg = small_cfg(Family::Trig(1.0, 1.0));
        cfg.flow_samples = 10;
        assert!(run_lemma_suite(&cfg).is_err());
    }
}
