//! Assembly of the final approximation X^n = psi^n(Y^{n,n}, B) and the
//! oracle X = phi(Y, B) on a common seeded path, plus the pathwise error
//! metric.
//!
//! The flow partition radius is the realized discrete sup norm of the
//! generated path, so the flow is rebuilt per path. The flow level equals
//! the scheme resolution n unless an override asks for a level-versus-n
//! ablation. The reference is computed on the same path (common random
//! numbers): errors are pathwise, not distributional.

use serde::{Deserialize, Serialize};

use crate::coeffs::{builtin_family, CoefficientPair, Family};
use crate::constants::{compute_constants, ConstantSet};
use crate::driver::{
    integrate_y_exact, step_scheme_y, Provenance, Trajectory, TrajectoryKind,
};
use crate::error::{Error, Result};
use crate::fbm::{CholeskyFbm, CirculantFbm, FbmPath, PathStats, path_stats};
use crate::flow::{build_partition, solve_phi_reference, PiecewiseFlow};

/// Path sampler selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Generator {
    Cholesky,
    #[default]
    Circulant,
}

fn default_q() -> usize {
    8
}

fn default_horizon() -> f64 {
    1.0
}

fn default_rho() -> f64 {
    0.01
}

fn default_oracle_tol() -> f64 {
    1e-10
}

fn default_inflation() -> f64 {
    1.0
}

/// One seeded run of the scheme: resolution, refinement, path law, initial
/// condition, and oracle tolerance.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SchemeConfig {
    pub n: usize,
    #[serde(default = "default_q")]
    pub q: usize,
    pub hurst: f64,
    #[serde(rename = "T", default = "default_horizon")]
    pub horizon: f64,
    #[serde(default)]
    pub x0: f64,
    #[serde(default = "default_rho")]
    pub rho: f64,
    pub seed: u64,
    pub coeffs: Family,
    #[serde(default = "default_oracle_tol")]
    pub oracle_tol: f64,
    #[serde(default)]
    pub generator: Generator,
    /// Flow level when deliberately decoupled from n (ablation studies).
    #[serde(default)]
    pub level_override: Option<usize>,
    /// Multiplier applied to the discrete path statistics before constants
    /// are assembled, as slack for grid-resolution effects. Reports carry
    /// the raw statistics alongside.
    #[serde(default = "default_inflation")]
    pub stats_inflation: f64,
}

impl SchemeConfig {
    /// Checks the hard invariants; returns advisory warnings (e.g. a Hurst
    /// index outside (1/4, 1/2), where the scheme still runs but no rate is
    /// asserted).
    pub fn validate(&self) -> Result<Vec<String>> {
        if self.n == 0 {
            return Err(Error::Precondition("n must be at least 1".into()));
        }
        if self.q < 2 {
            return Err(Error::Precondition(format!(
                "refinement q = {} must be at least 2",
                self.q
            )));
        }
        if !(self.hurst > 0.0 && self.hurst < 1.0) {
            return Err(Error::Domain(format!("hurst = {} must lie in (0, 1)", self.hurst)));
        }
        if !(self.rho > 0.0 && self.rho < self.hurst) {
            return Err(Error::Domain(format!(
                "rho = {} must lie in (0, H) with H = {}",
                self.rho, self.hurst
            )));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::Domain(format!("T = {} must be positive", self.horizon)));
        }
        if !self.x0.is_finite() {
            return Err(Error::Domain("x0 must be finite".into()));
        }
        if self.oracle_tol < 1e-13 {
            return Err(Error::Precondition(format!(
                "oracle_tol = {} below the supported 1e-13",
                self.oracle_tol
            )));
        }
        if !(self.stats_inflation > 0.0 && self.stats_inflation.is_finite()) {
            return Err(Error::Domain(format!(
                "stats_inflation = {} must be positive",
                self.stats_inflation
            )));
        }
        let mut warnings = Vec::new();
        if self.hurst <= 0.25 || self.hurst >= 0.5 {
            warnings.push(format!(
                "hurst = {} outside (1/4, 1/2): the n^(-2(H-rho)) rate is not asserted there",
                self.hurst
            ));
        }
        if self.stats_inflation < 1.0 {
            warnings.push(format!(
                "stats_inflation = {} deflates the path statistics; bound checks may be invalid",
                self.stats_inflation
            ));
        }
        Ok(warnings)
    }

    pub fn sim_grid_size(&self) -> usize {
        self.n * self.q
    }

    pub fn coefficient_pair(&self) -> Result<CoefficientPair> {
        builtin_family(self.coeffs)
    }

    /// Generates the seeded simulation-grid path for this run.
    pub fn generate_path(&self) -> Result<FbmPath> {
        let n_sim = self.sim_grid_size();
        match self.generator {
            Generator::Cholesky => {
                Ok(CholeskyFbm::new(n_sim, self.horizon, self.hurst)?.sample(self.seed))
            }
            Generator::Circulant => {
                Ok(CirculantFbm::new(n_sim, self.horizon, self.hurst)?.sample(self.seed))
            }
        }
    }

    fn inflated(&self, stats: &PathStats) -> PathStats {
        PathStats {
            sup_norm: stats.sup_norm * self.stats_inflation,
            holder_norm: stats.holder_norm * self.stats_inflation,
            hurst: stats.hurst,
            rho: stats.rho,
        }
    }
}

/// A solved run: the requested trajectory plus everything a report needs.
#[derive(Debug)]
pub struct SolveOutput {
    /// X^n (or the oracle X) at the scheme nodes.
    pub x: Trajectory,
    /// The auxiliary state: scheme nodes for the scheme, the full simulation
    /// grid for the oracle.
    pub y: Trajectory,
    /// Raw (uninflated) statistics of the driving path.
    pub stats: PathStats,
    /// Constants assembled from the (possibly inflated) statistics.
    pub constants: ConstantSet,
}

/// Runs the scheme on a freshly generated seeded path.
pub fn solve_x_scheme(cfg: &SchemeConfig) -> Result<SolveOutput> {
    cfg.validate()?;
    let path = cfg.generate_path()?;
    solve_x_scheme_on_path(cfg, &path)
}

/// Runs the scheme on a caller-supplied path (e.g. a consistently
/// subsampled master path in convergence studies).
pub fn solve_x_scheme_on_path(cfg: &SchemeConfig, path: &FbmPath) -> Result<SolveOutput> {
    cfg.validate()?;
    check_path(cfg, path)?;
    let coeffs = cfg.coefficient_pair()?;
    let stats = path_stats(path, cfg.rho)?;
    let constants =
        compute_constants(coeffs.bounds(), cfg.horizon, cfg.x0, &cfg.inflated(&stats))?;
    let level = cfg.level_override.unwrap_or(cfg.n);
    let flow = PiecewiseFlow::new(
        build_partition(stats.sup_norm, level)?,
        coeffs.clone(),
        constants.state_bound,
    );
    let y = step_scheme_y(&coeffs, &flow, path, cfg.x0, cfg.n, cfg.q)?;
    let b = path.values();
    let mut x_values = Vec::with_capacity(cfg.n + 1);
    for (k, &state) in y.values().iter().enumerate() {
        x_values.push(flow.psi(state, b[k * cfg.q])?);
    }
    let x = Trajectory::new(
        y.times().to_vec(),
        x_values,
        TrajectoryKind::XScheme,
        Provenance {
            coeffs_tag: coeffs.family_tag().to_string(),
            seed: path.seed(),
            n: Some(cfg.n),
            level: Some(level),
            q: Some(cfg.q),
            tol: None,
        },
    )?;
    Ok(SolveOutput { x, y, stats, constants })
}

/// Oracle solution on a freshly generated seeded path.
pub fn solve_x_reference(cfg: &SchemeConfig) -> Result<SolveOutput> {
    cfg.validate()?;
    let path = cfg.generate_path()?;
    solve_x_reference_on_path(cfg, &path)
}

/// Oracle solution on a caller-supplied path: Y by the adaptive-inner
/// fourth-order integrator, X = phi(Y, B) at the scheme nodes by the
/// reference flow solver.
pub fn solve_x_reference_on_path(cfg: &SchemeConfig, path: &FbmPath) -> Result<SolveOutput> {
    cfg.validate()?;
    check_path(cfg, path)?;
    let coeffs = cfg.coefficient_pair()?;
    let stats = path_stats(path, cfg.rho)?;
    let constants =
        compute_constants(coeffs.bounds(), cfg.horizon, cfg.x0, &cfg.inflated(&stats))?;
    let y = integrate_y_exact(&coeffs, path, cfg.x0, cfg.oracle_tol)?;
    let b = path.values();
    let mut x_values = Vec::with_capacity(cfg.n + 1);
    let mut x_times = Vec::with_capacity(cfg.n + 1);
    for k in 0..=cfg.n {
        let idx = k * cfg.q;
        x_times.push(path.times()[idx]);
        x_values.push(solve_phi_reference(&coeffs, y.values()[idx], b[idx], cfg.oracle_tol)?);
    }
    let x = Trajectory::new(
        x_times,
        x_values,
        TrajectoryKind::XExact,
        Provenance {
            coeffs_tag: coeffs.family_tag().to_string(),
            seed: path.seed(),
            n: Some(cfg.n),
            level: None,
            q: Some(cfg.q),
            tol: Some(cfg.oracle_tol),
        },
    )?;
    Ok(SolveOutput { x, y, stats, constants })
}

fn check_path(cfg: &SchemeConfig, path: &FbmPath) -> Result<()> {
    if path.grid_size() != cfg.sim_grid_size() {
        return Err(Error::Precondition(format!(
            "path grid {} does not match n q = {}",
            path.grid_size(),
            cfg.sim_grid_size()
        )));
    }
    if (path.horizon() - cfg.horizon).abs() > 1e-12 * cfg.horizon {
        return Err(Error::Precondition(format!(
            "path horizon {} does not match T = {}",
            path.horizon(),
            cfg.horizon
        )));
    }
    Ok(())
}

/// Max over shared nodes of |a - b|; the grids must agree.
pub fn sup_error(a: &Trajectory, b: &Trajectory) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::GridMismatch {
            index: a.len().min(b.len()),
            left: a.len() as f64,
            right: b.len() as f64,
        });
    }
    let scale = a.times().last().copied().unwrap_or(1.0).abs().max(1.0);
    for (i, (ta, tb)) in a.times().iter().zip(b.times()).enumerate() {
        if (ta - tb).abs() > 1e-12 * scale {
            return Err(Error::GridMismatch { index: i, left: *ta, right: *tb });
        }
    }
    Ok(a.values()
        .iter()
        .zip(b.values())
        .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs())))
}

/// Self-describing record of one simulate run, written next to the
/// trajectory CSVs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub config: SchemeConfig,
    pub stats: PathStats,
    pub constants: ConstantSet,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn to_json_pretty(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map_err(|e| Error::Domain(format!("manifest serialization failed: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::{CoefficientBounds, CoefficientPair};
    use crate::driver::step_scheme_y;
    use crate::fbm::GeneratorTag;
    use std::sync::Arc;

    fn cfg(n: usize, hurst: f64, seed: u64, coeffs: Family) -> SchemeConfig {
        SchemeConfig {
            n,
            q: 8,
            hurst,
            horizon: 1.0,
            x0: 0.1,
            rho: 0.01,
            seed,
            coeffs,
            oracle_tol: 1e-10,
            generator: Generator::Circulant,
            level_override: None,
            stats_inflation: 1.0,
        }
    }

    #[test]
    fn additive_noise_is_exact_for_any_resolution() {
        for n in [1usize, 4, 64] {
            let c = cfg(n, 0.35, 42, Family::Additive(2.0));
            let path = c.generate_path().unwrap();
            let scheme = solve_x_scheme_on_path(&c, &path).unwrap();
            let reference = solve_x_reference_on_path(&c, &path).unwrap();
            for (k, &v) in scheme.x.values().iter().enumerate() {
                let expect = 0.1 + 2.0 * path.values()[k * c.q];
                assert!((v - expect).abs() <= 1e-12, "n={n} k={k}");
            }
            assert!(sup_error(&scheme.x, &reference.x).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn zero_diffusion_reduces_to_a_deterministic_ode() {
        // sigma = 0: X^n solves the Euler iteration for x' = sin(x); compare
        // against a fine reference solution with O(1/n) slack.
        let zero: Arc<dyn Fn(f64) -> f64 + Send + Sync> = Arc::new(|_| 0.0);
        let pair = CoefficientPair::new(
            Arc::new(|z: f64| z.sin()),
            Arc::new(|z: f64| z.cos()),
            Arc::new(|z: f64| -z.sin()),
            zero.clone(),
            zero.clone(),
            zero,
            CoefficientBounds { m1: 1.0, m2: 0.0, m3: 0.0, m4: 1.0, m5: 0.0, m6: 1.0 },
            "sin-drift-zero-sigma",
        )
        .unwrap();
        let n = 256;
        let q = 8;
        let path = crate::fbm::generate_circulant(n * q, 1.0, 0.35, 7).unwrap();
        let stats = path_stats(&path, 0.01).unwrap();
        let flow = PiecewiseFlow::new(
            build_partition(stats.sup_norm, n).unwrap(),
            pair.clone(),
            10.0,
        );
        let y = step_scheme_y(&pair, &flow, &path, 0.1, n, q).unwrap();
        // Fine fixed-step reference for x' = sin(x).
        let fine = 1 << 16;
        let h = 1.0 / fine as f64;
        let mut x = 0.1_f64;
        let mut reference = Vec::with_capacity(n + 1);
        reference.push(x);
        for i in 1..=fine {
            let k1 = x.sin();
            let k2 = (x + 0.5 * h * k1).sin();
            let k3 = (x + 0.5 * h * k2).sin();
            let k4 = (x + h * k3).sin();
            x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            if i % (fine / n) == 0 {
                reference.push(x);
            }
        }
        let err = y
            .values()
            .iter()
            .zip(&reference)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err <= 1.0 / n as f64, "err {err}");
    }

    #[test]
    fn reference_matches_gudermannian_closed_form() {
        let c = cfg(64, 0.35, 5, Family::Gudermann(1.0));
        let mut c = c;
        c.x0 = 0.0;
        let path = c.generate_path().unwrap();
        let reference = solve_x_reference_on_path(&c, &path).unwrap();
        for (k, &v) in reference.x.values().iter().enumerate() {
            let bt = path.values()[k * c.q];
            let closed = 2.0 * (0.5 * bt).tanh().atan();
            assert!((v - closed).abs() <= 1e-9, "k={k}: {v} vs {closed}");
        }
    }

    #[test]
    fn theorem_bound_holds_on_a_seeded_run() {
        let c = cfg(512, 0.4, 11, Family::Trig(1.0, 1.0));
        let path = c.generate_path().unwrap();
        let scheme = solve_x_scheme_on_path(&c, &path).unwrap();
        let reference = solve_x_reference_on_path(&c, &path).unwrap();
        let err = sup_error(&scheme.x, &reference.x).unwrap();
        let bound = scheme.constants.theorem_bound(c.n);
        assert!(bound.holds_with_floor(err, 1e-12), "err {err} vs ln-bound {}", bound.ln());
        assert!(err > 0.0);
    }

    #[test]
    fn scheme_is_deterministic() {
        let c = cfg(32, 0.3, 123, Family::Trig(1.0, 1.0));
        let a = solve_x_scheme(&c).unwrap();
        let b = solve_x_scheme(&c).unwrap();
        assert_eq!(a.x.values(), b.x.values());
        assert_eq!(a.stats.holder_norm.to_bits(), b.stats.holder_norm.to_bits());
    }

    #[test]
    fn config_validation() {
        let mut c = cfg(32, 0.3, 1, Family::Trig(1.0, 1.0));
        assert!(c.validate().unwrap().is_empty());
        c.rho = 0.3;
        assert!(c.validate().is_err());
        c.rho = 0.01;
        c.q = 1;
        assert!(c.validate().is_err());
        c.q = 8;
        c.hurst = 0.6;
        c.rho = 0.01;
        let warnings = c.validate().unwrap();
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("outside (1/4, 1/2)"));
    }

    #[test]
    fn config_round_trips_through_json() {
        let c = cfg(32, 0.3, 1, Family::Trig(1.0, 1.0));
        let json = serde_json::to_string(&c).unwrap();
        let back: SchemeConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(c, back);
        // Missing required field is named in the error.
        let err = serde_json::from_str::<SchemeConfig>("{\"n\": 4, \"seed\": 1, \"coeffs\": {\"family\": \"trig\", \"params\": [1.0, 1.0]}}")
            .unwrap_err();
        assert!(err.to_string().contains("hurst"), "{err}");
    }

    #[test]
    fn sup_error_examples() {
        let p = Provenance {
            coeffs_tag: "t".into(),
            seed: 0,
            n: None,
            level: None,
            q: None,
            tol: None,
        };
        let a = Trajectory::new(vec![0.0, 1.0], vec![0.5, 0.5], TrajectoryKind::XExact, p.clone())
            .unwrap();
        assert_eq!(sup_error(&a, &a).unwrap(), 0.0);
        let b = Trajectory::new(vec![0.0, 1.0], vec![0.75, 0.75], TrajectoryKind::XExact, p.clone())
            .unwrap();
        assert_eq!(sup_error(&a, &b).unwrap(), 0.25);
        let c = Trajectory::new(vec![0.0, 2.0], vec![0.5, 0.5], TrajectoryKind::XExact, p).unwrap();
        assert!(matches!(sup_error(&a, &c), Err(Error::GridMismatch { index: 1, .. })));
    }

    #[test]
    fn synthetic_paths_are_rejected_on_grid_mismatch() {
        let c = cfg(8, 0.35, 1, Family::Trig(1.0, 1.0));
        let path =
            FbmPath::from_values(0.35, 1.0, vec![0.0; 100], 1, GeneratorTag::Synthetic).unwrap();
        assert!(solve_x_scheme_on_path(&c, &path).is_err());
    }
}
