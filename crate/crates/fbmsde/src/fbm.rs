//! Exact-in-law fractional Brownian motion sampling on uniform grids, plus
//! the path statistics (sup norm, discrete Hölder quotient) that the scheme
//! constants are built from.
//!
//! Two samplers are provided: a dense Cholesky factorization of the
//! fractional-Gaussian-noise covariance (exact, O(N^3) setup, capped), and a
//! circulant embedding ("Davies–Harte") sampler for large grids. Both draw
//! their Gaussian variates from a counter-based ChaCha stream seeded per
//! path, so sweeps parallelized over seeds are run-to-run identical.

use std::io::Write;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::{num_complex::Complex, Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest grid accepted by the Cholesky sampler (O(N^3) setup).
pub const CHOLESKY_GRID_CAP: usize = 4096;

/// Which sampler produced a path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorTag {
    Cholesky,
    Circulant,
    /// Constructed directly from values (tests, zero-noise studies).
    Synthetic,
}

/// A sampled fractional Brownian path on a uniform grid.
#[derive(Debug, Clone)]
pub struct FbmPath {
    hurst: f64,
    horizon: f64,
    times: Vec<f64>,
    values: Vec<f64>,
    seed: u64,
    generator_tag: GeneratorTag,
}

impl FbmPath {
    /// Builds a path from explicit values, enforcing the grid invariants.
    pub fn from_values(
        hurst: f64,
        horizon: f64,
        values: Vec<f64>,
        seed: u64,
        generator_tag: GeneratorTag,
    ) -> Result<Self> {
        check_hurst(hurst)?;
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::Domain(format!("horizon T = {horizon} must be positive")));
        }
        if values.len() < 2 {
            return Err(Error::Domain("path needs at least one step".into()));
        }
        if values[0] != 0.0 {
            return Err(Error::Domain(format!("values[0] = {} but B_0 must be 0", values[0])));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("path contains a non-finite value".into()));
        }
        let n = values.len() - 1;
        let dt = horizon / n as f64;
        let times = (0..=n).map(|i| i as f64 * dt).collect();
        Ok(Self { hurst, horizon, times, values, seed, generator_tag })
    }

    pub fn hurst(&self) -> f64 {
        self.hurst
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Number of steps N (the grid has N + 1 nodes).
    pub fn grid_size(&self) -> usize {
        self.values.len() - 1
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.grid_size() as f64
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn generator_tag(&self) -> GeneratorTag {
        self.generator_tag
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Restriction to every `stride`-th node. Times are copied, not
    /// recomputed, so shared nodes stay bitwise identical to the parent grid.
    pub fn subsample(&self, stride: usize) -> Result<Self> {
        if stride == 0 || !self.grid_size().is_multiple_of(stride) {
            return Err(Error::Precondition(format!(
                "stride {stride} does not divide grid size {}",
                self.grid_size()
            )));
        }
        Ok(Self {
            hurst: self.hurst,
            horizon: self.horizon,
            times: self.times.iter().step_by(stride).copied().collect(),
            values: self.values.iter().step_by(stride).copied().collect(),
            seed: self.seed,
            generator_tag: self.generator_tag,
        })
    }

    /// CSV dump with header `t,B` and 17-significant-digit floats.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "t,B")?;
        for (t, b) in self.times.iter().zip(&self.values) {
            writeln!(w, "{t:.16e},{b:.16e}")?;
        }
        Ok(())
    }
}

/// Grid statistics of a path: sup norm and discrete (H - rho)-Hölder quotient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathStats {
    pub sup_norm: f64,
    pub holder_norm: f64,
    pub hurst: f64,
    pub rho: f64,
}

impl PathStats {
    /// The Hölder exponent H - rho the quotient was computed at.
    pub fn exponent(&self) -> f64 {
        self.hurst - self.rho
    }
}

/// Covariance of fractional Brownian motion, (t^2H + s^2H - |t-s|^2H) / 2.
pub fn covariance(s: f64, t: f64, hurst: f64) -> Result<f64> {
    check_hurst(hurst)?;
    if !(s >= 0.0 && t >= 0.0 && s.is_finite() && t.is_finite()) {
        return Err(Error::Domain(format!("times ({s}, {t}) must be finite and nonnegative")));
    }
    let two_h = 2.0 * hurst;
    Ok(0.5 * (t.powf(two_h) + s.powf(two_h) - (t - s).abs().powf(two_h)))
}

/// Sup norm and Hölder quotient over the discrete grid.
///
/// The quotient maximum is exact: for each lag the best increment is bounded
/// by the path range, and the range bound decreases with the lag, so the lag
/// scan stops once no larger quotient is possible. Worst case is the O(N^2)
/// double loop of the definition.
pub fn path_stats(path: &FbmPath, rho: f64) -> Result<PathStats> {
    if !(rho > 0.0 && rho < path.hurst) {
        return Err(Error::Domain(format!(
            "rho = {rho} must lie in (0, H) with H = {}",
            path.hurst
        )));
    }
    let exponent = path.hurst - rho;
    let v = &path.values;
    let n = path.grid_size();
    let dt = path.dt();

    let sup_norm = path.sup_norm();
    let (min, max) = v
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let range = max - min;

    let mut holder_norm = 0.0_f64;
    for lag in 1..=n {
        let denom = (lag as f64 * dt).powf(exponent);
        if range / denom <= holder_norm {
            break;
        }
        for i in 0..=(n - lag) {
            let q = (v[i + lag] - v[i]).abs() / denom;
            if q > holder_norm {
                holder_norm = q;
            }
        }
    }

    Ok(PathStats { sup_norm, holder_norm, hurst: path.hurst, rho })
}

/// Autocovariance of unit-spacing fractional Gaussian noise at lag `k`.
fn fgn_autocov(k: usize, hurst: f64) -> f64 {
    let two_h = 2.0 * hurst;
    let k = k as f64;
    0.5 * ((k + 1.0).powf(two_h) - 2.0 * k.powf(two_h) + (k - 1.0).abs().powf(two_h))
}

fn check_hurst(hurst: f64) -> Result<()> {
    if hurst > 0.0 && hurst < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("hurst = {hurst} must lie in (0, 1)")))
    }
}

fn check_grid(n: usize, horizon: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::Domain("grid size must be positive".into()));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::Domain(format!("horizon T = {horizon} must be positive")));
    }
    Ok(())
}

fn rng_for(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

fn cumsum_to_path(
    increments: &[f64],
    scale: f64,
    hurst: f64,
    horizon: f64,
    seed: u64,
    tag: GeneratorTag,
) -> FbmPath {
    let n = increments.len();
    let dt = horizon / n as f64;
    let mut values = Vec::with_capacity(n + 1);
    values.push(0.0);
    let mut acc = 0.0;
    for &x in increments {
        acc += scale * x;
        values.push(acc);
    }
    let times = (0..=n).map(|i| i as f64 * dt).collect();
    FbmPath { hurst, horizon, times, values, seed, generator_tag: tag }
}

/// Exact sampler backed by a dense Cholesky factor of the fGn covariance.
///
/// The factorization is done once per (N, T, H); sampling is O(N^2) per seed.
#[derive(Debug, Clone)]
pub struct CholeskyFbm {
    n: usize,
    horizon: f64,
    hurst: f64,
    /// Lower-triangular factor, row-packed: row i occupies i+1 entries.
    factor: Vec<f64>,
}

impl CholeskyFbm {
    pub fn new(n: usize, horizon: f64, hurst: f64) -> Result<Self> {
        Self::with_cap(n, horizon, hurst, CHOLESKY_GRID_CAP)
    }

    pub fn with_cap(n: usize, horizon: f64, hurst: f64, cap: usize) -> Result<Self> {
        check_grid(n, horizon)?;
        check_hurst(hurst)?;
        if n > cap {
            return Err(Error::Precondition(format!(
                "grid size {n} exceeds the Cholesky cap {cap}; use the circulant sampler"
            )));
        }
        let cov: Vec<f64> = (0..n).map(|k| fgn_autocov(k, hurst)).collect();
        let mut factor = vec![0.0_f64; n * (n + 1) / 2];
        let row = |i: usize| i * (i + 1) / 2;
        for i in 0..n {
            for j in 0..=i {
                let mut sum = cov[i - j];
                for k in 0..j {
                    sum -= factor[row(i) + k] * factor[row(j) + k];
                }
                if i == j {
                    if sum <= 0.0 || !sum.is_finite() {
                        return Err(Error::Factorization { pivot: i, diag: sum });
                    }
                    factor[row(i) + i] = sum.sqrt();
                } else {
                    factor[row(i) + j] = sum / factor[row(j) + j];
                }
            }
        }
        Ok(Self { n, horizon, hurst, factor })
    }

    /// Draws one path; deterministic per seed.
    pub fn sample(&self, seed: u64) -> FbmPath {
        let mut rng = rng_for(seed);
        let normals: Vec<f64> =
            (0..self.n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let row = |i: usize| i * (i + 1) / 2;
        let increments: Vec<f64> = (0..self.n)
            .map(|i| {
                let base = row(i);
                normals
                    .iter()
                    .take(i + 1)
                    .enumerate()
                    .map(|(k, z)| self.factor[base + k] * z)
                    .sum()
            })
            .collect();
        let scale = (self.horizon / self.n as f64).powf(self.hurst);
        cumsum_to_path(&increments, scale, self.hurst, self.horizon, seed, GeneratorTag::Cholesky)
    }
}

/// Circulant-embedding sampler of fractional Gaussian noise.
///
/// The embedding of the fGn autocovariance is nonnegative definite for every
/// H in (0, 1); a genuinely negative eigenvalue therefore reports an error
/// rather than being truncated. Eigenvalues within roundoff of zero are
/// clamped.
pub struct CirculantFbm {
    n: usize,
    horizon: f64,
    hurst: f64,
    sqrt_eigs: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for CirculantFbm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CirculantFbm")
            .field("n", &self.n)
            .field("horizon", &self.horizon)
            .field("hurst", &self.hurst)
            .finish()
    }
}

impl CirculantFbm {
    pub fn new(n: usize, horizon: f64, hurst: f64) -> Result<Self> {
        check_grid(n, horizon)?;
        check_hurst(hurst)?;
        let m = 2 * n;
        let mut buf: Vec<Complex<f64>> = (0..m)
            .map(|j| Complex::new(fgn_autocov(j.min(m - j), hurst), 0.0))
            .collect();
        let fft = FftPlanner::new().plan_fft_forward(m);
        fft.process(&mut buf);
        let eig_max = buf.iter().fold(0.0_f64, |a, c| a.max(c.re));
        let tol = 1e-10 * eig_max.max(1.0);
        let mut sqrt_eigs = Vec::with_capacity(m);
        let mut min_eig = f64::INFINITY;
        for c in &buf {
            min_eig = min_eig.min(c.re);
            sqrt_eigs.push(c.re.max(0.0).sqrt());
        }
        if min_eig < -tol {
            return Err(Error::NegativeEigenvalue { min_eigenvalue: min_eig });
        }
        Ok(Self { n, horizon, hurst, sqrt_eigs, fft })
    }

    /// Draws one path; deterministic per seed.
    pub fn sample(&self, seed: u64) -> FbmPath {
        let n = self.n;
        let m = 2 * n;
        let mut rng = rng_for(seed);
        let mut draw = || -> f64 { StandardNormal.sample(&mut rng) };
        let mut w = vec![Complex::new(0.0, 0.0); m];
        w[0] = Complex::new(self.sqrt_eigs[0] * draw(), 0.0);
        w[n] = Complex::new(self.sqrt_eigs[n] * draw(), 0.0);
        let half = 0.5_f64.sqrt();
        for k in 1..n {
            let a = draw();
            let b = draw();
            let amp = self.sqrt_eigs[k] * half;
            w[k] = Complex::new(amp * a, amp * b);
            w[m - k] = w[k].conj();
        }
        self.fft.process(&mut w);
        let norm = 1.0 / (m as f64).sqrt();
        let increments: Vec<f64> = w[..n].iter().map(|c| c.re * norm).collect();
        let scale = (self.horizon / n as f64).powf(self.hurst);
        cumsum_to_path(&increments, scale, self.hurst, self.horizon, seed, GeneratorTag::Circulant)
    }
}

/// One-shot Cholesky sample. Dominated by the O(N^3) setup; batch workloads
/// should hold a [`CholeskyFbm`] and reuse it across seeds.
pub fn generate_cholesky(n: usize, horizon: f64, hurst: f64, seed: u64) -> Result<FbmPath> {
    Ok(CholeskyFbm::new(n, horizon, hurst)?.sample(seed))
}

/// One-shot circulant-embedding sample.
pub fn generate_circulant(n: usize, horizon: f64, hurst: f64, seed: u64) -> Result<FbmPath> {
    Ok(CirculantFbm::new(n, horizon, hurst)?.sample(seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_mean_var(xs: &[f64]) -> (f64, f64) {
        let m = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / m;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (m - 1.0);
        (mean, var)
    }

    fn sample_cov(xs: &[f64], ys: &[f64]) -> f64 {
        let m = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / m;
        let my = ys.iter().sum::<f64>() / m;
        xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / (m - 1.0)
    }

    #[test]
    fn covariance_closed_form_values() {
        assert_eq!(covariance(1.0, 1.0, 0.3).unwrap(), 1.0);
        assert!((covariance(2.0, 1.0, 0.5).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(covariance(1.0, 0.0, 0.35).unwrap(), 0.0);
        assert!(covariance(1.0, 1.0, 1.2).is_err());
        assert!(covariance(-1.0, 1.0, 0.4).is_err());
    }

    #[test]
    fn generators_are_deterministic_per_seed() {
        let a = generate_cholesky(64, 1.0, 0.35, 99).unwrap();
        let b = generate_cholesky(64, 1.0, 0.35, 99).unwrap();
        assert_eq!(a.values(), b.values());
        let c = generate_circulant(64, 1.0, 0.35, 99).unwrap();
        let d = generate_circulant(64, 1.0, 0.35, 99).unwrap();
        assert_eq!(c.values(), d.values());
        let e = generate_circulant(64, 1.0, 0.35, 100).unwrap();
        assert_ne!(c.values(), e.values());
    }

    #[test]
    fn path_grid_invariants() {
        let p = generate_circulant(37, 2.5, 0.3, 7).unwrap();
        assert_eq!(p.values()[0], 0.0);
        assert_eq!(p.times().len(), 38);
        let dt = 2.5 / 37.0;
        for (i, t) in p.times().iter().enumerate() {
            assert!((t - i as f64 * dt).abs() <= 1e-12 * 2.5);
        }
    }

    #[test]
    fn cholesky_monte_carlo_covariance() {
        // Sample covariance of (B_{0.5}, B_{1.0}) against the closed form,
        // within 5 standard errors of the Gaussian covariance estimator.
        let n = 128;
        let h = 0.3;
        let sampler = CholeskyFbm::new(n, 1.0, h).unwrap();
        let m = 4000;
        let mut xs = Vec::with_capacity(m);
        let mut ys = Vec::with_capacity(m);
        for seed in 0..m as u64 {
            let p = sampler.sample(seed);
            xs.push(p.values()[n / 2]);
            ys.push(p.values()[n]);
        }
        let expect = covariance(0.5, 1.0, h).unwrap();
        let vx = covariance(0.5, 0.5, h).unwrap();
        let vy = covariance(1.0, 1.0, h).unwrap();
        let se = ((vx * vy + expect * expect) / (m as f64 - 1.0)).sqrt();
        let got = sample_cov(&xs, &ys);
        assert!(
            (got - expect).abs() <= 5.0 * se,
            "cov {got} vs {expect}, se {se}"
        );
    }

    #[test]
    fn brownian_special_case_increment_variance() {
        let n = 64;
        let sampler = CholeskyFbm::new(n, 1.0, 0.5).unwrap();
        let m = 10_000;
        let dt = 1.0 / n as f64;
        let mut incs = Vec::with_capacity(m);
        for seed in 0..m as u64 {
            let p = sampler.sample(seed);
            incs.push(p.values()[17] - p.values()[16]);
        }
        let (_, var) = sample_mean_var(&incs);
        // Var of the sample variance of a Gaussian is 2 sigma^4 / (m-1).
        let se = (2.0 * dt * dt / (m as f64 - 1.0)).sqrt();
        assert!((var - dt).abs() <= 5.0 * se, "var {var} vs {dt}, se {se}");
    }

    #[test]
    fn circulant_single_step_variance() {
        let m = 20_000;
        let t = 0.7;
        let h = 0.35;
        let sampler = CirculantFbm::new(1, t, h).unwrap();
        let vals: Vec<f64> = (0..m as u64).map(|s| sampler.sample(s).values()[1]).collect();
        let (_, var) = sample_mean_var(&vals);
        let expect = t.powf(2.0 * h);
        let se = (2.0 * expect * expect / (m as f64 - 1.0)).sqrt();
        assert!((var - expect).abs() <= 5.0 * se);
    }

    #[test]
    fn samplers_agree_in_law() {
        // Two-sample moment comparison of fixed linear functionals.
        let n = 64;
        let h = 0.4;
        let chol = CholeskyFbm::new(n, 1.0, h).unwrap();
        let circ = CirculantFbm::new(n, 1.0, h).unwrap();
        let m = 4000;
        let f = |p: &FbmPath| p.values()[n] - 0.5 * p.values()[n / 4];
        let a: Vec<f64> = (0..m as u64).map(|s| f(&chol.sample(s))).collect();
        let b: Vec<f64> = (0..m as u64).map(|s| f(&circ.sample(s + 1_000_000))).collect();
        let (ma, va) = sample_mean_var(&a);
        let (mb, vb) = sample_mean_var(&b);
        let mf = m as f64;
        let se_mean = (va / mf + vb / mf).sqrt();
        assert!((ma - mb).abs() <= 5.0 * se_mean, "means {ma} vs {mb}");
        let se_var = (2.0 * va * va / (mf - 1.0) + 2.0 * vb * vb / (mf - 1.0)).sqrt();
        assert!((va - vb).abs() <= 5.0 * se_var, "vars {va} vs {vb}");
    }

    #[test]
    fn self_similarity_in_law() {
        // B(T=c) at the terminal time vs c^H B(T=1): compare variances.
        let n = 32;
        let h = 0.3;
        let c = 3.0_f64;
        let unit = CirculantFbm::new(n, 1.0, h).unwrap();
        let scaled = CirculantFbm::new(n, c, h).unwrap();
        let m = 4000;
        let a: Vec<f64> =
            (0..m as u64).map(|s| unit.sample(s).values()[n] * c.powf(h)).collect();
        let b: Vec<f64> = (0..m as u64).map(|s| scaled.sample(s + 777).values()[n]).collect();
        let (_, va) = sample_mean_var(&a);
        let (_, vb) = sample_mean_var(&b);
        let se = (2.0 * va * va / (m as f64 - 1.0) + 2.0 * vb * vb / (m as f64 - 1.0)).sqrt();
        assert!((va - vb).abs() <= 5.0 * se);
    }

    #[test]
    fn stationary_increments_variance() {
        let n = 64;
        let h = 0.45;
        let sampler = CirculantFbm::new(n, 1.0, h).unwrap();
        let m = 4000;
        let dt = 1.0 / n as f64;
        for (i, j) in [(3usize, 11usize), (40, 57)] {
            let incs: Vec<f64> = (0..m as u64)
                .map(|s| {
                    let p = sampler.sample(s);
                    p.values()[j] - p.values()[i]
                })
                .collect();
            let (_, var) = sample_mean_var(&incs);
            let expect = ((j - i) as f64 * dt).powf(2.0 * h);
            let se = (2.0 * expect * expect / (m as f64 - 1.0)).sqrt();
            assert!((var - expect).abs() <= 5.0 * se, "lag {}", j - i);
        }
    }

    #[test]
    fn stats_of_flat_and_linear_paths() {
        let zero = FbmPath::from_values(0.26, 1.0, vec![0.0; 65], 0, GeneratorTag::Synthetic)
            .unwrap();
        let s = path_stats(&zero, 0.01).unwrap();
        assert_eq!(s.sup_norm, 0.0);
        assert_eq!(s.holder_norm, 0.0);

        // Linear path B_t = t with exponent H - rho = 0.25: the quotient
        // (t_j - t_i)^{0.75} is maximized by the full interval.
        let n = 64;
        let vals: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        let lin = FbmPath::from_values(0.26, 1.0, vals, 0, GeneratorTag::Synthetic).unwrap();
        let s = path_stats(&lin, 0.01).unwrap();
        assert!((s.sup_norm - 1.0).abs() < 1e-15);
        assert!((s.holder_norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn holder_norm_matches_brute_force() {
        let p = generate_circulant(256, 1.0, 0.35, 4242).unwrap();
        let rho = 0.02;
        let fast = path_stats(&p, rho).unwrap().holder_norm;
        let exponent = p.hurst() - rho;
        let v = p.values();
        let t = p.times();
        let mut brute = 0.0_f64;
        for i in 0..v.len() {
            for j in (i + 1)..v.len() {
                brute = brute.max((v[j] - v[i]).abs() / (t[j] - t[i]).powf(exponent));
            }
        }
        assert_eq!(fast, brute);
    }

    #[test]
    fn stats_reject_bad_rho() {
        let p = generate_circulant(16, 1.0, 0.3, 1).unwrap();
        assert!(path_stats(&p, 0.3).is_err());
        assert!(path_stats(&p, 0.35).is_err());
        assert!(path_stats(&p, 0.0).is_err());
    }

    #[test]
    fn cholesky_cap_enforced() {
        assert!(CholeskyFbm::new(CHOLESKY_GRID_CAP + 1, 1.0, 0.4).is_err());
    }

    #[test]
    fn subsample_shares_nodes() {
        let p = generate_circulant(64, 1.0, 0.35, 5).unwrap();
        let q = p.subsample(8).unwrap();
        assert_eq!(q.grid_size(), 8);
        for i in 0..=8 {
            assert_eq!(q.values()[i], p.values()[8 * i]);
            assert_eq!(q.times()[i], p.times()[8 * i]);
        }
        assert!(p.subsample(7).is_err());
    }

    #[test]
    fn csv_dump_format() {
        let p = FbmPath::from_values(0.3, 1.0, vec![0.0, 0.5], 3, GeneratorTag::Synthetic)
            .unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,B"));
        assert_eq!(lines.next(), Some("0.0000000000000000e0,0.0000000000000000e0"));
        assert_eq!(lines.next(), Some("1.0000000000000000e0,5.0000000000000000e-1"));
    }
}
