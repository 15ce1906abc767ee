//! The transport flow of the diffusion coefficient and its two computable
//! approximations.
//!
//! `solve_phi_reference` integrates d(phi)/du = sigma(phi) with an adaptive
//! embedded Runge–Kutta pair and serves as the oracle. [`PiecewiseFlow`]
//! carries the level-l partition of [-R, R] (R the realized sup norm of the
//! driving path) and evaluates
//!
//! * `psi` — the piecewise first-order Taylor flow: across each cell the
//!   state advances by d(sigma(v) + sigma sigma'(v) d/2), the closed-form
//!   rule the scheme runs on;
//! * `phi_euler` — the intermediate cell-frozen Euler flow, whose cell
//!   integral has no closed form and is evaluated by 8-point Gauss panels;
//! * `psi_du` — the one-sided u-derivative of `psi`, which jumps at
//!   partition nodes.
//!
//! Walking the recursion anchors on the lower node of a cell for u > 0 and
//! on the upper node for u < 0, matching the direction both recursions are
//! built in. Outside [-R, R] evaluation is a domain error: trajectories of a
//! well-posed run never leave the box, so an excursion is a bug worth
//! surfacing rather than a value to zero-fill.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use crate::coeffs::CoefficientPair;
use crate::error::{Error, Result};
use crate::ode::dormand_prince;
use crate::quad::{gauss_legendre_4, gauss_legendre_8};

/// Default capacity of the per-start-point node cache.
pub const NODE_CACHE_CAPACITY: usize = 1 << 16;

/// Uniform symmetric partition u_i = i R / l, i = -l..l, of [-R, R].
#[derive(Debug, Clone)]
pub struct FlowPartition {
    radius: f64,
    level: usize,
    nodes: Vec<f64>,
}

impl FlowPartition {
    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn spacing(&self) -> f64 {
        self.radius / self.level as f64
    }

    /// All 2l + 1 nodes in ascending order.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Node u_i for i in [-l, l].
    pub fn node(&self, i: isize) -> f64 {
        let l = self.level as isize;
        debug_assert!(i >= -l && i <= l);
        i as f64 * self.spacing()
    }
}

/// Builds the level-l partition of [-R, R]; u_{-i} = -u_i by construction.
pub fn build_partition(radius: f64, level: usize) -> Result<FlowPartition> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::Domain(format!("partition radius {radius} must be positive")));
    }
    if level == 0 {
        return Err(Error::Domain("partition level must be positive".into()));
    }
    let spacing = radius / level as f64;
    let l = level as isize;
    let nodes = (-l..=l).map(|i| i as f64 * spacing).collect();
    Ok(FlowPartition { radius, level, nodes })
}

struct NodeCache {
    map: HashMap<u64, (Arc<Vec<f64>>, u64)>,
    clock: u64,
    capacity: usize,
}

impl NodeCache {
    fn new(capacity: usize) -> Self {
        Self { map: HashMap::new(), clock: 0, capacity }
    }

    fn get_or_insert(&mut self, key: u64, build: impl FnOnce() -> Vec<f64>) -> Arc<Vec<f64>> {
        self.clock += 1;
        let clock = self.clock;
        if let Some((nodes, used)) = self.map.get_mut(&key) {
            *used = clock;
            return nodes.clone();
        }
        if self.map.len() >= self.capacity {
            // Drop the least-recently-used half in one pass.
            let mut stamps: Vec<u64> = self.map.values().map(|(_, used)| *used).collect();
            stamps.sort_unstable();
            let cutoff = stamps[stamps.len() / 2];
            self.map.retain(|_, (_, used)| *used > cutoff);
        }
        let nodes = Arc::new(build());
        self.map.insert(key, (nodes.clone(), clock));
        nodes
    }
}

/// Evaluation side for the one-sided u-derivative.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Level-l piecewise flows on a partition, with per-start-point node caches.
///
/// Evaluation is logically pure; the caches are interior-mutable behind a
/// mutex, so concurrent calls return the same values as serial calls.
pub struct PiecewiseFlow {
    partition: FlowPartition,
    coeffs: CoefficientPair,
    truncation_m: f64,
    psi_cache: Mutex<NodeCache>,
    phi_cache: Mutex<NodeCache>,
}

impl std::fmt::Debug for PiecewiseFlow {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PiecewiseFlow")
            .field("partition", &self.partition)
            .field("coeffs", &self.coeffs)
            .field("truncation_m", &self.truncation_m)
            .finish()
    }
}

impl PiecewiseFlow {
    pub fn new(partition: FlowPartition, coeffs: CoefficientPair, truncation_m: f64) -> Self {
        Self::with_cache_capacity(partition, coeffs, truncation_m, NODE_CACHE_CAPACITY)
    }

    pub fn with_cache_capacity(
        partition: FlowPartition,
        coeffs: CoefficientPair,
        truncation_m: f64,
        capacity: usize,
    ) -> Self {
        Self {
            partition,
            coeffs,
            truncation_m,
            psi_cache: Mutex::new(NodeCache::new(capacity.max(1))),
            phi_cache: Mutex::new(NodeCache::new(capacity.max(1))),
        }
    }

    pub fn partition(&self) -> &FlowPartition {
        &self.partition
    }

    pub fn coeffs(&self) -> &CoefficientPair {
        &self.coeffs
    }

    pub fn radius(&self) -> f64 {
        self.partition.radius
    }

    pub fn level(&self) -> usize {
        self.partition.level
    }

    /// The a-priori state bound M the flow was built for.
    pub fn truncation_m(&self) -> f64 {
        self.truncation_m
    }

    #[inline]
    fn taylor_step(&self, v: f64, d: f64) -> f64 {
        let s = self.coeffs.sigma(v);
        v + d * (s + s * self.coeffs.sigma_prime(v) * d * 0.5)
    }

    fn check_u(&self, u: f64) -> Result<()> {
        if u.abs() <= self.partition.radius && u.is_finite() {
            Ok(())
        } else {
            Err(Error::FlowDomain { u, radius: self.partition.radius })
        }
    }

    /// Cell index and anchor for evaluating at `u`. Returns (anchor node
    /// index offset into the node array, anchor abscissa).
    ///
    /// The scaled coordinate u / spacing is snapped to an integer when it
    /// sits within a few ulps of one, so querying at a node abscissa always
    /// gets node semantics (one-sided derivatives genuinely differ there;
    /// an ulp of division drift must not merge the two cells).
    fn anchor_for(&self, u: f64, side: Side) -> (usize, f64) {
        let l = self.partition.level as isize;
        let spacing = self.partition.spacing();
        let raw = u / spacing;
        let rounded = raw.round();
        let x = if (raw - rounded).abs() <= 32.0 * f64::EPSILON * raw.abs().max(1.0) {
            rounded
        } else {
            raw
        };
        let k = if u > 0.0 {
            // Cells (u_{k-1}, u_k] anchored at u_{k-1}, k = 1..l.
            let k = match side {
                Side::Left => x.ceil() as isize,
                Side::Right => x.floor() as isize + 1,
            };
            k.clamp(1, l) - 1
        } else {
            // Cells [u_{k-1}, u_k) anchored at u_k, k = -l+1..0.
            let k = match side {
                Side::Left => x.ceil() as isize,
                Side::Right => x.floor() as isize + 1,
            };
            k.clamp(-l + 1, 0)
        };
        (((k + l) as usize), k as f64 * spacing)
    }

    /// Cached node values of the Taylor flow started at z.
    pub fn psi_nodes(&self, z: f64) -> Arc<Vec<f64>> {
        let mut cache = self.psi_cache.lock().expect("flow cache poisoned");
        cache.get_or_insert(z.to_bits(), || {
            let l = self.partition.level;
            let d = self.partition.spacing();
            let mut nodes = vec![0.0; 2 * l + 1];
            nodes[l] = z;
            for k in 1..=l {
                nodes[l + k] = self.taylor_step(nodes[l + k - 1], d);
                nodes[l - k] = self.taylor_step(nodes[l - k + 1], -d);
            }
            nodes
        })
    }

    /// Cached node values of the cell-frozen Euler flow started at z.
    pub fn phi_nodes(&self, z: f64) -> Arc<Vec<f64>> {
        let mut cache = self.phi_cache.lock().expect("flow cache poisoned");
        cache.get_or_insert(z.to_bits(), || {
            let l = self.partition.level;
            let d = self.partition.spacing();
            let mut nodes = vec![0.0; 2 * l + 1];
            nodes[l] = z;
            for k in 1..=l {
                nodes[l + k] = self.euler_cell_step(nodes[l + k - 1], d);
                nodes[l - k] = self.euler_cell_step(nodes[l - k + 1], -d);
            }
            nodes
        })
    }

    /// Anchor value plus the cell integral of sigma along the frozen Euler
    /// ray, integrated from the anchor to a signed offset `d`.
    fn euler_cell_step(&self, v: f64, d: f64) -> f64 {
        let s = self.coeffs.sigma(v);
        v + gauss_legendre_8(|w| self.coeffs.sigma(v + w * s), 0.0, d)
    }

    /// Taylor flow at (z, u) using prefetched nodes.
    pub fn psi_with_nodes(&self, nodes: &[f64], u: f64) -> Result<f64> {
        self.check_u(u)?;
        if u == 0.0 {
            return Ok(nodes[self.partition.level]);
        }
        let (idx, a) = self.anchor_for(u, Side::Left);
        Ok(self.taylor_step(nodes[idx], u - a))
    }

    pub fn psi(&self, z: f64, u: f64) -> Result<f64> {
        let nodes = self.psi_nodes(z);
        self.psi_with_nodes(&nodes, u)
    }

    /// Cell-frozen Euler flow at (z, u) using prefetched nodes.
    pub fn phi_euler_with_nodes(&self, nodes: &[f64], u: f64) -> Result<f64> {
        self.check_u(u)?;
        if u == 0.0 {
            return Ok(nodes[self.partition.level]);
        }
        let (idx, a) = self.anchor_for(u, Side::Left);
        Ok(self.euler_cell_step(nodes[idx], u - a))
    }

    pub fn phi_euler(&self, z: f64, u: f64) -> Result<f64> {
        let nodes = self.phi_nodes(z);
        self.phi_euler_with_nodes(&nodes, u)
    }

    /// One-sided u-derivative of the Taylor flow implied by its cell rule:
    /// sigma(v_a) + sigma sigma'(v_a) (u - a) with a the anchor of the cell
    /// on the requested side. At interior nodes the two sides differ by the
    /// derivative jump of the piecewise rule; at u = ±R the side pointing
    /// out of the box falls back to the boundary cell.
    pub fn psi_du_with_nodes(&self, nodes: &[f64], u: f64, side: Side) -> Result<f64> {
        self.check_u(u)?;
        if u == 0.0 {
            let z = nodes[self.partition.level];
            return Ok(self.coeffs.sigma(z));
        }
        let (idx, a) = self.anchor_for(u, side);
        let v = nodes[idx];
        let s = self.coeffs.sigma(v);
        Ok(s + s * self.coeffs.sigma_prime(v) * (u - a))
    }

    pub fn psi_du(&self, z: f64, u: f64, side: Side) -> Result<f64> {
        let nodes = self.psi_nodes(z);
        self.psi_du_with_nodes(&nodes, u, side)
    }

    /// Integral of sigma'(psi(z, .)) from 0 to v, by 4-point Gauss panels
    /// aligned with the partition cells (psi is quadratic inside a cell, so
    /// each panel integrand is smooth).
    pub fn sigma_prime_psi_integral(&self, nodes: &[f64], v: f64) -> Result<f64> {
        self.check_u(v)?;
        if v == 0.0 {
            return Ok(0.0);
        }
        let l = self.partition.level as isize;
        let spacing = self.partition.spacing();
        let mut total = 0.0;
        if v > 0.0 {
            for k in 1..=l {
                let lo = (k - 1) as f64 * spacing;
                if lo >= v {
                    break;
                }
                let hi = (k as f64 * spacing).min(v);
                let anchor = nodes[(k - 1 + l) as usize];
                total += gauss_legendre_4(
                    |w| self.coeffs.sigma_prime(self.taylor_step(anchor, w - lo)),
                    lo,
                    hi,
                );
            }
        } else {
            for k in (0..=0).chain((-l + 1..0).rev()) {
                let hi = k as f64 * spacing;
                if hi <= v {
                    break;
                }
                let lo = (((k - 1) as f64) * spacing).max(v);
                let anchor = nodes[(k + l) as usize];
                // Signed panel from the anchor downward.
                total += gauss_legendre_4(
                    |w| self.coeffs.sigma_prime(self.taylor_step(anchor, w - hi)),
                    hi,
                    lo,
                );
            }
        }
        Ok(total)
    }

    /// Sup over cells of |d^2 psi / du^2| = |sigma sigma'| at the cell
    /// anchors; the per-cell curvature constant of the Taylor flow.
    pub fn psi_curvature_sup(&self, nodes: &[f64]) -> f64 {
        let l = self.partition.level;
        // Positive cells anchor at indices l..2l-1, negative at 1..=l.
        nodes[1..2 * l]
            .iter()
            .map(|&v| (self.coeffs.sigma(v) * self.coeffs.sigma_prime(v)).abs())
            .fold(0.0, f64::max)
    }
}

/// Oracle flow value phi(z, u) by adaptive Dormand–Prince integration of
/// d(phi)/ds = sigma(phi) from 0 to u; local error controlled to `tol`.
/// Documented global accuracy is <= 100 tol |u| for the C^2_b coefficients
/// this library accepts.
pub fn solve_phi_reference(coeffs: &CoefficientPair, z: f64, u: f64, tol: f64) -> Result<f64> {
    if tol < 1e-13 {
        return Err(Error::Precondition(format!("tolerance {tol} below the supported 1e-13")));
    }
    let y = dormand_prince(|y: &[f64; 1]| [coeffs.sigma(y[0])], [z], u, tol)?;
    Ok(y[0])
}

/// Oracle flow together with the exponent A(z, u) = integral of
/// sigma'(phi(z, s)) ds from 0 to u, so exp(A) is d(phi)/d(alpha). The pair
/// satisfies a coupled autonomous system and is integrated jointly.
pub fn solve_phi_with_exponent(
    coeffs: &CoefficientPair,
    z: f64,
    u: f64,
    tol: f64,
) -> Result<(f64, f64)> {
    if tol < 1e-13 {
        return Err(Error::Precondition(format!("tolerance {tol} below the supported 1e-13")));
    }
    let y = dormand_prince(
        |y: &[f64; 2]| [coeffs.sigma(y[0]), coeffs.sigma_prime(y[0])],
        [z, 0.0],
        u,
        tol,
    )?;
    Ok((y[0], y[1]))
}
