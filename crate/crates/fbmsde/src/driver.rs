//! The auxiliary state: its exact drift under the oracle flow, the drift
//! g^l under the Taylor flow with its u-derivative h1^l, reference
//! integrators for Y, and the derivative-corrected Euler rule that advances
//! the fully discrete state.
//!
//! Reference integrators advance with a classical fourth-order step on the
//! simulation grid, interpolating the driving path linearly between nodes.
//! The discrete scheme consumes the q-times-finer simulation grid to
//! evaluate its time integral of (B_s - B_{t_k}) by the composite trapezoid
//! rule; q is carried in the provenance so its influence stays measurable.

use std::io::Write;

use serde::Serialize;

use crate::coeffs::CoefficientPair;
use crate::error::{Error, Result};
use crate::fbm::FbmPath;
use crate::flow::{solve_phi_with_exponent, PiecewiseFlow, Side};

/// What a trajectory is a sample of.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TrajectoryKind {
    /// Oracle auxiliary state (exact flow, adaptive inner solves).
    YExact,
    /// Auxiliary state under the level-l Taylor flow, exact in time.
    YLevel,
    /// Fully discrete auxiliary state (corrected Euler).
    YScheme,
    /// Oracle solution X.
    XExact,
    /// Scheme solution X^n.
    XScheme,
}

impl TrajectoryKind {
    pub fn label(&self) -> &'static str {
        match self {
            TrajectoryKind::YExact => "Y_exact",
            TrajectoryKind::YLevel => "Y_l",
            TrajectoryKind::YScheme => "Y_nn",
            TrajectoryKind::XExact => "X_exact",
            TrajectoryKind::XScheme => "X_n",
        }
    }
}

/// Where a trajectory came from.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub coeffs_tag: String,
    pub seed: u64,
    pub n: Option<usize>,
    pub level: Option<usize>,
    pub q: Option<usize>,
    pub tol: Option<f64>,
}

/// A time grid (subset of the simulation grid) with sampled values.
#[derive(Debug, Clone)]
pub struct Trajectory {
    times: Vec<f64>,
    values: Vec<f64>,
    kind: TrajectoryKind,
    provenance: Provenance,
}

impl Trajectory {
    pub fn new(
        times: Vec<f64>,
        values: Vec<f64>,
        kind: TrajectoryKind,
        provenance: Provenance,
    ) -> Result<Self> {
        if times.len() != values.len() || times.is_empty() {
            return Err(Error::Precondition(format!(
                "trajectory needs matching nonempty grids: {} times, {} values",
                times.len(),
                values.len()
            )));
        }
        Ok(Self { times, values, kind, provenance })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn kind(&self) -> TrajectoryKind {
        self.kind
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// View on every `stride`-th node.
    pub fn restrict(&self, stride: usize) -> Result<Self> {
        if stride == 0 || !(self.times.len() - 1).is_multiple_of(stride) {
            return Err(Error::Precondition(format!(
                "stride {stride} does not divide {} steps",
                self.times.len() - 1
            )));
        }
        Ok(Self {
            times: self.times.iter().step_by(stride).copied().collect(),
            values: self.values.iter().step_by(stride).copied().collect(),
            kind: self.kind,
            provenance: self.provenance.clone(),
        })
    }

    /// CSV dump `t,value` with `#`-prefixed provenance header lines.
    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        let p = &self.provenance;
        writeln!(w, "# kind: {}", self.kind.label())?;
        writeln!(w, "# coeffs: {}", p.coeffs_tag)?;
        writeln!(w, "# seed: {}", p.seed)?;
        let opt = |v: Option<usize>| v.map_or("-".to_string(), |x| x.to_string());
        writeln!(
            w,
            "# n: {}, level: {}, q: {}, tol: {}",
            opt(p.n),
            opt(p.level),
            opt(p.q),
            p.tol.map_or("-".to_string(), |t| format!("{t:e}"))
        )?;
        writeln!(w, "t,value")?;
        for (t, v) in self.times.iter().zip(&self.values) {
            writeln!(w, "{t:.16e},{v:.16e}")?;
        }
        Ok(())
    }
}

fn g_with_nodes(
    coeffs: &CoefficientPair,
    flow: &PiecewiseFlow,
    nodes: &[f64],
    u: f64,
) -> Result<f64> {
    let q = flow.sigma_prime_psi_integral(nodes, u)?;
    Ok((-q).exp() * coeffs.b(flow.psi_with_nodes(nodes, u)?))
}

fn h1_with_nodes(
    coeffs: &CoefficientPair,
    flow: &PiecewiseFlow,
    nodes: &[f64],
    u: f64,
) -> Result<f64> {
    let q = flow.sigma_prime_psi_integral(nodes, u)?;
    let psi = flow.psi_with_nodes(nodes, u)?;
    let du = flow.psi_du_with_nodes(nodes, u, Side::Right)?;
    let damp = (-q).exp();
    let g = damp * coeffs.b(psi);
    Ok(-g * coeffs.sigma_prime(psi) + damp * coeffs.b_prime(psi) * du)
}

/// Drift of the auxiliary state under the Taylor flow:
/// exp(-integral of sigma'(psi(z, .)) over [0, B_s]) b(psi(z, B_s)).
pub fn g_l(coeffs: &CoefficientPair, flow: &PiecewiseFlow, b_s: f64, z: f64) -> Result<f64> {
    let nodes = flow.psi_nodes(z);
    g_with_nodes(coeffs, flow, &nodes, b_s)
}

/// u-derivative of `g_l`, with the right-sided flow derivative at partition
/// nodes (matching the one-sided-Taylor convention of the error analysis).
pub fn h1_l(coeffs: &CoefficientPair, flow: &PiecewiseFlow, u: f64, z: f64) -> Result<f64> {
    let nodes = flow.psi_nodes(z);
    h1_with_nodes(coeffs, flow, &nodes, u)
}

/// Fourth-order fixed-step advance over the simulation grid, with the
/// driving path interpolated linearly inside each step.
fn rk4_on_path(
    path: &FbmPath,
    x0: f64,
    mut drift: impl FnMut(f64, f64) -> Result<f64>,
) -> Result<Vec<f64>> {
    let b = path.values();
    let h = path.dt();
    let mut values = Vec::with_capacity(b.len());
    values.push(x0);
    let mut y = x0;
    for i in 0..path.grid_size() {
        let b0 = b[i];
        let b1 = b[i + 1];
        let bm = 0.5 * (b0 + b1);
        let k1 = drift(b0, y)?;
        let k2 = drift(bm, y + 0.5 * h * k1)?;
        let k3 = drift(bm, y + 0.5 * h * k2)?;
        let k4 = drift(b1, y + h * k3)?;
        y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if !y.is_finite() {
            return Err(Error::StepUnderflow { h });
        }
        values.push(y);
    }
    Ok(values)
}

/// Oracle trajectory of the auxiliary state on the simulation grid. Inner
/// flow and exponent solves run the adaptive reference integrator at `tol`.
pub fn integrate_y_exact(
    coeffs: &CoefficientPair,
    path: &FbmPath,
    x0: f64,
    tol: f64,
) -> Result<Trajectory> {
    let values = rk4_on_path(path, x0, |b_val, y| {
        let (phi, a) = solve_phi_with_exponent(coeffs, y, b_val, tol)?;
        Ok((-a).exp() * coeffs.b(phi))
    })?;
    Trajectory::new(
        path.times().to_vec(),
        values,
        TrajectoryKind::YExact,
        Provenance {
            coeffs_tag: coeffs.family_tag().to_string(),
            seed: path.seed(),
            n: None,
            level: None,
            q: None,
            tol: Some(tol),
        },
    )
}

/// Auxiliary state under the level-l Taylor flow, advanced by the same
/// fourth-order rule (exact in time up to grid resolution; no extra
/// tolerance knob, the drift quadrature is fixed-order).
pub fn integrate_y_l(
    coeffs: &CoefficientPair,
    flow: &PiecewiseFlow,
    path: &FbmPath,
    x0: f64,
) -> Result<Trajectory> {
    let values = rk4_on_path(path, x0, |b_val, y| {
        let nodes = flow.psi_nodes(y);
        g_with_nodes(coeffs, flow, &nodes, b_val)
    })?;
    Trajectory::new(
        path.times().to_vec(),
        values,
        TrajectoryKind::YLevel,
        Provenance {
            coeffs_tag: coeffs.family_tag().to_string(),
            seed: path.seed(),
            n: None,
            level: Some(flow.level()),
            q: None,
            tol: None,
        },
    )
}

/// Options for the discrete scheme stepper.
#[derive(Debug, Clone, Copy, Default)]
pub struct StepOptions {
    /// Kahan-compensate the state accumulation (roundoff studies). The
    /// default plain summation is bit-reproducible and matches the scheme's
    /// plain update order.
    pub compensated: bool,
}

#[allow(clippy::too_many_arguments)]
fn scheme_core(
    coeffs: &CoefficientPair,
    flow: &PiecewiseFlow,
    path: &FbmPath,
    x0: f64,
    n: usize,
    q: usize,
    opts: StepOptions,
    dense: bool,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 || q == 0 || path.grid_size() != n * q {
        return Err(Error::Precondition(format!(
            "simulation grid {} must equal n q = {n} x {q}",
            path.grid_size()
        )));
    }
    let guard = 10.0 * flow.truncation_m();
    let b = path.values();
    let dt = path.dt();
    let mut y = x0;
    let mut comp = 0.0_f64; // Kahan carry
    let cap = if dense { n * q + 1 } else { n + 1 };
    let mut times = Vec::with_capacity(cap);
    let mut values = Vec::with_capacity(cap);
    times.push(path.times()[0]);
    values.push(x0);

    for k in 0..n {
        let base = k * q;
        let b_k = b[base];
        let nodes = flow.psi_nodes(y);
        let g = g_with_nodes(coeffs, flow, &nodes, b_k)?;
        let h1 = h1_with_nodes(coeffs, flow, &nodes, b_k)?;

        let mut integral = 0.0_f64;
        let mut prev = 0.0_f64;
        let mut y_end = y;
        for j in 1..=q {
            let cur = b[base + j] - b_k;
            integral += 0.5 * dt * (prev + cur);
            prev = cur;
            let elapsed = dt * j as f64;
            let along = y + elapsed * g + h1 * integral;
            if dense {
                times.push(path.times()[base + j]);
                values.push(along);
            }
            if j == q {
                y_end = along;
            }
        }
        if opts.compensated {
            let inc = (y_end - y) - comp;
            let sum = y + inc;
            comp = (sum - y) - inc;
            y = sum;
        } else {
            y = y_end;
        }
        if !y.is_finite() || y.abs() > guard {
            return Err(Error::BoundExceeded {
                value: y,
                guard,
                bound: flow.truncation_m(),
            });
        }
        if !dense {
            times.push(path.times()[base + q]);
            values.push(y);
        } else if opts.compensated {
            *values.last_mut().expect("nonempty") = y;
        }
    }
    Ok((times, values))
}

fn scheme_provenance(coeffs: &CoefficientPair, flow: &PiecewiseFlow, path: &FbmPath, n: usize, q: usize) -> Provenance {
    Provenance {
        coeffs_tag: coeffs.family_tag().to_string(),
        seed: path.seed(),
        n: Some(n),
        level: Some(flow.level()),
        q: Some(q),
        tol: None,
    }
}

/// Fully discrete auxiliary state by the derivative-corrected Euler rule:
/// each step advances by dt g + h1 integral of (B_s - B_{t_k}), the integral
/// evaluated by the composite trapezoid rule on the q sub-nodes. Values are
/// recorded at the scheme nodes t_k = k T / n.
pub fn step_scheme_y(
    coeffs: &CoefficientPair,
    flow: &PiecewiseFlow,
    path: &FbmPath,
    x0: f64,
    n: usize,
    q: usize,
) -> Result<Trajectory> {
    step_scheme_y_with(coeffs, flow, path, x0, n, q, StepOptions::default())
}

pub fn step_scheme_y_with(
    coeffs: &CoefficientPair,
    flow: &PiecewiseFlow,
    path: &FbmPath,
    x0: f64,
    n: usize,
    q: usize,
    opts: StepOptions,
) -> Result<Trajectory> {
    let (times, values) = scheme_core(coeffs, flow, path, x0, n, q, opts, false)?;
    Trajectory::new(times, values, TrajectoryKind::YScheme, scheme_provenance(coeffs, flow, path, n, q))
}

/// Same advance recorded at every simulation node (the between-node values
/// of the corrected Euler rule), for increment-bound checks.
pub fn step_scheme_y_dense(
    coeffs: &CoefficientPair,
    flow: &PiecewiseFlow,
    path: &FbmPath,
    x0: f64,
    n: usize,
    q: usize,
) -> Result<Trajectory> {
    let (times, values) =
        scheme_core(coeffs, flow, path, x0, n, q, StepOptions::default(), true)?;
    Trajectory::new(times, values, TrajectoryKind::YScheme, scheme_provenance(coeffs, flow, path, n, q))
}
