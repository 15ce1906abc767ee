//! Remainder inequality for piecewise-C^2 functions with one-sided
//! derivatives: for x in one cell and y in a later cell,
//!
//!   |f(y) - f(x) - f'(x+)(y - x)|
//!     <= C/2 (y - x)^2 + sum over interior nodes u between x and y of
//!        |f'(u+) - f'(u-)| (y - u),
//!
//! with C the sup over cells of |f''|. The suite exercises a globally
//! smooth function (no jump terms), a piecewise-linear kink (equality
//! witness), and the Taylor flow itself.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::{PiecewiseFlow, Side};

type ScalarFn = Box<dyn Fn(f64) -> f64 + Send + Sync>;

/// A piecewise-C^2 function on a partition, with one-sided derivative
/// evaluators and the per-cell curvature sup supplied by the caller.
pub struct PiecewiseC2 {
    label: String,
    nodes: Vec<f64>,
    eval: ScalarFn,
    deriv_left: ScalarFn,
    deriv_right: ScalarFn,
    curvature_sup: f64,
}

impl std::fmt::Debug for PiecewiseC2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PiecewiseC2")
            .field("label", &self.label)
            .field("nodes", &self.nodes.len())
            .field("curvature_sup", &self.curvature_sup)
            .finish()
    }
}

impl PiecewiseC2 {
    pub fn new(
        label: impl Into<String>,
        nodes: Vec<f64>,
        eval: ScalarFn,
        deriv_left: ScalarFn,
        deriv_right: ScalarFn,
        curvature_sup: f64,
    ) -> Result<Self> {
        if nodes.len() < 2 || !nodes.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Precondition(
                "partition must have at least two strictly increasing nodes".into(),
            ));
        }
        if !(curvature_sup >= 0.0 && curvature_sup.is_finite()) {
            return Err(Error::Precondition(format!(
                "curvature sup {curvature_sup} must be finite and nonnegative"
            )));
        }
        Ok(Self { label: label.into(), nodes, eval, deriv_left, deriv_right, curvature_sup })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Cell index j with x in (u_j, u_{j+1}].
    fn cell_of(&self, x: f64) -> usize {
        let c = self.nodes.partition_point(|v| *v < x);
        c.saturating_sub(1).min(self.nodes.len() - 2)
    }
}

/// Outcome of the sampled inequality check.
#[derive(Debug, Clone, Serialize)]
pub struct TaylorReport {
    pub label: String,
    pub samples: usize,
    /// Samples where both sides were exactly zero.
    pub vacuous_samples: usize,
    /// Max observed/bound over non-vacuous samples; 1 is the equality case.
    pub worst_ratio: f64,
    pub pass: bool,
    pub witness: Option<String>,
}

/// Samples random ordered pairs and checks the remainder inequality on each.
pub fn check_taylor_lemma(f: &PiecewiseC2, samples: usize, seed: u64) -> Result<TaylorReport> {
    if samples == 0 {
        return Err(Error::Precondition("need at least one sample".into()));
    }
    let lo = f.nodes[0];
    let hi = *f.nodes.last().expect("nonempty");
    // Jump magnitudes at interior nodes.
    let jumps: Vec<f64> = f.nodes[1..f.nodes.len() - 1]
        .iter()
        .map(|&u| ((f.deriv_right)(u) - (f.deriv_left)(u)).abs())
        .collect();

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    let mut vacuous = 0usize;
    let mut pass = true;
    let mut witness = None;
    let mut done = 0usize;
    while done < samples {
        let a = rng.gen_range(lo..=hi);
        let b = rng.gen_range(lo..=hi);
        if a == b {
            continue;
        }
        done += 1;
        let (x, y) = if a < b { (a, b) } else { (b, a) };
        let cx = f.cell_of(x);
        let cy = f.cell_of(y);
        let mut bound = 0.5 * f.curvature_sup * (y - x) * (y - x);
        for m in (cx + 1)..=cy {
            bound += jumps[m - 1] * (y - f.nodes[m]);
        }
        let observed = ((f.eval)(y) - (f.eval)(x) - (f.deriv_right)(x) * (y - x)).abs();
        if bound == 0.0 {
            if observed == 0.0 {
                vacuous += 1;
            } else {
                pass = false;
                if witness.is_none() {
                    witness =
                        Some(format!("x = {x}, y = {y}: observed {observed} with zero bound"));
                }
            }
            continue;
        }
        let ratio = observed / bound;
        worst = worst.max(ratio);
        if observed > bound * (1.0 + 1e-12) {
            pass = false;
            if witness.is_none() {
                witness = Some(format!("x = {x}, y = {y}: observed {observed} > bound {bound}"));
            }
        }
    }
    Ok(TaylorReport {
        label: f.label.clone(),
        samples,
        vacuous_samples: vacuous,
        worst_ratio: worst,
        pass,
        witness,
    })
}

/// The Taylor flow as a lemma instance: exact per-cell curvature (the flow
/// is quadratic inside a cell) and genuine derivative jumps at the nodes.
pub fn taylor_spec_from_flow(flow: Arc<PiecewiseFlow>, z: f64) -> Result<PiecewiseC2> {
    let nodes = flow.partition().nodes().to_vec();
    let psi_nodes = flow.psi_nodes(z);
    let curvature = flow.psi_curvature_sup(&psi_nodes);
    let eval = {
        let flow = flow.clone();
        let nodes = psi_nodes.clone();
        Box::new(move |u: f64| flow.psi_with_nodes(&nodes, u).expect("in-domain"))
    };
    let deriv_left = {
        let flow = flow.clone();
        let nodes = psi_nodes.clone();
        Box::new(move |u: f64| flow.psi_du_with_nodes(&nodes, u, Side::Left).expect("in-domain"))
    };
    let deriv_right = {
        let flow = flow.clone();
        let nodes = psi_nodes;
        Box::new(move |u: f64| flow.psi_du_with_nodes(&nodes, u, Side::Right).expect("in-domain"))
    };
    PiecewiseC2::new(format!("taylor-flow(z = {z})"), nodes, eval, deriv_left, deriv_right, curvature)
}

/// |x| with a node at zero: zero curvature, jump 2 at the kink, and
/// equality in the inequality whenever x < 0 < y.
pub fn kink_spec(radius: f64) -> Result<PiecewiseC2> {
    PiecewiseC2::new(
        "kink(|x|)",
        vec![-radius, 0.0, radius],
        Box::new(|x: f64| x.abs()),
        Box::new(|x: f64| if x <= 0.0 { -1.0 } else { 1.0 }),
        Box::new(|x: f64| if x < 0.0 { -1.0 } else { 1.0 }),
        0.0,
    )
}

/// A globally C^2 function (sine) on a uniform partition: all jumps vanish
/// and the inequality reduces to the classical Taylor remainder. The
/// radius must reach pi/2 so the curvature sup is exactly one.
pub fn smooth_spec(radius: f64, cells: usize) -> Result<PiecewiseC2> {
    if radius < std::f64::consts::FRAC_PI_2 {
        return Err(Error::Precondition(
            "smooth instance wants radius >= pi/2 so sup |f''| = 1 exactly".into(),
        ));
    }
    let nodes: Vec<f64> = (0..=(2 * cells))
        .map(|i| -radius + radius * i as f64 / cells as f64)
        .collect();
    PiecewiseC2::new(
        "smooth(sin)",
        nodes,
        Box::new(|x: f64| x.sin()),
        Box::new(|x: f64| x.cos()),
        Box::new(|x: f64| x.cos()),
        1.0,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::{builtin_family, Family};
    use crate::flow::build_partition;

    #[test]
    fn smooth_function_reduces_to_classical_taylor() {
        let spec = smooth_spec(2.0, 8).unwrap();
        let report = check_taylor_lemma(&spec, 2000, 5).unwrap();
        assert!(report.pass, "{report:?}");
        assert!(report.worst_ratio <= 1.0);
        assert_eq!(report.vacuous_samples, 0);
    }

    #[test]
    fn kink_attains_equality() {
        let spec = kink_spec(1.5).unwrap();
        let report = check_taylor_lemma(&spec, 2000, 11).unwrap();
        assert!(report.pass, "{report:?}");
        assert!(report.worst_ratio >= 0.99, "ratio {}", report.worst_ratio);
        assert!(report.worst_ratio <= 1.0 + 1e-12);
        // Same-cell pairs are exactly linear: both sides vanish.
        assert!(report.vacuous_samples > 0);
    }

    #[test]
    fn taylor_flow_instance_passes() {
        let pair = builtin_family(Family::Trig(1.0, 1.0)).unwrap();
        let flow = Arc::new(PiecewiseFlow::new(
            build_partition(1.2, 24).unwrap(),
            pair,
            10.0,
        ));
        let spec = taylor_spec_from_flow(flow, 0.3).unwrap();
        let report = check_taylor_lemma(&spec, 2000, 17).unwrap();
        assert!(report.pass, "{report:?}");
        assert!(report.worst_ratio <= 1.0 + 1e-12);
    }

    #[test]
    fn invalid_partition_is_rejected() {
        let r = PiecewiseC2::new(
            "bad",
            vec![0.0, 0.0],
            Box::new(|x| x),
            Box::new(|_| 1.0),
            Box::new(|_| 1.0),
            0.0,
        );
        assert!(r.is_err());
        assert!(smooth_spec(1.0, 4).is_err());
    }
}
