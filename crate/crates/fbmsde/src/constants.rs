//! The truncation constant M and the constants C1..C8 assembled from the
//! coefficient bounds, the horizon, and the realized path statistics, plus
//! the per-result bound evaluators built from them.
//!
//! The analysis admits two inequivalent versions of C1 — exponent
//! M2 (R + T) from the drift comparison over the horizon, exponent 2 M2 R
//! from the flow Lipschitz factor alone. Both are computed, both are
//! reported, and bound assertions use the larger. C2 likewise exists with
//! and without a horizon factor: the version with T backs the Y-versus-Y^n
//! bound, the version without backs the aggregate rate constant. Statistics
//! enter as given; callers wanting slack for grid-resolution effects
//! inflate them before calling in.

use serde::Serialize;

use crate::coeffs::CoefficientBounds;
use crate::error::{Error, Result};
use crate::fbm::PathStats;

/// A nonnegative bound carried in log space.
///
/// The aggregate constants contain exp(C1 T) and exp(C7 T) factors that
/// overflow f64 on heavy paths while the mathematics stays finite, so bound
/// comparisons happen on logarithms. `value()` materializes the linear
/// number (possibly infinite) for reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bound {
    ln: f64,
}

impl Bound {
    pub fn from_ln(ln: f64) -> Self {
        Self { ln }
    }

    pub fn ln(&self) -> f64 {
        self.ln
    }

    /// Linear value; +inf when the bound exceeds f64 range.
    pub fn value(&self) -> f64 {
        self.ln.exp()
    }

    /// observed / bound, in a form that cannot overflow.
    pub fn ratio(&self, observed: f64) -> f64 {
        if observed <= 0.0 {
            0.0
        } else {
            (observed.ln() - self.ln).exp()
        }
    }

    /// Whether `observed <= bound` up to a 1e-9 relative comparison slack,
    /// with an absolute floor for degenerate (exact-family) bounds.
    pub fn holds_with_floor(&self, observed: f64, floor: f64) -> bool {
        observed <= floor || observed.ln() <= self.ln + 1e-9
    }
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

/// Inputs the constants were computed from, echoed into reports.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ConstantInputs {
    pub bounds: CoefficientBounds,
    pub horizon: f64,
    pub x0: f64,
    pub sup_norm: f64,
    pub holder_norm: f64,
    pub hurst: f64,
    pub rho: f64,
}

/// Every constant of the error analysis, with both C1/C2 variants.
#[derive(Debug, Clone, Serialize)]
pub struct ConstantSet {
    /// A-priori bound M on the auxiliary state.
    #[serde(rename = "M")]
    pub state_bound: f64,
    #[serde(rename = "C1")]
    pub c1: f64,
    #[serde(rename = "C1_with_horizon")]
    pub c1_with_horizon: f64,
    #[serde(rename = "C1_path_only")]
    pub c1_path_only: f64,
    #[serde(rename = "C1_variant")]
    pub c1_variant: &'static str,
    #[serde(rename = "C2")]
    pub c2: f64,
    #[serde(rename = "C2_with_horizon")]
    pub c2_with_horizon: f64,
    #[serde(rename = "C3")]
    pub c3: f64,
    #[serde(rename = "C4")]
    pub c4: f64,
    #[serde(rename = "C5")]
    pub c5: f64,
    #[serde(rename = "C6")]
    pub c6: f64,
    #[serde(rename = "C7")]
    pub c7: f64,
    #[serde(rename = "C8")]
    pub c8: f64,
    /// Linear aggregate constant; +inf (JSON null) when it exceeds f64.
    #[serde(rename = "C_total")]
    pub c_total: f64,
    /// log(C_total), always finite for finite inputs; the authoritative
    /// form for bound checks.
    #[serde(rename = "C_total_ln")]
    pub c_total_ln: f64,
    pub inputs: ConstantInputs,
}

fn checked_exp(arg: f64, context: &'static str) -> Result<f64> {
    let v = arg.exp();
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::ConstantOverflow { exponent: arg, context })
    }
}

/// Evaluates M and C1..C8 from the bounds, horizon, initial condition, and
/// realized path statistics.
pub fn compute_constants(
    bounds: CoefficientBounds,
    horizon: f64,
    x0: f64,
    stats: &PathStats,
) -> Result<ConstantSet> {
    bounds.validate()?;
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::Domain(format!("horizon {horizon} must be positive")));
    }
    if !(stats.sup_norm >= 0.0 && stats.holder_norm >= 0.0 && x0.is_finite()) {
        return Err(Error::Domain("statistics must be nonnegative and x0 finite".into()));
    }
    let CoefficientBounds { m1, m2, m3, m4, m5, m6 } = bounds;
    let r = stats.sup_norm;
    let hn = stats.holder_norm;
    let t = horizon;
    let hr = stats.exponent();
    if hr.is_nan() || hr <= 0.0 {
        return Err(Error::Domain(format!("Hölder exponent H - rho = {hr} must be positive")));
    }

    let e_r = checked_exp(m2 * r, "exp(M2 R)")?;
    let e_2r = checked_exp(2.0 * m2 * r, "exp(2 M2 R)")?;
    let e_3r = checked_exp(3.0 * m2 * r, "exp(3 M2 R)")?;
    let common = m4 + m1 * m3 * r;

    let c3 = m1 * m2 * e_r + m4 * e_r * m5 * r * (1.0 + m2);
    let c4 = m1 * e_r + c3 * t.powf(hr) * hn;
    let state_bound = x0.abs() + t * (m1 * e_r + hn * c3 * t.powf(hr));

    let c1_with_horizon = common * checked_exp(m2 * (r + t), "exp(M2 (R + T)) in C1")?;
    let c1_path_only = common * e_2r;
    let (c1, c1_variant) = if c1_path_only > c1_with_horizon {
        (c1_path_only, "exp(2 M2 R)")
    } else {
        (c1_with_horizon, "exp(M2 (R + T))")
    };

    let r3_over6 = r.powi(3) / 6.0;
    let c2 = e_r * common * (m2 * m2 * m5 * r3_over6 * e_r + m3 * m5 * m5 * r3_over6 * e_2r);
    let c2_with_horizon = t * c2;

    let c5 = e_r
        * (r * (1.0 + m2) * (m3 * m1 * m5 + m2 * m4 * m5 + m6 * m5 * r * (1.0 + m2))
            + m1 * m2
            + m4 * m5 * (1.0 + m2));
    let c7 = e_3r * common;
    let c8 = m4 * m2 * e_r * ((m5 + m5 * m2) * r + m5 * m2);
    let c6 = c4 * e_3r * common * t.powf(1.0 - 2.0 * hr) + (c5 + c8) * hn;

    // The aggregate is assembled in log space: exp(C1 T) and exp(C7 T) can
    // exceed f64 range on heavy paths while C_total itself is meaningful.
    let c_total_ln = 2.0 * m2 * r
        + log_sum_exp(&[
            c2.ln() + c1 * t,
            (m2 * m2 * m5 * r3_over6).ln(),
            (m5 * m5 * m3 * r3_over6).ln(),
            (c6 * t).ln() + c7 * t,
        ]);
    let c_total = c_total_ln.exp();

    Ok(ConstantSet {
        state_bound,
        c1,
        c1_with_horizon,
        c1_path_only,
        c1_variant,
        c2,
        c2_with_horizon,
        c3,
        c4,
        c5,
        c6,
        c7,
        c8,
        c_total,
        c_total_ln,
        inputs: ConstantInputs {
            bounds,
            horizon,
            x0,
            sup_norm: stats.sup_norm,
            holder_norm: stats.holder_norm,
            hurst: stats.hurst,
            rho: stats.rho,
        },
    })
}

impl ConstantSet {
    fn r(&self) -> f64 {
        self.inputs.sup_norm
    }

    fn exponent(&self) -> f64 {
        self.inputs.hurst - self.inputs.rho
    }

    /// |phi - phi^l| <= M2^2 M5 R^3 / (6 l^2) exp(M2 R).
    pub fn flow_euler_bound(&self, level: usize) -> Bound {
        let b = self.inputs.bounds;
        let r = self.r();
        Bound::from_ln(
            (b.m2 * b.m2 * b.m5 * r.powi(3) / (6.0 * (level * level) as f64)).ln() + b.m2 * r,
        )
    }

    /// |phi^l - psi^l| <= M3 M5^2 R^3 / (6 l^2) exp(2 M2 R).
    pub fn flow_taylor_bound(&self, level: usize) -> Bound {
        let b = self.inputs.bounds;
        let r = self.r();
        Bound::from_ln(
            (b.m3 * b.m5 * b.m5 * r.powi(3) / (6.0 * (level * level) as f64)).ln()
                + 2.0 * b.m2 * r,
        )
    }

    /// Lipschitz factor exp(2 M2 R) of both flows in the start point.
    pub fn flow_lipschitz_factor(&self) -> f64 {
        let b = self.inputs.bounds;
        (2.0 * b.m2 * self.r()).exp()
    }

    /// |Y - Y^n| <= exp(C1 T) C2(T) / n^2 (conservative C1, C2 with the
    /// horizon factor).
    pub fn y_level_bound(&self, n: usize) -> Bound {
        Bound::from_ln(
            self.c1 * self.inputs.horizon + self.c2_with_horizon.ln() - 2.0 * (n as f64).ln(),
        )
    }

    /// Increment rate C4 of the fully discrete state: |Y_s - Y_{t_k}| <=
    /// C4 (s - t_k).
    pub fn increment_rate(&self) -> f64 {
        self.c4
    }

    /// |Y^n - Y^{n,n}| <= C6 T (T/n)^{2(H-rho)} exp(C7 T).
    pub fn y_scheme_bound(&self, n: usize) -> Bound {
        let t = self.inputs.horizon;
        Bound::from_ln(
            (self.c6 * t).ln() + 2.0 * self.exponent() * (t / n as f64).ln()
                + self.c7 * t,
        )
    }

    /// Aggregate pathwise bound C_total n^{-2(H-rho)} on |X - X^n|.
    pub fn theorem_bound(&self, n: usize) -> Bound {
        Bound::from_ln(self.c_total_ln - 2.0 * self.exponent() * (n as f64).ln())
    }

    /// The three decomposition terms the aggregate splits into.
    pub fn h1_bound(&self, n: usize) -> Bound {
        let b = self.inputs.bounds;
        let r = self.r();
        let ln_n2 = 2.0 * (n as f64).ln();
        let e_r = b.m2 * r;
        Bound::from_ln(log_sum_exp(&[
            e_r + self.c1 * self.inputs.horizon + self.c2_with_horizon.ln() - ln_n2,
            (b.m2 * b.m2 * b.m5 * r.powi(3) / 6.0).ln() + e_r - ln_n2,
        ]))
    }

    pub fn h2_bound(&self, n: usize) -> Bound {
        Bound::from_ln(2.0 * self.inputs.bounds.m2 * self.r() + self.y_scheme_bound(n).ln())
    }

    pub fn h3_bound(&self, n: usize) -> Bound {
        let b = self.inputs.bounds;
        let r = self.r();
        Bound::from_ln(
            (b.m3 * b.m5 * b.m5 * r.powi(3) / (6.0 * (n * n) as f64)).ln() + 2.0 * b.m2 * r,
        )
    }
}
