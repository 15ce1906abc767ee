//! SDE coefficients b, sigma in C^2_b with their derivatives and certified
//! sup bounds M1..M6, plus the built-in families the test suites run on.
//!
//! Every constant downstream is assembled from the declared bounds, so
//! user-supplied pairs must state them explicitly; [`validate_bounds`]
//! checks the declaration by dense sampling instead of trusting it.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

type Evaluator = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Sup bounds on the coefficients and their derivatives:
/// |b| <= M1, |sigma'| <= M2, |sigma''| <= M3, |b'| <= M4, |sigma| <= M5,
/// |b''| <= M6.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientBounds {
    #[serde(rename = "M1")]
    pub m1: f64,
    #[serde(rename = "M2")]
    pub m2: f64,
    #[serde(rename = "M3")]
    pub m3: f64,
    #[serde(rename = "M4")]
    pub m4: f64,
    #[serde(rename = "M5")]
    pub m5: f64,
    #[serde(rename = "M6")]
    pub m6: f64,
}

impl CoefficientBounds {
    pub fn validate(&self) -> Result<()> {
        let all = [self.m1, self.m2, self.m3, self.m4, self.m5, self.m6];
        if all.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(Error::Domain(format!("bounds must be finite and nonnegative: {self:?}")));
        }
        Ok(())
    }
}

/// The pair (b, sigma) with first and second derivatives and declared bounds.
///
/// Evaluators must be pure; the pair is immutable and freely shareable.
#[derive(Clone)]
pub struct CoefficientPair {
    drift: Evaluator,
    drift_d1: Evaluator,
    drift_d2: Evaluator,
    diffusion: Evaluator,
    diffusion_d1: Evaluator,
    diffusion_d2: Evaluator,
    bounds: CoefficientBounds,
    family_tag: String,
}

impl fmt::Debug for CoefficientPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientPair")
            .field("family_tag", &self.family_tag)
            .field("bounds", &self.bounds)
            .finish()
    }
}

impl CoefficientPair {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        drift: Evaluator,
        drift_d1: Evaluator,
        drift_d2: Evaluator,
        diffusion: Evaluator,
        diffusion_d1: Evaluator,
        diffusion_d2: Evaluator,
        bounds: CoefficientBounds,
        family_tag: impl Into<String>,
    ) -> Result<Self> {
        bounds.validate()?;
        Ok(Self {
            drift,
            drift_d1,
            drift_d2,
            diffusion,
            diffusion_d1,
            diffusion_d2,
            bounds,
            family_tag: family_tag.into(),
        })
    }

    pub fn b(&self, z: f64) -> f64 {
        (self.drift)(z)
    }

    pub fn b_prime(&self, z: f64) -> f64 {
        (self.drift_d1)(z)
    }

    pub fn b_second(&self, z: f64) -> f64 {
        (self.drift_d2)(z)
    }

    pub fn sigma(&self, z: f64) -> f64 {
        (self.diffusion)(z)
    }

    pub fn sigma_prime(&self, z: f64) -> f64 {
        (self.diffusion_d1)(z)
    }

    pub fn sigma_second(&self, z: f64) -> f64 {
        (self.diffusion_d2)(z)
    }

    pub fn bounds(&self) -> CoefficientBounds {
        self.bounds
    }

    pub fn family_tag(&self) -> &str {
        &self.family_tag
    }

    /// Same evaluators with different declared bounds. Meant for
    /// falsification studies (deliberately corrupted bounds must make the
    /// lemma suite fail); it does not re-verify anything.
    pub fn with_bounds(mut self, bounds: CoefficientBounds) -> Result<Self> {
        bounds.validate()?;
        self.bounds = bounds;
        Ok(self)
    }
}

/// Built-in coefficient families. The linear sigma(x) = x case is not here
/// on purpose: it violates the boundedness hypothesis; use a trig family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FamilySpec", into = "FamilySpec")]
pub enum Family {
    /// b = 0, sigma = c.
    Additive(f64),
    /// b = a_b sin, sigma = a_s cos.
    Trig(f64, f64),
    /// b = 0, sigma = a cos (the flow is the scaled Gudermannian).
    Gudermann(f64),
    /// Alias of Gudermann.
    ZeroDriftTrig(f64),
}

/// Wire form: `{"family": "trig", "params": [1.0, 1.0]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilySpec {
    pub family: String,
    #[serde(default)]
    pub params: Vec<f64>,
}

impl TryFrom<FamilySpec> for Family {
    type Error = Error;

    fn try_from(spec: FamilySpec) -> Result<Self> {
        let want = |k: usize| -> Result<()> {
            if spec.params.len() == k {
                Ok(())
            } else {
                Err(Error::Domain(format!(
                    "family '{}' takes {k} parameter(s), got {}",
                    spec.family,
                    spec.params.len()
                )))
            }
        };
        if spec.params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Domain("family parameters must be finite".into()));
        }
        match spec.family.as_str() {
            "additive" => {
                want(1)?;
                Ok(Family::Additive(spec.params[0]))
            }
            "trig" => {
                want(2)?;
                Ok(Family::Trig(spec.params[0], spec.params[1]))
            }
            "gudermann" => {
                want(1)?;
                Ok(Family::Gudermann(spec.params[0]))
            }
            "zero_drift_trig" => {
                want(1)?;
                Ok(Family::ZeroDriftTrig(spec.params[0]))
            }
            other => Err(Error::Domain(format!("unknown coefficient family '{other}'"))),
        }
    }
}

impl From<Family> for FamilySpec {
    fn from(f: Family) -> Self {
        let (family, params) = match f {
            Family::Additive(c) => ("additive", vec![c]),
            Family::Trig(ab, as_) => ("trig", vec![ab, as_]),
            Family::Gudermann(a) => ("gudermann", vec![a]),
            Family::ZeroDriftTrig(a) => ("zero_drift_trig", vec![a]),
        };
        FamilySpec { family: family.into(), params }
    }
}

/// Instantiates a built-in family with exact derivative evaluators and tight
/// bounds.
pub fn builtin_family(family: Family) -> Result<CoefficientPair> {
    let zero: Evaluator = Arc::new(|_| 0.0);
    match family {
        Family::Additive(c) => CoefficientPair::new(
            zero.clone(),
            zero.clone(),
            zero.clone(),
            Arc::new(move |_| c),
            zero.clone(),
            zero,
            CoefficientBounds { m1: 0.0, m2: 0.0, m3: 0.0, m4: 0.0, m5: c.abs(), m6: 0.0 },
            format!("additive({c})"),
        ),
        Family::Trig(ab, as_) => CoefficientPair::new(
            Arc::new(move |z: f64| ab * z.sin()),
            Arc::new(move |z: f64| ab * z.cos()),
            Arc::new(move |z: f64| -ab * z.sin()),
            Arc::new(move |z: f64| as_ * z.cos()),
            Arc::new(move |z: f64| -as_ * z.sin()),
            Arc::new(move |z: f64| -as_ * z.cos()),
            CoefficientBounds {
                m1: ab.abs(),
                m2: as_.abs(),
                m3: as_.abs(),
                m4: ab.abs(),
                m5: as_.abs(),
                m6: ab.abs(),
            },
            format!("trig({ab},{as_})"),
        ),
        Family::Gudermann(a) | Family::ZeroDriftTrig(a) => CoefficientPair::new(
            zero.clone(),
            zero.clone(),
            zero,
            Arc::new(move |z: f64| a * z.cos()),
            Arc::new(move |z: f64| -a * z.sin()),
            Arc::new(move |z: f64| -a * z.cos()),
            CoefficientBounds { m1: 0.0, m2: a.abs(), m3: a.abs(), m4: 0.0, m5: a.abs(), m6: 0.0 },
            format!("gudermann({a})"),
        ),
    }
}

/// Per-field override of declared bounds, for falsification studies from
/// config files: `{"M2": 0.1}` replaces only M2.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsOverride {
    #[serde(rename = "M1", default)]
    pub m1: Option<f64>,
    #[serde(rename = "M2", default)]
    pub m2: Option<f64>,
    #[serde(rename = "M3", default)]
    pub m3: Option<f64>,
    #[serde(rename = "M4", default)]
    pub m4: Option<f64>,
    #[serde(rename = "M5", default)]
    pub m5: Option<f64>,
    #[serde(rename = "M6", default)]
    pub m6: Option<f64>,
}

impl BoundsOverride {
    pub fn apply(&self, base: CoefficientBounds) -> CoefficientBounds {
        CoefficientBounds {
            m1: self.m1.unwrap_or(base.m1),
            m2: self.m2.unwrap_or(base.m2),
            m3: self.m3.unwrap_or(base.m3),
            m4: self.m4.unwrap_or(base.m4),
            m5: self.m5.unwrap_or(base.m5),
            m6: self.m6.unwrap_or(base.m6),
        }
    }

    pub fn is_empty(&self) -> bool {
        *self == Self::default()
    }
}

/// Outcome of dense-sampling validation of a pair's declaration.
#[derive(Debug, Clone, Serialize)]
pub struct BoundsValidation {
    /// Worst value of |f(z)| - bound over the grid; <= 0 means every bound
    /// holds on the sampled interval.
    pub worst_violation: f64,
    /// Which evaluator and sample point attained it.
    pub worst_violation_site: String,
    /// Worst normalized mismatch between a derivative evaluator and the
    /// centered finite difference of its base function.
    pub worst_derivative_mismatch: f64,
    pub samples: usize,
    pub radius: f64,
}

impl BoundsValidation {
    pub fn pass(&self) -> bool {
        self.worst_violation <= 0.0 && self.worst_derivative_mismatch <= 1e-6
    }
}

/// Evaluates all six functions on a uniform grid over `[-radius, radius]`,
/// reporting the worst bound-violation margin and the worst mismatch of each
/// derivative against a centered finite difference at step 1e-5.
pub fn validate_bounds(
    pair: &CoefficientPair,
    radius: f64,
    samples: usize,
) -> Result<BoundsValidation> {
    if samples < 2 {
        return Err(Error::Precondition("validation needs at least 2 samples".into()));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::Domain(format!("radius {radius} must be positive")));
    }
    let b = pair.bounds();
    let checks: [(&str, &Evaluator, f64); 6] = [
        ("b", &pair.drift, b.m1),
        ("b'", &pair.drift_d1, b.m4),
        ("b''", &pair.drift_d2, b.m6),
        ("sigma", &pair.diffusion, b.m5),
        ("sigma'", &pair.diffusion_d1, b.m2),
        ("sigma''", &pair.diffusion_d2, b.m3),
    ];
    let fd_pairs: [(&Evaluator, &Evaluator); 4] = [
        (&pair.drift, &pair.drift_d1),
        (&pair.drift_d1, &pair.drift_d2),
        (&pair.diffusion, &pair.diffusion_d1),
        (&pair.diffusion_d1, &pair.diffusion_d2),
    ];

    let mut worst = f64::NEG_INFINITY;
    let mut site = String::new();
    let mut worst_fd = 0.0_f64;
    let h = 1e-5;
    for i in 0..samples {
        let z = -radius + 2.0 * radius * i as f64 / (samples - 1) as f64;
        for (name, f, bound) in &checks {
            let margin = f(z).abs() - bound;
            if margin > worst {
                worst = margin;
                site = format!("{name} at z = {z}");
            }
        }
        for (f, d) in &fd_pairs {
            let fd = (f(z + h) - f(z - h)) / (2.0 * h);
            let mismatch = (d(z) - fd).abs() / (1.0 + d(z).abs());
            worst_fd = worst_fd.max(mismatch);
        }
    }
    Ok(BoundsValidation {
        worst_violation: worst,
        worst_violation_site: site,
        worst_derivative_mismatch: worst_fd,
        samples,
        radius,
    })
}
