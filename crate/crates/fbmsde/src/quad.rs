//! Fixed-order Gauss–Legendre rules and an adaptive Simpson integrator.
//!
//! The Gauss rules are used on panels where the integrand is known to be
//! smooth (polynomial composed with a C^2 coefficient); adaptive Simpson
//! serves as an independent quadrature route for oracle cross-checks.

use crate::error::{Error, Result};

// Abscissas/weights on [-1, 1].
const GL4_X: [f64; 4] = [
    -0.861_136_311_594_052_6,
    -0.339_981_043_584_856_26,
    0.339_981_043_584_856_26,
    0.861_136_311_594_052_6,
];
const GL4_W: [f64; 4] = [
    0.347_854_845_137_453_86,
    0.652_145_154_862_546_1,
    0.652_145_154_862_546_1,
    0.347_854_845_137_453_86,
];

const GL8_X: [f64; 8] = [
    -0.960_289_856_497_536_2,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_2,
];
const GL8_W: [f64; 8] = [
    0.101_228_536_290_376_26,
    0.222_381_034_453_374_47,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_47,
    0.101_228_536_290_376_26,
];

/// 4-point Gauss–Legendre rule on `[a, b]` (signed: `b < a` flips the sign).
pub fn gauss_legendre_4(mut f: impl FnMut(f64) -> f64, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = 0.0;
    for i in 0..4 {
        acc += GL4_W[i] * f(mid + half * GL4_X[i]);
    }
    half * acc
}

/// 8-point Gauss–Legendre rule on `[a, b]` (signed).
pub fn gauss_legendre_8(mut f: impl FnMut(f64) -> f64, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = 0.0;
    for i in 0..8 {
        acc += GL8_W[i] * f(mid + half * GL8_X[i]);
    }
    half * acc
}

/// Adaptive Simpson quadrature with absolute tolerance `tol`.
///
/// Signed in the same way as the Gauss rules. Recursion depth is capped; the
/// cap is generous for the C^2 integrands this library meets, and hitting it
/// reports step underflow instead of silently returning a bad value.
pub fn adaptive_simpson(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec(
    f: &mut impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::StepUnderflow { h: (b - a).abs() });
    }
    let lv = simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?;
    let rv = simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?;
    Ok(lv + rv)
}
