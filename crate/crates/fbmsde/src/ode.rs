//! Embedded Dormand–Prince 5(4) integrator for small autonomous systems.
//!
//! This is the reference route for the transport flow: the schemes under
//! study never call it, only oracles and cross-checks do.

use crate::error::{Error, Result};

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Difference between the 5th- and embedded 4th-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const MAX_STEPS: usize = 10_000_000;

fn axpy<const D: usize>(y: &[f64; D], h: f64, terms: &[(f64, &[f64; D])]) -> [f64; D] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..D {
            out[i] += h * c * k[i];
        }
    }
    out
}

/// Integrates `dy/ds = f(y)` from `s = 0` to `s = span` (signed) with local
/// error controlled to `tol` (used as both absolute and relative tolerance).
pub fn dormand_prince<const D: usize>(
    mut f: impl FnMut(&[f64; D]) -> [f64; D],
    y0: [f64; D],
    span: f64,
    tol: f64,
) -> Result<[f64; D]> {
    if span == 0.0 {
        return Ok(y0);
    }
    let dir = span.signum();
    let mut s = 0.0_f64;
    let mut y = y0;
    let mut k1 = f(&y);
    let mut h = dir * (span.abs() / 20.0).max(f64::MIN_POSITIVE);
    let h_min = span.abs() * 1e-14;

    for _ in 0..MAX_STEPS {
        if (span - s).abs() <= 0.0 {
            break;
        }
        if (s + h - span) * dir > 0.0 {
            h = span - s;
        }
        let k2 = f(&axpy(&y, h, &[(A21, &k1)]));
        let k3 = f(&axpy(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(&axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(&axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let k6 = f(&axpy(
            &y,
            h,
            &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
        ));
        let y_new = axpy(
            &y,
            h,
            &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
        );
        let k7 = f(&y_new);

        let mut err: f64 = 0.0;
        for i in 0..D {
            let e = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let scale = tol + tol * y[i].abs().max(y_new[i].abs());
            err = err.max((e / scale).abs());
        }

        if err <= 1.0 {
            s += h;
            y = y_new;
            k1 = k7; // FSAL
            if (span - s) * dir <= 0.0 {
                return Ok(y);
            }
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
        if h.abs() < h_min {
            return Err(Error::StepUnderflow { h: h.abs() });
        }
    }
    if (span - s).abs() == 0.0 {
        Ok(y)
    } else {
        Err(Error::StepUnderflow { h: h.abs() })
    }
}
