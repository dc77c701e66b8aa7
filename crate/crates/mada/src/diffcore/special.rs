//! Log-gamma, digamma and trigamma for positive arguments.
//!
//! These are the only special functions the evidential losses and
//! uncertainty measures need, and they are implemented from scratch so the
//! crate carries no external math dependency:
//!
//! * `lgamma` — Lanczos approximation (g = 7, 9 coefficients), with the
//!   reflection formula below 0.5.
//! * `digamma` / `trigamma` — recurrence lift of the argument to >= 6
//!   followed by the asymptotic (Bernoulli) series.
//!
//! Accuracy on [1e-3, 1e6]: digamma within 1e-12 absolute, lgamma within
//! 1e-12 relative (absolute near its zeros at 1 and 2). Verified against a
//! frozen high-precision reference table in the tests.

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

const HALF_LN_TWO_PI: f64 = 0.918_938_533_204_672_74; // ln(2*pi)/2
const LN_PI: f64 = 1.144_729_885_849_400_2;

/// Argument below which the recurrence lifts digamma/trigamma upward.
const LIFT_THRESHOLD: f64 = 6.0;

/// ln Gamma(x) for x > 0.
///
/// Returns a domain error for x <= 0 or NaN: a non-positive argument here
/// means an invalid Dirichlet concentration reached the uncertainty math.
pub fn lgamma(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("lgamma requires x > 0, got {x}")));
    }
    Ok(lgamma_raw(x))
}

/// Digamma (the logarithmic derivative of Gamma) for x > 0.
pub fn digamma(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("digamma requires x > 0, got {x}")));
    }
    Ok(digamma_raw(x))
}

/// Trigamma (derivative of digamma) for x > 0. Strictly positive.
pub fn trigamma(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("trigamma requires x > 0, got {x}")));
    }
    Ok(trigamma_raw(x))
}

pub(crate) fn lgamma_raw(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    if x < 0.5 {
        // Reflection: ln Gamma(x) = ln(pi / sin(pi x)) - ln Gamma(1 - x).
        LN_PI - (std::f64::consts::PI * x).sin().ln() - lgamma_raw(1.0 - x)
    } else {
        let y = x - 1.0;
        let mut a = LANCZOS_COEF[0];
        for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
            a += c / (y + i as f64);
        }
        let t = y + LANCZOS_G + 0.5;
        HALF_LN_TWO_PI + (y + 0.5) * t.ln() - t + a.ln()
    }
}

pub(crate) fn digamma_raw(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    // Lift to z >= 6 via psi(x) = psi(x+1) - 1/x, collecting the reciprocals
    // so they can be summed smallest-first (the 1/x term dominates for tiny
    // x and would otherwise absorb the rounding of every later addition).
    let mut terms = [0.0f64; 8];
    let mut n = 0;
    let mut z = x;
    while z < LIFT_THRESHOLD {
        terms[n] = 1.0 / z;
        n += 1;
        z += 1.0;
    }
    let mut lifted = 0.0;
    for t in terms[..n].iter().rev() {
        lifted += t;
    }

    // Asymptotic series: psi(z) = ln z - 1/(2z) - sum B_2n / (2n z^2n).
    let inv = 1.0 / z;
    let inv2 = inv * inv;
    let series = inv2
        * (1.0 / 12.0
            + inv2
                * (-1.0 / 120.0
                    + inv2
                        * (1.0 / 252.0
                            + inv2
                                * (-1.0 / 240.0
                                    + inv2
                                        * (1.0 / 132.0
                                            + inv2
                                                * (-691.0 / 32760.0
                                                    + inv2
                                                        * (1.0 / 12.0
                                                            + inv2 * (-3617.0 / 8160.0))))))));
    z.ln() - 0.5 * inv - series - lifted
}

pub(crate) fn trigamma_raw(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    // Lift via psi'(x) = psi'(x+1) + 1/x^2.
    let mut terms = [0.0f64; 8];
    let mut n = 0;
    let mut z = x;
    while z < LIFT_THRESHOLD {
        terms[n] = 1.0 / (z * z);
        n += 1;
        z += 1.0;
    }
    let mut lifted = 0.0;
    for t in terms[..n].iter().rev() {
        lifted += t;
    }

    // psi'(z) = 1/z + 1/(2z^2) + sum B_2n / z^(2n+1).
    let inv = 1.0 / z;
    let inv2 = inv * inv;
    let series = inv * inv2
        * (1.0 / 6.0
            + inv2
                * (-1.0 / 30.0
                    + inv2
                        * (1.0 / 42.0
                            + inv2
                                * (-1.0 / 30.0
                                    + inv2
                                        * (5.0 / 66.0
                                            + inv2 * (-691.0 / 2730.0 + inv2 * (7.0 / 6.0)))))));
    inv + 0.5 * inv2 + series + lifted
}
