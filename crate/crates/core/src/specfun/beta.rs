//! Incomplete Beta function, regularized and unregularized.

use super::gamma::{complement, ln_beta};
use super::hyper::hyp2f1;
use super::logval::SignedLogValue;
use super::MAX_SERIES_TERMS;
use crate::error::{domain, Error, Result};

/// Continued fraction for `I_z(a, b)` (Numerical Recipes `betacf`).
fn betacf(a: f64, b: f64, z: f64) -> Result<f64> {
    let tiny = 1e-300;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * z / qap;
    if d.abs() < tiny {
        d = tiny;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_SERIES_TERMS {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * z / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = 1.0 + aa / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * z / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = 1.0 + aa / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            return Ok(h);
        }
    }
    Err(Error::ConvergenceFailure { terms: MAX_SERIES_TERMS, last_term: 0.0 })
}

/// `ln I_z(a,b)` evaluated directly (accurate when `z` is below the mean).
fn ln_reg_direct(z: f64, a: f64, b: f64) -> Result<f64> {
    let ln_front = a * z.ln() + b * (-z).ln_1p() - ln_beta(a, b)?;
    Ok(ln_front + betacf(a, b, z)?.ln() - a.ln())
}

/// `(I_z(a,b), 1 − I_z(a,b))` in the log domain, both accurate in their tails.
pub fn reg_inc_beta_pair(z: f64, a: f64, b: f64) -> Result<(SignedLogValue, SignedLogValue)> {
    if !(a > 0.0 && b > 0.0) {
        return Err(domain("reg_inc_beta", format!("a = {a}, b = {b} must be positive")));
    }
    if !(0.0..=1.0).contains(&z) {
        return Err(domain("reg_inc_beta", format!("z = {z} must lie in [0, 1]")));
    }
    if z == 0.0 {
        return Ok((SignedLogValue::ZERO, SignedLogValue::ONE));
    }
    if z == 1.0 {
        return Ok((SignedLogValue::ONE, SignedLogValue::ZERO));
    }
    if z < (a + 1.0) / (a + b + 2.0) {
        let l = ln_reg_direct(z, a, b)?.min(0.0);
        Ok((SignedLogValue::from_ln(l), complement(l)))
    } else {
        let l = ln_reg_direct(1.0 - z, b, a)?.min(0.0);
        Ok((complement(l), SignedLogValue::from_ln(l)))
    }
}

/// Regularized incomplete Beta `I_z(a, b)` for `z ∈ [0,1]`, `a, b > 0`.
pub fn reg_inc_beta(z: f64, a: f64, b: f64) -> Result<SignedLogValue> {
    Ok(reg_inc_beta_pair(z, a, b)?.0)
}

/// Unregularized incomplete Beta `B(z; a, b) = magnitude · e^{i·phase}`.
///
/// For `z < 0` the principal branch of `z^a` contributes `phase = πa` and
/// `magnitude` is the real remainder `|z|^a/a · ₂F₁(a, 1−b; a+1; z)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IncBeta {
    pub magnitude: SignedLogValue,
    pub phase: f64,
}

/// `B(z; a, b)` for `a > 0` and `z ≤ 1`, including `z < 0` and `b ≤ 0`.
pub fn inc_beta(z: f64, a: f64, b: f64) -> Result<IncBeta> {
    if !(a > 0.0) {
        return Err(domain("inc_beta", format!("a = {a} must be positive")));
    }
    if z > 1.0 || z.is_nan() {
        return Err(domain("inc_beta", format!("z = {z} must be at most 1")));
    }
    if z == 0.0 {
        return Ok(IncBeta { magnitude: SignedLogValue::ZERO, phase: 0.0 });
    }
    if z > 0.0 && b > 0.0 {
        let i = reg_inc_beta(z, a, b)?;
        return Ok(IncBeta { magnitude: i * SignedLogValue::from_ln(ln_beta(a, b)?), phase: 0.0 });
    }
    if z == 1.0 {
        return Err(domain("inc_beta", "B(1; a, b) diverges for b ≤ 0"));
    }
    let f = hyp2f1(a, 1.0 - b, a + 1.0, z)?;
    let magnitude = f * SignedLogValue::from_ln(a * z.abs().ln() - a.ln());
    let phase = if z < 0.0 { std::f64::consts::PI * a } else { 0.0 };
    Ok(IncBeta { magnitude, phase })
}
