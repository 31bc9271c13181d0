//! Double-exponential quadrature on `[0, 1]` for positive integrands that may
//! be singular at either end point.

use super::logval::{LogSum, SignedLogValue};
use crate::error::{Error, Result};

/// A quadrature node with both `t` and `1 − t` carried accurately.
#[derive(Clone, Copy, Debug)]
pub struct Node {
    pub t: f64,
    pub omt: f64,
    pub ln_t: f64,
    pub ln_omt: f64,
}

fn softplus(x: f64) -> f64 {
    // ln(1 + e^x)
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn node(u: f64) -> (Node, f64) {
    let s = std::f64::consts::FRAC_PI_2 * u.sinh();
    let ln_t = -softplus(-2.0 * s);
    let ln_omt = -softplus(2.0 * s);
    let ln_cosh_s = s.abs() + (-2.0 * s.abs()).exp().ln_1p() - std::f64::consts::LN_2;
    let ln_w = (std::f64::consts::PI / 4.0).ln() + u.cosh().ln() - 2.0 * ln_cosh_s;
    (Node { t: ln_t.exp(), omt: ln_omt.exp(), ln_t, ln_omt }, ln_w)
}

/// `∫_0^1 f(t) dt` for a positive integrand supplied as `ln f`.
///
/// Refines the step until two successive levels agree to `tol` (relative).
pub fn tanh_sinh_ln<F: Fn(&Node) -> f64>(ln_f: F, tol: f64) -> Result<SignedLogValue> {
    const U_MAX: f64 = 6.5;
    let eval = |u: f64, acc: &mut LogSum| {
        let (n, ln_w) = node(u);
        let lf = ln_f(&n);
        if lf.is_finite() {
            acc.add(SignedLogValue::from_ln(ln_w + lf));
        }
    };
    let mut h = 0.5;
    let mut acc = LogSum::new();
    let k_max = (U_MAX / h) as i64;
    for k in -k_max..=k_max {
        eval(k as f64 * h, &mut acc);
    }
    let mut prev = acc.value() * SignedLogValue::from_f64(h);
    for _level in 0..9 {
        h /= 2.0;
        let k_max = (U_MAX / h) as i64;
        let mut k = -k_max + if k_max % 2 == 0 { 1 } else { 0 };
        while k <= k_max {
            eval(k as f64 * h, &mut acc);
            k += 2;
        }
        let cur = acc.value() * SignedLogValue::from_f64(h);
        if cur.rel_diff(prev) < tol {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::ConvergenceFailure { terms: acc.len(), last_term: 0.0 })
}
