//! Modified Bessel function of the first kind.

use super::gamma::recip_gamma_log;
use super::logval::{LogSum, SignedLogValue, StallRule};
use super::{MAX_SERIES_TERMS, SERIES_TOL};
use crate::error::{domain, Error, Result};

/// `I_ν(z)` for `z ≥ 0` by the ascending series `Σ (z/2)^{2k+ν} / (k! Γ(k+ν+1))`.
pub fn bessel_i(nu: f64, z: f64) -> Result<SignedLogValue> {
    if !(z >= 0.0) || !z.is_finite() {
        return Err(domain("bessel_i", format!("z = {z} must be finite and non-negative")));
    }
    // I_{-n} = I_n for integer n
    let nu = if nu < 0.0 && nu == nu.floor() { -nu } else { nu };
    if z == 0.0 {
        return match nu {
            v if v == 0.0 => Ok(SignedLogValue::ONE),
            v if v > 0.0 => Ok(SignedLogValue::ZERO),
            _ => Err(domain("bessel_i", "I_ν(0) is infinite for non-integer ν < 0")),
        };
    }
    let ln_half_z = (z / 2.0).ln();
    let mut acc = LogSum::new();
    let mut stall = StallRule::new(SERIES_TOL);
    let mut ln_kfact = 0.0;
    for k in 0..MAX_SERIES_TERMS {
        let kf = k as f64;
        if k > 0 {
            ln_kfact += kf.ln();
        }
        let term = recip_gamma_log(kf + nu + 1.0)
            * SignedLogValue::from_ln((2.0 * kf + nu) * ln_half_z - ln_kfact);
        acc.add(term);
        // only test for stalling once the terms have passed their peak
        if kf * kf + kf * nu > 0.25 * z * z && stall.update(term, acc.value()) {
            return Ok(acc.value());
        }
    }
    Err(Error::ConvergenceFailure { terms: MAX_SERIES_TERMS, last_term: 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values() {
        assert_eq!(bessel_i(0.0, 0.0).unwrap(), SignedLogValue::ONE);
        // mpmath besseli(0.5, 2) = sqrt(2/(π·2)) sinh 2
        let expected = (1.0 / std::f64::consts::PI).sqrt() * 2f64.sinh();
        assert!(bessel_i(0.5, 2.0).unwrap().rel_diff(SignedLogValue::from_f64(expected)) < 1e-14);
        assert!(bessel_i(1.0, -1.0).is_err());
    }

    #[test]
    fn large_argument_stays_finite() {
        let v = bessel_i(2.0, 800.0).unwrap();
        // I_ν(z) ≈ e^z / √(2πz) (1 − (4ν²−1)/(8z))
        let approx = 800.0 - (2.0 * std::f64::consts::PI * 800.0).ln() / 2.0
            + (1.0 - 15.0 / 6400.0f64).ln();
        assert!((v.ln_abs() - approx).abs() < 1e-5);
    }
}
