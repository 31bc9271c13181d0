//! Complementary error function with a log-domain tail.

use super::logval::SignedLogValue;

const LN_SQRT_PI: f64 = 0.572_364_942_924_700_1;

/// `erfc(x)` in `f64`; underflows to zero beyond `x ≈ 27`.
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// `ln erfc(x)`, finite for all real `x` (e.g. `x = 30` gives about `-904.6`).
pub fn ln_erfc(x: f64) -> f64 {
    if x < 26.0 {
        return libm::erfc(x).ln();
    }
    // erfc(x) = e^{-x²}/√π · 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
    let tiny = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for n in 1..200 {
        let a = n as f64 / 2.0;
        d = x + a * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = x + a / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let del = c * d;
        f *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    -x * x - LN_SQRT_PI - f.ln()
}

/// `erfc(x)` as a signed log value.
pub fn erfc_log(x: f64) -> SignedLogValue {
    SignedLogValue::from_ln(ln_erfc(x))
}
