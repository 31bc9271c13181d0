//! Signed values stored as `(ln|x|, sign)` and a compensated log-domain accumulator.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// A real number held as the logarithm of its magnitude plus a sign.
///
/// Zero is `ln = -inf, sign = 0`. Values far outside the `f64` range
/// (e.g. `1e-400`) are representable.
#[derive(Clone, Copy, PartialEq)]
pub struct SignedLogValue {
    ln: f64,
    sign: i8,
}

impl SignedLogValue {
    pub const ZERO: Self = Self { ln: f64::NEG_INFINITY, sign: 0 };
    pub const ONE: Self = Self { ln: 0.0, sign: 1 };

    /// Builds `sign * exp(ln)`. A `-inf` log or zero sign gives zero.
    pub fn new(ln: f64, sign: i8) -> Self {
        if sign == 0 || ln == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            Self { ln, sign: sign.signum() }
        }
    }

    /// Positive value `exp(ln)`.
    pub fn from_ln(ln: f64) -> Self {
        Self::new(ln, 1)
    }

    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else {
            Self { ln: x.abs().ln(), sign: if x > 0.0 { 1 } else { -1 } }
        }
    }

    pub fn to_f64(self) -> f64 {
        match self.sign {
            0 => 0.0,
            s => f64::from(s) * self.ln.exp(),
        }
    }

    /// `ln|x|`, `-inf` for zero.
    pub fn ln_abs(self) -> f64 {
        self.ln
    }

    /// `log10|x|`, `-inf` for zero.
    pub fn log10_abs(self) -> f64 {
        self.ln / std::f64::consts::LN_10
    }

    pub fn sign(self) -> i8 {
        self.sign
    }

    pub fn is_zero(self) -> bool {
        self.sign == 0
    }

    pub fn is_finite(self) -> bool {
        self.sign == 0 || self.ln.is_finite()
    }

    pub fn abs(self) -> Self {
        Self { ln: self.ln, sign: self.sign.abs() }
    }

    pub fn recip(self) -> Self {
        assert!(self.sign != 0, "reciprocal of zero");
        Self { ln: -self.ln, sign: self.sign }
    }

    /// `x^k` for positive `x` and real `k`.
    pub fn powf(self, k: f64) -> Self {
        assert!(self.sign > 0 || k == 0.0, "powf needs a positive base");
        if k == 0.0 {
            return Self::ONE;
        }
        Self::from_ln(self.ln * k)
    }

    /// Magnitude comparison.
    pub fn cmp_abs(self, other: Self) -> Ordering {
        self.ln.partial_cmp(&other.ln).unwrap_or(Ordering::Equal)
    }

    /// Relative difference `|a - b| / |b|` computed in the log domain.
    pub fn rel_diff(self, reference: Self) -> f64 {
        if reference.is_zero() {
            return if self.is_zero() { 0.0 } else { f64::INFINITY };
        }
        if self.sign != reference.sign {
            return if self.is_zero() { 1.0 } else { 1.0 + (self.ln - reference.ln).exp() };
        }
        (self.ln - reference.ln).exp_m1().abs()
    }
}

impl Default for SignedLogValue {
    fn default() -> Self {
        Self::ZERO
    }
}

impl fmt::Debug for SignedLogValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.sign {
            0 => write!(f, "0"),
            s => write!(f, "{}exp({})", if s < 0 { "-" } else { "" }, self.ln),
        }
    }
}

impl fmt::Display for SignedLogValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = f.precision().unwrap_or(12);
        f.write_str(&format_scientific(*self, digits))
    }
}

/// Formats in `d.ddde±x` notation with `digits` digits after the point.
/// Works for magnitudes outside the `f64` range.
pub fn format_scientific(x: SignedLogValue, digits: usize) -> String {
    if x.is_zero() {
        return format!("{:.*e}", digits, 0.0);
    }
    let l10 = x.log10_abs();
    if l10.abs() < 300.0 {
        return format!("{:.*e}", digits, x.to_f64());
    }
    let mut exp = l10.floor();
    let mut mant = 10f64.powf(l10 - exp);
    // rounding may carry into the next decade
    let rounded: f64 = format!("{:.*}", digits, mant).parse().unwrap_or(mant);
    if rounded >= 10.0 {
        mant /= 10.0;
        exp += 1.0;
    }
    let sign = if x.sign < 0 { "-" } else { "" };
    format!("{sign}{:.*}e{}", digits, mant, exp as i64)
}

impl Mul for SignedLogValue {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        if self.sign == 0 || rhs.sign == 0 {
            return Self::ZERO;
        }
        Self { ln: self.ln + rhs.ln, sign: self.sign * rhs.sign }
    }
}

impl Div for SignedLogValue {
    type Output = Self;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: Self) -> Self {
        self * rhs.recip()
    }
}

impl Neg for SignedLogValue {
    type Output = Self;
    fn neg(self) -> Self {
        Self { ln: self.ln, sign: -self.sign }
    }
}

impl Add for SignedLogValue {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        if self.sign == 0 {
            return rhs;
        }
        if rhs.sign == 0 {
            return self;
        }
        let (big, small) = if self.ln >= rhs.ln { (self, rhs) } else { (rhs, self) };
        let r = (small.ln - big.ln).exp();
        if big.sign == small.sign {
            Self { ln: big.ln + r.ln_1p(), sign: big.sign }
        } else if r == 1.0 {
            Self::ZERO
        } else {
            Self { ln: big.ln + (-r).ln_1p(), sign: big.sign }
        }
    }
}

impl Sub for SignedLogValue {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl std::iter::Sum for SignedLogValue {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        let mut acc = LogSum::new();
        for t in iter {
            acc.add(t);
        }
        acc.value()
    }
}

/// Single-signed compensated accumulator: value is `exp(scale) * (sum + comp)`.
#[derive(Clone, Copy, Debug)]
struct Scaled {
    scale: f64,
    sum: f64,
    comp: f64,
}

impl Scaled {
    const EMPTY: Self = Self { scale: f64::NEG_INFINITY, sum: 0.0, comp: 0.0 };

    fn add(&mut self, ln: f64) {
        if self.scale == f64::NEG_INFINITY {
            *self = Self { scale: ln, sum: 1.0, comp: 0.0 };
            return;
        }
        let mut x = 1.0;
        if ln > self.scale {
            let f = (self.scale - ln).exp();
            self.sum *= f;
            self.comp *= f;
            self.scale = ln;
        } else {
            x = (ln - self.scale).exp();
        }
        // Neumaier
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn total_at(&self, scale: f64) -> f64 {
        if self.scale == f64::NEG_INFINITY {
            0.0
        } else {
            (self.sum + self.comp) * (self.scale - scale).exp()
        }
    }
}

/// Log-sum-exp accumulator for signed terms with compensated summation.
///
/// Also tracks `sum |t|`, so the cancellation ratio `sum |t| / |sum t|`
/// of the accumulated series is available.
#[derive(Clone, Copy, Debug)]
pub struct LogSum {
    pos: Scaled,
    neg: Scaled,
    count: usize,
}

impl Default for LogSum {
    fn default() -> Self {
        Self::new()
    }
}

impl LogSum {
    pub fn new() -> Self {
        Self { pos: Scaled::EMPTY, neg: Scaled::EMPTY, count: 0 }
    }

    pub fn add(&mut self, t: SignedLogValue) {
        self.count += 1;
        match t.sign {
            1 => self.pos.add(t.ln),
            -1 => self.neg.add(t.ln),
            _ => {}
        }
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    fn top_scale(&self) -> f64 {
        self.pos.scale.max(self.neg.scale)
    }

    pub fn value(&self) -> SignedLogValue {
        let s = self.top_scale();
        if s == f64::NEG_INFINITY {
            return SignedLogValue::ZERO;
        }
        let d = self.pos.total_at(s) - self.neg.total_at(s);
        if d == 0.0 {
            return SignedLogValue::ZERO;
        }
        SignedLogValue::new(s + d.abs().ln(), if d > 0.0 { 1 } else { -1 })
    }

    /// `sum |t|`.
    pub fn abs_total(&self) -> SignedLogValue {
        let s = self.top_scale();
        if s == f64::NEG_INFINITY {
            return SignedLogValue::ZERO;
        }
        SignedLogValue::from_ln(s + (self.pos.total_at(s) + self.neg.total_at(s)).ln())
    }

    /// `sum |t| / |sum t|`; 1 for sign-definite sums, infinite on total cancellation.
    pub fn cancellation(&self) -> f64 {
        let v = self.value();
        if v.is_zero() {
            return if self.abs_total().is_zero() { 1.0 } else { f64::INFINITY };
        }
        (self.abs_total().ln_abs() - v.ln_abs()).exp().max(1.0)
    }
}

/// Term-stall stopping rule: stop once `STALL_RUN` consecutive terms are
/// below `tol * |partial sum|`.
#[derive(Clone, Copy, Debug)]
pub struct StallRule {
    ln_tol: f64,
    run: usize,
}

pub const STALL_RUN: usize = 3;

impl StallRule {
    pub fn new(tol: f64) -> Self {
        Self { ln_tol: tol.ln(), run: 0 }
    }

    /// Records a term after it has been added to `partial`; true when the series may stop.
    pub fn update(&mut self, term: SignedLogValue, partial: SignedLogValue) -> bool {
        if term.is_zero() || term.ln_abs() < self.ln_tol + partial.ln_abs() {
            self.run += 1;
        } else {
            self.run = 0;
        }
        self.run >= STALL_RUN
    }
}
