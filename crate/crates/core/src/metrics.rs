//! Link-level metrics of the combined SNR `W`: outage, bit error probability
//! of coherent binary schemes and symbol error probability of M-PSK / M-QAM.
//!
//! Each metric is a series in the same two representations as the
//! distribution itself. Power-series terms integrate `(sŵ)^{−ν}` against the
//! defining angular integral; mixture terms are the metric of a single
//! `Gamma(ν, ŵ/θ)` variable.

use std::f64::consts::{PI, SQRT_2};

use crate::error::{domain, invalid, Error, Result};
use crate::series::kernels::{DownwardBlocks, Family, MixtureKernel, PowerKernel};
use crate::series::{Approach, Evaluation, SumDistribution, TruncationControl};
use crate::specfun::{
    appell_f1, inc_beta, lgam, ln_gamma_ratio, reg_inc_beta, SignedLogValue,
};

const LN_SQRT_PI: f64 = 0.572_364_942_924_700_1;

/// Coherent binary modulation, described by its SNR gain `g_b`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BinaryModulation {
    /// `g_b = 1`
    Bpsk,
    /// Orthogonal BFSK, `g_b = 1/2`
    Bfsk,
    /// BFSK with minimum correlation, `g_b = 0.715`
    BfskMinCorrelation,
    /// Any `g_b ∈ (0, 1]`
    Custom(f64),
}

impl BinaryModulation {
    pub fn custom(g: f64) -> Result<Self> {
        if !(g > 0.0 && g <= 1.0) {
            return Err(invalid("g_b", format!("must lie in (0, 1], got {g}")));
        }
        Ok(BinaryModulation::Custom(g))
    }

    pub fn gain(&self) -> f64 {
        match self {
            BinaryModulation::Bpsk => 1.0,
            BinaryModulation::Bfsk => 0.5,
            BinaryModulation::BfskMinCorrelation => 0.715,
            BinaryModulation::Custom(g) => *g,
        }
    }

    pub fn label(&self) -> String {
        match self {
            BinaryModulation::Bpsk => "bpsk".into(),
            BinaryModulation::Bfsk => "bfsk".into(),
            BinaryModulation::BfskMinCorrelation => "bfsk-min".into(),
            BinaryModulation::Custom(g) => format!("binary-g{g}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MaryFamily {
    Psk,
    Qam,
}

/// M-ary PSK or QAM of order `M ≥ 4`, a power of two.
///
/// QAM uses the square-constellation formula; for odd powers of two it is
/// evaluated with the real `√M`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MaryModulation {
    family: MaryFamily,
    order: u32,
}

impl MaryModulation {
    pub fn new(family: MaryFamily, order: u32) -> Result<Self> {
        if order < 4 || !order.is_power_of_two() {
            return Err(invalid("order", format!("must be a power of two ≥ 4, got {order}")));
        }
        Ok(Self { family, order })
    }

    pub fn psk(order: u32) -> Result<Self> {
        Self::new(MaryFamily::Psk, order)
    }

    pub fn qam(order: u32) -> Result<Self> {
        Self::new(MaryFamily::Qam, order)
    }

    pub fn family(&self) -> MaryFamily {
        self.family
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    /// `g_p = sin²(π/M)` or `g_q = 3/(2(M−1))`.
    pub fn gain(&self) -> f64 {
        let m = f64::from(self.order);
        match self.family {
            MaryFamily::Psk => (PI / m).sin().powi(2),
            MaryFamily::Qam => 1.5 / (m - 1.0),
        }
    }

    pub fn label(&self) -> String {
        match self.family {
            MaryFamily::Psk => format!("{}-psk", self.order),
            MaryFamily::Qam => format!("{}-qam", self.order),
        }
    }
}

fn ln_half_gamma_ratio(nu: f64) -> f64 {
    // ln Γ(ν+½)/Γ(ν+1)
    ln_gamma_ratio(nu + 0.5, nu + 1.0)
}

fn unregularized_beta(z: f64, a: f64, b: f64) -> Result<SignedLogValue> {
    let v = inc_beta(z, a, b)?;
    Ok(v.magnitude)
}

/// Power-series kernel `σ^{−ν} D(ν)` of an angular-integral metric.
struct AngularPower {
    sigma: f64,
    shape: Shape,
}

#[derive(Clone, Copy)]
enum Shape {
    /// `Γ(ν+½)/(2√π Γ(ν+1))`
    Bep,
    /// `(2√π Γ(ν+½)/Γ(ν+1) − B(x; ν+½, ½)) / (2π)` with `x = sin²(π/M)`
    Psk { x: f64 },
    /// `2q/√π (Γ(ν+½)/Γ(ν+1) − q/√π B(½; ν+½, ½))` with `q = 1 − 1/√M`
    Qam { q: f64 },
}

impl Shape {
    fn value(&self, nu: f64) -> Result<SignedLogValue> {
        let r = ln_half_gamma_ratio(nu);
        match *self {
            Shape::Bep => Ok(SignedLogValue::from_ln(r - LN_SQRT_PI - std::f64::consts::LN_2)),
            Shape::Psk { x } => {
                let whole = SignedLogValue::from_ln(std::f64::consts::LN_2 + LN_SQRT_PI + r);
                let part = unregularized_beta(x, nu + 0.5, 0.5)?;
                Ok((whole - part) * SignedLogValue::from_f64(0.5 / PI))
            }
            Shape::Qam { q } => {
                let whole = SignedLogValue::from_ln(r);
                let part = unregularized_beta(0.5, nu + 0.5, 0.5)? * SignedLogValue::from_ln(q.ln() - LN_SQRT_PI);
                Ok((whole - part) * SignedLogValue::from_ln((2.0 * q).ln() - LN_SQRT_PI))
            }
        }
    }

    /// Non-increasing upper envelope of `value`.
    fn ln_envelope(&self, nu: f64) -> f64 {
        let r = ln_half_gamma_ratio(nu) - LN_SQRT_PI;
        match *self {
            Shape::Bep => r - std::f64::consts::LN_2,
            Shape::Psk { .. } => r,
            Shape::Qam { q } => (2.0 * q).ln() + r,
        }
    }
}

impl PowerKernel for AngularPower {
    fn family(&self) -> Family {
        Family::Geometric { sigma: self.sigma }
    }
    fn kernel(&self, nu: f64) -> Result<SignedLogValue> {
        Ok(self.shape.value(nu)? * SignedLogValue::from_ln(-nu * self.sigma.ln()))
    }
    fn ln_envelope(&self, nu: f64) -> f64 {
        self.shape.ln_envelope(nu)
    }
}

/// `½ I_y(ν, ½)` for `ν = n0 + m`: the BEP of one gamma component.
fn half_beta_table(
    n0: f64,
    y: f64,
) -> DownwardBlocks<impl FnMut(f64) -> Result<SignedLogValue>, impl FnMut(f64) -> SignedLogValue> {
    let half = SignedLogValue::from_f64(0.5);
    let ln_y = y.ln();
    let ln_sqrt_1my = 0.5 * (-y).ln_1p();
    DownwardBlocks::new(
        n0,
        move |nu| Ok(reg_inc_beta(y, nu, 0.5)? * half),
        // I_y(ν,½) − I_y(ν+1,½) = y^ν (1−y)^½ / (ν B(ν,½))
        move |nu| {
            let ln_b = lgam(nu) + LN_SQRT_PI - lgam(nu + 0.5);
            SignedLogValue::from_ln(nu * ln_y + ln_sqrt_1my - nu.ln() - ln_b) * half
        },
    )
}

struct MixtureBep<T> {
    table: T,
}

impl<A, D> MixtureKernel for MixtureBep<DownwardBlocks<A, D>>
where
    A: FnMut(f64) -> Result<SignedLogValue>,
    D: FnMut(f64) -> SignedLogValue,
{
    fn kernel(&mut self, m: usize, _nu: f64) -> Result<SignedLogValue> {
        self.table.get(m)
    }
}

/// `u^ν F1(½; ½−ν, ν; 3/2; x, x u)`, the Appell part of the single-gamma SEP.
fn appell_part(nu: f64, x: f64, u: f64) -> Result<SignedLogValue> {
    Ok(appell_f1(0.5, 0.5 - nu, nu, 1.5, x, x * u)? * SignedLogValue::from_ln(nu * u.ln()))
}

struct MixturePsk<T> {
    bep: T,
    /// `cos(π/M)`
    cos: f64,
    u: f64,
}

impl<A, D> MixtureKernel for MixturePsk<DownwardBlocks<A, D>>
where
    A: FnMut(f64) -> Result<SignedLogValue>,
    D: FnMut(f64) -> SignedLogValue,
{
    fn kernel(&mut self, m: usize, nu: f64) -> Result<SignedLogValue> {
        let f1 = appell_part(nu, self.cos * self.cos, self.u)? * SignedLogValue::from_f64(self.cos / PI);
        Ok(f1 + self.bep.get(m)?)
    }
}

struct MixtureQam {
    sqrt_m: f64,
    /// `θ / (g_q ŵ)`
    c: f64,
    y: f64,
}

impl MixtureKernel for MixtureQam {
    fn kernel(&mut self, _m: usize, nu: f64) -> Result<SignedLogValue> {
        let (sqrt_m, c, y) = (self.sqrt_m, self.c, self.y);
        // (−1)^{−ν} B_{−c}(ν, ½−ν) on the principal branch
        let neg = inc_beta(-c, nu, 0.5 - nu)?;
        let phase = (neg.phase - PI * nu).rem_euclid(2.0 * PI);
        let (im, re) = phase.sin_cos();
        if im.abs() > 1e-9 * re.abs() {
            return Err(domain("sep_qam", format!("complex incomplete Beta product has phase {phase}")));
        }
        let paired = neg.magnitude * SignedLogValue::from_f64(re);
        let b = unregularized_beta(y, nu, 0.5)?;
        let lead = SignedLogValue::from_ln(LN_SQRT_PI + lgam(nu + 0.5) - lgam(nu));
        let bracket = lead * (paired * SignedLogValue::from_f64(sqrt_m) - b * SignedLogValue::from_f64(sqrt_m - 1.0));
        let f1 = appell_f1(0.5, 0.5 - nu, nu, 1.5, 0.5, 0.5 * y)?
            * SignedLogValue::from_ln(nu * y.ln())
            * SignedLogValue::from_f64(SQRT_2 * (sqrt_m - 1.0));
        let m = sqrt_m * sqrt_m;
        Ok((bracket + f1) * SignedLogValue::from_f64(2.0 * (sqrt_m - 1.0) / (m * PI)))
    }
}

fn check_threshold(gamma_th: f64) -> Result<()> {
    if !(gamma_th > 0.0) || !gamma_th.is_finite() {
        return Err(invalid("gamma_th", format!("must be positive and finite, got {gamma_th}")));
    }
    Ok(())
}

/// `P(W < γ_th)`.
pub fn outage(dist: &SumDistribution, gamma_th: f64, approach: Approach, ctl: &TruncationControl) -> Result<Evaluation> {
    check_threshold(gamma_th)?;
    dist.cdf(gamma_th, approach, ctl)
}

/// `1 − P_out`.
pub fn coverage(dist: &SumDistribution, gamma_th: f64, approach: Approach, ctl: &TruncationControl) -> Result<Evaluation> {
    let mut e = outage(dist, gamma_th, approach, ctl)?;
    e.value = SignedLogValue::ONE - e.value;
    Ok(e)
}

/// `ln(C c_0)`, the coefficient of `(sŵ)^{−Nμ}` in the MGF at large `s`.
fn ln_leading(dist: &SumDistribution) -> f64 {
    let c0 = dist.power_cache().with_power(1, |c| c[0].value);
    dist.power_form().ln_c + c0.ln_abs()
}

/// First term of the power series: `C c_0 (γ_th/ŵ)^{Nμ} / Γ(Nμ+1)`.
pub fn outage_asymptotic(dist: &SumDistribution, gamma_th: f64) -> Result<SignedLogValue> {
    check_threshold(gamma_th)?;
    let n = dist.n_mu();
    Ok(SignedLogValue::from_ln(ln_leading(dist) + n * (gamma_th / dist.w_hat()).ln() - lgam(n + 1.0)))
}

fn angular(
    dist: &SumDistribution,
    g: f64,
    shape: Shape,
    mixture: &mut dyn MixtureKernel,
    approach: Approach,
    ctl: &TruncationControl,
) -> Result<Evaluation> {
    let power = AngularPower { sigma: g * dist.w_hat(), shape };
    dist.evaluate(approach, &power, mixture, ctl)
}

/// `½ E[erfc(√(g_b W))]`.
pub fn bep(dist: &SumDistribution, modulation: BinaryModulation, approach: Approach, ctl: &TruncationControl) -> Result<Evaluation> {
    let g = modulation.gain();
    let form = dist.mixture_form();
    let y = form.theta / (form.theta + g * dist.w_hat());
    let mut mixture = MixtureBep { table: half_beta_table(form.n_mu, y) };
    angular(dist, g, Shape::Bep, &mut mixture, approach, ctl)
}

/// First power-series term of the BEP.
pub fn bep_asymptotic(dist: &SumDistribution, modulation: BinaryModulation) -> Result<SignedLogValue> {
    asymptotic(dist, modulation.gain(), Shape::Bep)
}

/// Bound on the error of the power-series BEP truncated after `eps` terms.
///
/// `Unavailable` outside the convergence gate.
pub fn bep_truncation_bound(dist: &SumDistribution, modulation: BinaryModulation, eps: usize) -> Result<f64> {
    let k = AngularPower { sigma: modulation.gain() * dist.w_hat(), shape: Shape::Bep };
    Ok(dist.power_kernel_tail(&k, eps)?.to_f64())
}

fn asymptotic(dist: &SumDistribution, g: f64, shape: Shape) -> Result<SignedLogValue> {
    let n = dist.n_mu();
    let k = shape.value(n)? * SignedLogValue::from_ln(-n * (g * dist.w_hat()).ln());
    Ok(k * SignedLogValue::from_ln(ln_leading(dist)))
}

fn psk_shape(m: &MaryModulation) -> Shape {
    Shape::Psk { x: m.gain() }
}

fn qam_shape(m: &MaryModulation) -> Shape {
    Shape::Qam { q: 1.0 - 1.0 / f64::from(m.order()).sqrt() }
}

fn require(m: &MaryModulation, family: MaryFamily) -> Result<()> {
    if m.family() != family {
        return Err(invalid("modulation", format!("{} given where {:?} is required", m.label(), family)));
    }
    Ok(())
}

/// M-PSK symbol error probability.
pub fn sep_psk(dist: &SumDistribution, m: &MaryModulation, approach: Approach, ctl: &TruncationControl) -> Result<Evaluation> {
    require(m, MaryFamily::Psk)?;
    let g = m.gain();
    let form = dist.mixture_form();
    let u = form.theta / (form.theta + g * dist.w_hat());
    let cos = (PI / f64::from(m.order())).cos();
    let mut mixture = MixturePsk { bep: half_beta_table(form.n_mu, u), cos, u };
    angular(dist, g, psk_shape(m), &mut mixture, approach, ctl)
}

pub fn sep_psk_asymptotic(dist: &SumDistribution, m: &MaryModulation) -> Result<SignedLogValue> {
    require(m, MaryFamily::Psk)?;
    asymptotic(dist, m.gain(), psk_shape(m))
}

/// M-QAM symbol error probability.
pub fn sep_qam(dist: &SumDistribution, m: &MaryModulation, approach: Approach, ctl: &TruncationControl) -> Result<Evaluation> {
    require(m, MaryFamily::Qam)?;
    let g = m.gain();
    let form = dist.mixture_form();
    let c = form.theta / (g * dist.w_hat());
    let mut mixture = MixtureQam { sqrt_m: f64::from(m.order()).sqrt(), c, y: c / (1.0 + c) };
    angular(dist, g, qam_shape(m), &mut mixture, approach, ctl)
}

pub fn sep_qam_asymptotic(dist: &SumDistribution, m: &MaryModulation) -> Result<SignedLogValue> {
    require(m, MaryFamily::Qam)?;
    asymptotic(dist, m.gain(), qam_shape(m))
}

/// Symbol error probability for either family.
pub fn sep(dist: &SumDistribution, m: &MaryModulation, approach: Approach, ctl: &TruncationControl) -> Result<Evaluation> {
    match m.family() {
        MaryFamily::Psk => sep_psk(dist, m, approach, ctl),
        MaryFamily::Qam => sep_qam(dist, m, approach, ctl),
    }
}

pub fn sep_asymptotic(dist: &SumDistribution, m: &MaryModulation) -> Result<SignedLogValue> {
    match m.family() {
        MaryFamily::Psk => sep_psk_asymptotic(dist, m),
        MaryFamily::Qam => sep_qam_asymptotic(dist, m),
    }
}

/// A metric evaluated at every point of a sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Metric {
    /// Outage at a linear SNR threshold.
    Outage { gamma_th: f64 },
    /// Coverage at a linear SNR threshold.
    Coverage { gamma_th: f64 },
    Bep(BinaryModulation),
    Sep(MaryModulation),
}

impl Metric {
    pub fn name(&self) -> String {
        match self {
            Metric::Outage { .. } => "outage".into(),
            Metric::Coverage { .. } => "coverage".into(),
            Metric::Bep(m) => format!("bep-{}", m.label()),
            Metric::Sep(m) => format!("sep-{}", m.label()),
        }
    }

    pub fn evaluate(&self, dist: &SumDistribution, approach: Approach, ctl: &TruncationControl) -> Result<Evaluation> {
        match self {
            Metric::Outage { gamma_th } => outage(dist, *gamma_th, approach, ctl),
            Metric::Coverage { gamma_th } => coverage(dist, *gamma_th, approach, ctl),
            Metric::Bep(m) => bep(dist, *m, approach, ctl),
            Metric::Sep(m) => sep(dist, m, approach, ctl),
        }
    }

    /// High-SNR asymptote; coverage has none.
    pub fn asymptotic(&self, dist: &SumDistribution) -> Result<SignedLogValue> {
        match self {
            Metric::Outage { gamma_th } => outage_asymptotic(dist, *gamma_th),
            Metric::Coverage { .. } => Err(Error::Unavailable("coverage has no power-law asymptote".into())),
            Metric::Bep(m) => bep_asymptotic(dist, *m),
            Metric::Sep(m) => sep_asymptotic(dist, m),
        }
    }
}
