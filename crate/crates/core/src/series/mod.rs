//! Distribution of `W = Σ_{i=1}^N W_i` for i.i.d. squared η-μ or κ-μ branches.
//!
//! Two exact series are available. The power series (approach 1) expands the
//! MGF in `1/(sŵ)`; it converges for every PDF/CDF argument but only inside a
//! gate `ρ/(gŵ) < 1` for error-probability integrals, and it alternates. The
//! mixture series (approach 2) writes `W` as a weighted sum of gamma variables
//! with non-negative weights summing to one, which gives certified truncation
//! everywhere.

mod coeffs;
mod engine;
pub(crate) mod kernels;

pub use coeffs::{power_coefficient_uncached, Coefficient, CoefficientCache};

use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::fading::FadingModel;
use crate::specfun::{lgam, SignedLogValue};
use engine::{Majorant, MixtureForm, PowerForm, WeightTail};
use kernels::*;

/// Which series representation to sum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Approach {
    /// Power series in `1/(sŵ)` (approach 1).
    Power,
    /// Gamma mixture (approach 2).
    Mixture,
    /// Power series inside its gate when well conditioned, else the mixture.
    Auto,
}

impl Approach {
    pub fn label(&self) -> &'static str {
        match self {
            Approach::Power => "1",
            Approach::Mixture => "2",
            Approach::Auto => "auto",
        }
    }
}

impl std::str::FromStr for Approach {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1" => Ok(Approach::Power),
            "2" => Ok(Approach::Mixture),
            "auto" => Ok(Approach::Auto),
            _ => Err(invalid("approach", format!("expected 1, 2 or auto, got `{s}`"))),
        }
    }
}

/// Number of series terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Terms {
    /// Stop once the truncation bound meets the tolerances.
    Auto,
    /// Sum exactly this many terms.
    Fixed(usize),
}

/// `ζ` in the bounds: 0 for the density, 1 for the distribution function.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Pdf,
    Cdf,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruncationControl {
    pub terms: Terms,
    /// Absolute tolerance on the truncation error.
    pub target_tol: f64,
    /// Relative tolerance on the truncation error.
    pub rel_tol: f64,
    pub max_terms: usize,
}

impl Default for TruncationControl {
    fn default() -> Self {
        Self { terms: Terms::Auto, target_tol: 1e-12, rel_tol: 1e-12, max_terms: 10_000 }
    }
}

impl TruncationControl {
    pub fn fixed(n: usize) -> Self {
        Self { terms: Terms::Fixed(n), ..Self::default() }
    }
}

/// Result of a series evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Evaluation {
    pub value: SignedLogValue,
    pub terms_used: usize,
    /// The representation actually summed (never `Auto`).
    pub approach: Approach,
    /// Rigorous bound on the omitted tail, when available.
    pub truncation_bound: Option<f64>,
    /// `Σ|t| / |Σt|` of the summed terms.
    pub cancellation: f64,
    /// First-order estimate of the relative rounding error.
    pub rel_error_estimate: f64,
}

impl Evaluation {
    pub fn to_f64(&self) -> f64 {
        self.value.to_f64()
    }

    pub(crate) fn exact(value: SignedLogValue, approach: Approach) -> Self {
        Self {
            value,
            terms_used: 0,
            approach,
            truncation_bound: Some(0.0),
            cancellation: 1.0,
            rel_error_estimate: 0.0,
        }
    }
}

/// Sum of `N` i.i.d. squared fading variables with per-branch mean `ŵ`.
#[derive(Clone)]
pub struct SumDistribution {
    model: FadingModel,
    n: u32,
    w_hat: f64,
    user: Arc<CoefficientCache>,
    power: Arc<CoefficientCache>,
    mixture: Arc<CoefficientCache>,
}

impl std::fmt::Debug for SumDistribution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SumDistribution")
            .field("model", &self.model)
            .field("n", &self.n)
            .field("w_hat", &self.w_hat)
            .finish()
    }
}

impl SumDistribution {
    pub fn new(model: impl Into<FadingModel>, n_branches: u32, w_hat: f64) -> Result<Self> {
        let model = model.into();
        if n_branches == 0 {
            return Err(invalid("n", "need at least one branch"));
        }
        if !(w_hat > 0.0) || !w_hat.is_finite() {
            return Err(invalid("w_hat", format!("mean SNR must be positive and finite, got {w_hat}")));
        }
        // the mirror (η, p) → (1/η, 1/p) gives the same law; each series is
        // summed in the orientation where it is sign-definite
        let (power_model, mixture_model) = match model {
            FadingModel::EtaMu(p) if p.p() < p.eta() => (FadingModel::EtaMu(p.mirrored()), model),
            FadingModel::EtaMu(p) if p.p() > p.eta() => (model, FadingModel::EtaMu(p.mirrored())),
            _ => (model, model),
        };
        Ok(Self {
            model,
            n: n_branches,
            w_hat,
            user: CoefficientCache::shared(model, n_branches),
            power: CoefficientCache::shared(power_model, n_branches),
            mixture: CoefficientCache::shared(mixture_model, n_branches),
        })
    }

    /// Same model and `N` at another mean SNR; coefficient caches are shared.
    pub fn with_w_hat(&self, w_hat: f64) -> Result<Self> {
        if !(w_hat > 0.0) || !w_hat.is_finite() {
            return Err(invalid("w_hat", format!("mean SNR must be positive and finite, got {w_hat}")));
        }
        Ok(Self { w_hat, ..self.clone() })
    }

    pub fn model(&self) -> &FadingModel {
        &self.model
    }

    pub fn branches(&self) -> u32 {
        self.n
    }

    pub fn w_hat(&self) -> f64 {
        self.w_hat
    }

    /// `E[W] = Nŵ`.
    pub fn mean(&self) -> f64 {
        f64::from(self.n) * self.w_hat
    }

    /// `Nμ`, the diversity order.
    pub fn n_mu(&self) -> f64 {
        f64::from(self.n) * self.model.mu()
    }

    pub(crate) fn power_cache(&self) -> &CoefficientCache {
        &self.power
    }

    pub(crate) fn mixture_cache(&self) -> &CoefficientCache {
        &self.mixture
    }

    pub(crate) fn power_form(&self) -> PowerForm {
        let n = f64::from(self.n);
        let n_mu = self.n_mu();
        match self.power.model() {
            FadingModel::EtaMu(p) => {
                let ln_e = n * (p.a() * p.ratio().ln() + p.mu() * p.xi().ln());
                PowerForm {
                    ln_c: ln_e - n * lgam(p.a()),
                    n_mu,
                    rho: p.xi() * p.ratio().max(1.0),
                    majorant: Majorant::Binomial { ln_e },
                }
            }
            FadingModel::KappaMu(p) => {
                let lambda = n * p.kappa() * p.mu();
                let ln_c = n_mu * p.rate().ln() - lambda;
                PowerForm { ln_c, n_mu, rho: p.rate(), majorant: Majorant::Laguerre { ln_e: ln_c, lambda } }
            }
        }
    }

    pub(crate) fn mixture_form(&self) -> MixtureForm {
        let n = f64::from(self.n);
        let n_mu = self.n_mu();
        match self.mixture.model() {
            FadingModel::EtaMu(p) => MixtureForm {
                ln_w0: n * (p.a() * p.ratio().ln() - lgam(p.a())),
                n_mu,
                theta: p.xi(),
                tail: WeightTail::NegBinomial { q: 1.0 - p.ratio(), r: n * p.a() },
            },
            FadingModel::KappaMu(p) => {
                let lambda = n * p.kappa() * p.mu();
                MixtureForm { ln_w0: -lambda, n_mu, theta: p.rate(), tail: WeightTail::Poisson { lambda } }
            }
        }
    }

    /// Convergence radius `ρ` of the power series in `1/(sŵ)`:
    /// `ξ·max(1, p/η)` for η-μ and `(1+κ)μ` for κ-μ.
    pub fn power_radius(&self) -> f64 {
        self.power_form().rho
    }

    /// Gate `ρ/(gŵ)` of the power series for an integral with SNR gain `g`.
    pub fn power_gate(&self, g: f64) -> f64 {
        self.power_radius() / (g * self.w_hat)
    }

    fn coefficient(&self, want_eta: bool, power: bool, m: usize) -> Result<SignedLogValue> {
        let is_eta = matches!(self.model, FadingModel::EtaMu(_));
        if is_eta != want_eta {
            return Err(invalid("model", format!("coefficient not defined for the {} model", self.model.name())));
        }
        Ok(if power {
            self.user.with_power(m + 1, |c| c[m].value)
        } else {
            self.user.with_mixture(m + 1, |c| c[m].value)
        })
    }

    /// Power-series coefficient `h_m` of the η-μ sum.
    pub fn coeff_h(&self, m: usize) -> Result<SignedLogValue> {
        self.coefficient(true, true, m)
    }

    /// Mixture coefficient `h̃_m` of the η-μ sum.
    pub fn coeff_h_tilde(&self, m: usize) -> Result<SignedLogValue> {
        self.coefficient(true, false, m)
    }

    /// Power-series coefficient `k_m` of the κ-μ sum.
    pub fn coeff_k(&self, m: usize) -> Result<SignedLogValue> {
        self.coefficient(false, true, m)
    }

    /// Mixture coefficient `k̃_m = (Nκμ)^m / m!` of the κ-μ sum.
    pub fn coeff_k_tilde(&self, m: usize) -> Result<SignedLogValue> {
        self.coefficient(false, false, m)
    }

    /// `E[e^{−sW}]` for `s ≥ 0`.
    pub fn mgf(&self, s: f64, approach: Approach, ctl: &TruncationControl) -> Result<Evaluation> {
        if !(s >= 0.0) || !s.is_finite() {
            return Err(invalid("s", format!("must be non-negative and finite, got {s}")));
        }
        if s == 0.0 {
            return Ok(Evaluation::exact(SignedLogValue::ONE, resolved(approach)));
        }
        let theta = self.mixture_form().theta;
        let power = PowerMgf { s_w_hat: s * self.w_hat };
        let mut mixture = MixtureMgf { s_w_hat_over_theta: s * self.w_hat / theta };
        self.evaluate(approach, &power, &mut mixture, ctl)
    }

    /// Density of `W` at `w ≥ 0`.
    pub fn pdf(&self, w: f64, approach: Approach, ctl: &TruncationControl) -> Result<Evaluation> {
        check_w(w)?;
        if w == 0.0 {
            let n_mu = self.n_mu();
            let v = if n_mu < 1.0 {
                SignedLogValue::from_ln(f64::INFINITY)
            } else if n_mu > 1.0 {
                SignedLogValue::ZERO
            } else {
                let f = self.power_form();
                self.power.with_power(1, |c| c[0].value) * SignedLogValue::from_ln(f.ln_c - self.w_hat.ln())
            };
            return Ok(Evaluation::exact(v, resolved(approach)));
        }
        let theta = self.mixture_form().theta;
        let power = PowerPdf { w, w_hat: self.w_hat };
        let mut mixture = MixturePdf { w, rate: theta / self.w_hat };
        self.evaluate(approach, &power, &mut mixture, ctl)
    }

    /// `P(W ≤ w)`.
    pub fn cdf(&self, w: f64, approach: Approach, ctl: &TruncationControl) -> Result<Evaluation> {
        check_w(w)?;
        if w == 0.0 {
            return Ok(Evaluation::exact(SignedLogValue::ZERO, resolved(approach)));
        }
        let form = self.mixture_form();
        let power = PowerCdf { w, w_hat: self.w_hat };
        let mut mixture = MixtureCdf { table: gamma_cdf_table(form.n_mu, form.theta * w / self.w_hat) };
        self.evaluate(approach, &power, &mut mixture, ctl)
    }

    fn power_kernel(&self, w: f64, mode: Mode) -> Box<dyn PowerKernel> {
        match mode {
            Mode::Pdf => Box::new(PowerPdf { w, w_hat: self.w_hat }),
            Mode::Cdf => Box::new(PowerCdf { w, w_hat: self.w_hat }),
        }
    }

    /// Bound on `Σ_m |term|` of the power series at `w`; dominates `|pdf|` or `|cdf|`.
    pub fn convergence_bound(&self, w: f64, mode: Mode) -> Result<f64> {
        self.truncation_bound(w, mode, 0)
    }

    /// Bound on the error of the power series at `w` truncated after `eps` terms.
    pub fn truncation_bound(&self, w: f64, mode: Mode, eps: usize) -> Result<f64> {
        check_w(w)?;
        if w == 0.0 {
            return Ok(0.0);
        }
        let k = self.power_kernel(w, mode);
        Ok(engine::power_tail(&self.power_form(), k.as_ref(), self.w_hat, eps)?.to_f64())
    }

    /// Bound on the error of a power series with kernel `k` truncated after `eps` terms.
    pub(crate) fn power_kernel_tail(&self, k: &dyn PowerKernel, eps: usize) -> Result<SignedLogValue> {
        engine::power_tail(&self.power_form(), k, self.w_hat, eps)
    }

    /// Bound on the error of the mixture series at `w` truncated after `eps` terms.
    pub fn mixture_truncation_bound(&self, w: f64, mode: Mode, eps: usize) -> Result<f64> {
        check_w(w)?;
        let form = self.mixture_form();
        let mass = form.tail.mass_from(eps)?;
        if mass.is_zero() || w == 0.0 {
            return Ok(0.0);
        }
        let x = form.theta * w / self.w_hat;
        let nu = form.n_mu + eps as f64;
        let kmax = match mode {
            Mode::Cdf => crate::specfun::inc_gamma_pq(nu, x)?.0,
            Mode::Pdf => {
                let mut k = MixturePdf { w, rate: form.theta / self.w_hat };
                let mut best = k.kernel(eps, nu)?;
                let mut m = eps;
                loop {
                    m += 1;
                    let v = k.kernel(m, form.n_mu + m as f64)?;
                    if v.cmp_abs(best) != std::cmp::Ordering::Greater {
                        break best;
                    }
                    best = v;
                }
            }
        };
        Ok((mass * kmax).to_f64())
    }

    /// Smallest number of terms whose truncation bound is at most `target_tol`
    /// at every `w` in `ws`.
    pub fn choose_truncation(
        &self,
        ws: &[f64],
        mode: Mode,
        approach: Approach,
        target_tol: f64,
        max_terms: usize,
    ) -> Result<usize> {
        let bound = |eps: usize| -> Result<f64> {
            let mut worst: f64 = 0.0;
            for &w in ws {
                let b = match approach {
                    Approach::Power => self.truncation_bound(w, mode, eps)?,
                    _ => self.mixture_truncation_bound(w, mode, eps)?,
                };
                worst = worst.max(b);
            }
            Ok(worst)
        };
        if bound(max_terms)? > target_tol {
            return Err(Error::ConvergenceFailure { terms: max_terms, last_term: bound(max_terms)? });
        }
        let (mut lo, mut hi) = (0usize, max_terms);
        while lo < hi {
            let mid = (lo + hi) / 2;
            if bound(mid)? <= target_tol {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        Ok(lo)
    }
}

fn resolved(a: Approach) -> Approach {
    match a {
        Approach::Auto => Approach::Mixture,
        other => other,
    }
}

fn check_w(w: f64) -> Result<()> {
    if !(w >= 0.0) || !w.is_finite() {
        return Err(invalid("w", format!("must be non-negative and finite, got {w}")));
    }
    Ok(())
}
