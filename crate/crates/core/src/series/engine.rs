//! Truncated summation of both representations with certified stopping.

use super::coeffs::Coefficient;
use super::kernels::{Family, MixtureKernel, PowerKernel};
use super::{Approach, Evaluation, SumDistribution, Terms, TruncationControl};
use crate::error::{Error, Result};
use crate::specfun::{
    inc_gamma_pq, lgam, reg_inc_beta, LogSum, SignedLogValue, StallRule, SERIES_TOL,
};

const EPS: f64 = f64::EPSILON;
/// Largest estimated relative rounding error accepted from the power series.
pub(crate) const POWER_ERROR_LIMIT: f64 = 1e-10;
const FIRST_CHUNK: usize = 32;
const CHECK_EVERY: usize = 8;

/// Bound on `|C c_m|`:
/// η-μ `E (Nμ)_m ρ^m / m!`, κ-μ `E A^m Σ_j λ^j/j! (Nμ+j)_{m−j}/(m−j)!`.
#[derive(Clone, Copy, Debug)]
pub(crate) enum Majorant {
    Binomial { ln_e: f64 },
    Laguerre { ln_e: f64, lambda: f64 },
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct PowerForm {
    pub ln_c: f64,
    pub n_mu: f64,
    /// Radius `ρ` of the series in `1/(sŵ)`.
    pub rho: f64,
    pub majorant: Majorant,
}

/// Total weight of mixture components `m ≥ ε`.
#[derive(Clone, Copy, Debug)]
pub(crate) enum WeightTail {
    NegBinomial { q: f64, r: f64 },
    Poisson { lambda: f64 },
}

impl WeightTail {
    pub fn mass_from(&self, eps: usize) -> Result<SignedLogValue> {
        if eps == 0 {
            return Ok(SignedLogValue::ONE);
        }
        match *self {
            WeightTail::NegBinomial { q, .. } if q == 0.0 => Ok(SignedLogValue::ZERO),
            WeightTail::NegBinomial { q, r } => reg_inc_beta(q, eps as f64, r),
            WeightTail::Poisson { lambda } if lambda == 0.0 => Ok(SignedLogValue::ZERO),
            WeightTail::Poisson { lambda } => Ok(inc_gamma_pq(eps as f64, lambda)?.0),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct MixtureForm {
    pub ln_w0: f64,
    pub n_mu: f64,
    /// Component rate per unit `1/ŵ`.
    pub theta: f64,
    pub tail: WeightTail,
}

fn kernel_error(k: SignedLogValue) -> f64 {
    4.0 * EPS * k.ln_abs().abs().max(1.0)
}

fn certified(tail: SignedLogValue, sum: SignedLogValue, ctl: &TruncationControl) -> bool {
    let t = tail.to_f64();
    t <= ctl.target_tol && (tail.is_zero() || tail.ln_abs() <= ctl.rel_tol.ln() + sum.ln_abs())
}

/// `Σ_{m≥ε} |C c_m K(Nμ+m)|` bounded through the coefficient majorant.
pub(crate) fn power_tail(form: &PowerForm, k: &dyn PowerKernel, w_hat: f64, eps: usize) -> Result<SignedLogValue> {
    let n = form.n_mu;
    let e = eps as f64;
    // Σ_{m≥ε} z^m/m! = e^z P(ε, z)
    let exp_tail = |z: f64, from: f64| -> Result<SignedLogValue> {
        if from <= 0.0 {
            return Ok(SignedLogValue::from_ln(z));
        }
        Ok(inc_gamma_pq(from, z)?.0 * SignedLogValue::from_ln(z))
    };
    // Σ_{m≥ε} (b)_m r^m/m! = (1−r)^{−b} I_r(ε, b)
    let nb_tail = |r: f64, b: f64, from: f64| -> Result<SignedLogValue> {
        let whole = SignedLogValue::from_ln(-b * (-r).ln_1p());
        if from <= 0.0 {
            return Ok(whole);
        }
        Ok(reg_inc_beta(r, from, b)? * whole)
    };
    match k.family() {
        Family::Density { w } | Family::Distribution { w } => {
            let cdf_factor = match k.family() {
                Family::Distribution { .. } => SignedLogValue::from_f64(w / (n + e)),
                _ => SignedLogValue::ONE,
            };
            let z = form.rho * w / w_hat;
            let base = (n - 1.0) * w.ln() - n * w_hat.ln();
            let s = match form.majorant {
                Majorant::Binomial { ln_e } => {
                    exp_tail(z, e)? * SignedLogValue::from_ln(ln_e + base - lgam(n))
                }
                Majorant::Laguerre { ln_e, lambda } => {
                    // Σ_j (λz)^j / (j! Γ(Nμ+j)) · e^z P(max(ε−j, 0), z)
                    let mut acc = LogSum::new();
                    let mut stall = StallRule::new(SERIES_TOL);
                    let lz = (lambda * z).ln();
                    for j in 0..crate::specfun::MAX_SERIES_TERMS {
                        let jf = j as f64;
                        let coef = if lambda == 0.0 {
                            if j > 0 {
                                break;
                            }
                            -lgam(n)
                        } else {
                            jf * lz - lgam(jf + 1.0) - lgam(n + jf)
                        };
                        let t = exp_tail(z, (e - jf).max(0.0))? * SignedLogValue::from_ln(coef);
                        acc.add(t);
                        if j as f64 >= e && jf > lambda * z && stall.update(t, acc.value()) {
                            break;
                        }
                    }
                    // ln_e holds A^{Nμ} e^{−λ}; the A^{Nμ} is folded into z^{Nμ}
                    acc.value() * SignedLogValue::from_ln(ln_e + base)
                }
            };
            Ok(s * cdf_factor)
        }
        Family::Geometric { sigma } => {
            let r = form.rho / sigma;
            if r >= 1.0 {
                return Err(Error::Unavailable(format!("majorant diverges (ratio {r})")));
            }
            let env = SignedLogValue::from_ln(k.ln_envelope(n + e) - n * sigma.ln());
            let s = match form.majorant {
                Majorant::Binomial { ln_e } => nb_tail(r, n, e)? * SignedLogValue::from_ln(ln_e),
                Majorant::Laguerre { ln_e, lambda } => {
                    let mut acc = LogSum::new();
                    let mut stall = StallRule::new(SERIES_TOL);
                    // Σ_j (λr)^j/j! (1−r)^{−Nμ−j} I_r(max(ε−j, 0), Nμ+j)
                    let x = lambda * r / (1.0 - r);
                    for j in 0..crate::specfun::MAX_SERIES_TERMS {
                        let jf = j as f64;
                        if lambda == 0.0 && j > 0 {
                            break;
                        }
                        let coef = if j == 0 { 0.0 } else { jf * (lambda * r).ln() - lgam(jf + 1.0) };
                        let t = nb_tail(r, n + jf, (e - jf).max(0.0))? * SignedLogValue::from_ln(coef);
                        acc.add(t);
                        if jf >= e && jf > x && stall.update(t, acc.value()) {
                            break;
                        }
                    }
                    acc.value() * SignedLogValue::from_ln(ln_e)
                }
            };
            Ok(s * env)
        }
    }
}

fn gate_of(form: &PowerForm, k: &dyn PowerKernel) -> f64 {
    match k.family() {
        Family::Geometric { sigma } => form.rho / sigma,
        _ => 0.0,
    }
}

impl SumDistribution {
    pub(crate) fn sum_power(&self, k: &dyn PowerKernel, ctl: &TruncationControl) -> Result<Evaluation> {
        let form = self.power_form();
        let gate = gate_of(&form, k);
        if gate >= 1.0 {
            return Err(Error::OutsideApproach1Domain { gate });
        }
        let fixed = match ctl.terms {
            Terms::Fixed(n) => Some(n),
            Terms::Auto => None,
        };
        let limit = fixed.unwrap_or(ctl.max_terms);
        let c_pref = SignedLogValue::from_ln(form.ln_c);
        let mut acc = LogSum::new();
        let mut err = LogSum::new();
        let mut stall = StallRule::new(SERIES_TOL);
        let mut next_check = 0usize;
        let mut bound: Option<f64> = None;
        let mut used = 0usize;
        let mut done = false;
        let mut len = FIRST_CHUNK.min(limit.max(1));
        while !done {
            let cache = self.power_cache();
            let res: Result<()> = cache.with_power(len, |coeffs: &[Coefficient]| {
                for (m, c) in coeffs.iter().enumerate().skip(used) {
                    let kv = k.kernel(form.n_mu + m as f64)?;
                    let t = c_pref * c.value * kv;
                    acc.add(t);
                    err.add(t.abs() * SignedLogValue::from_f64(c.rel_err + kernel_error(kv)));
                    used = m + 1;
                    if fixed.is_some() {
                        if used >= limit {
                            done = true;
                            return Ok(());
                        }
                        continue;
                    }
                    let sum = acc.value();
                    let stalled = stall.update(t, sum);
                    let small = t.is_zero() || t.ln_abs() <= ctl.rel_tol.ln() + sum.ln_abs();
                    if (small || stalled) && used >= next_check {
                        match power_tail(&form, k, self.w_hat, used) {
                            Ok(b) => {
                                bound = Some(b.to_f64());
                                if certified(b, sum, ctl) {
                                    done = true;
                                    return Ok(());
                                }
                                next_check = used + CHECK_EVERY;
                            }
                            Err(Error::Unavailable(_)) if stalled => {
                                bound = None;
                                done = true;
                                return Ok(());
                            }
                            Err(Error::Unavailable(_)) => {}
                            Err(e) => return Err(e),
                        }
                    }
                    if used >= limit {
                        return Err(Error::ConvergenceFailure {
                            terms: used,
                            last_term: t.abs().to_f64(),
                        });
                    }
                }
                Ok(())
            });
            res?;
            len = (len * 2).min(limit);
        }
        if fixed.is_some() {
            bound = power_tail(&form, k, self.w_hat, used).ok().map(|b| b.to_f64());
        }
        let value = acc.value();
        let cancellation = acc.cancellation();
        let rel_error_estimate = if value.is_zero() {
            f64::INFINITY
        } else {
            (err.value() / value.abs()).to_f64() + EPS * cancellation
        };
        if !(rel_error_estimate <= POWER_ERROR_LIMIT) {
            return Err(Error::Cancellation { ratio: rel_error_estimate / EPS });
        }
        Ok(Evaluation {
            value,
            terms_used: used,
            approach: Approach::Power,
            truncation_bound: bound,
            cancellation,
            rel_error_estimate,
        })
    }

    pub(crate) fn sum_mixture(&self, k: &mut dyn MixtureKernel, ctl: &TruncationControl) -> Result<Evaluation> {
        let form = self.mixture_form();
        let fixed = match ctl.terms {
            Terms::Fixed(n) => Some(n),
            Terms::Auto => None,
        };
        let limit = fixed.unwrap_or(ctl.max_terms);
        let w0 = SignedLogValue::from_ln(form.ln_w0);
        let mut acc = LogSum::new();
        let mut err = LogSum::new();
        let mut used = 0usize;
        let mut bound: Option<f64> = None;
        let mut next_check = 0usize;
        let mut lookahead: Option<(usize, SignedLogValue)> = None;
        let mut done = false;
        let mut len = FIRST_CHUNK.min(limit.max(1));
        let cache = self.mixture_cache();
        while !done {
            let res: Result<()> = cache.with_mixture(len, |coeffs: &[Coefficient]| {
                for (m, c) in coeffs.iter().enumerate().skip(used) {
                    let kv = match lookahead {
                        Some((j, v)) if j == m => v,
                        _ => k.kernel(m, form.n_mu + m as f64)?,
                    };
                    let t = w0 * c.value * kv;
                    acc.add(t);
                    err.add(t.abs() * SignedLogValue::from_f64(c.rel_err + kernel_error(kv)));
                    used = m + 1;
                    if let Some(n) = fixed {
                        if used >= n {
                            done = true;
                            return Ok(());
                        }
                        continue;
                    }
                    let sum = acc.value();
                    let small = t.is_zero() || t.ln_abs() <= ctl.rel_tol.ln() + sum.ln_abs();
                    if small || used >= next_check {
                        let mass = form.tail.mass_from(used)?;
                        let kmax = if mass.is_zero() {
                            SignedLogValue::ZERO
                        } else {
                            let first = k.kernel(used, form.n_mu + used as f64)?;
                            lookahead = Some((used, first));
                            if k.decreasing() {
                                first
                            } else {
                                scan_max(k, form.n_mu, used, first)?
                            }
                        };
                        let b = mass * kmax;
                        bound = Some(b.to_f64());
                        if certified(b, sum, ctl) {
                            done = true;
                            return Ok(());
                        }
                        next_check = used + CHECK_EVERY;
                    }
                    if used >= limit {
                        return Err(Error::ConvergenceFailure {
                            terms: used,
                            last_term: t.abs().to_f64(),
                        });
                    }
                }
                Ok(())
            });
            res?;
            len = (len * 2).min(limit);
        }
        if fixed.is_some() {
            let mass = form.tail.mass_from(used)?;
            if !mass.is_zero() {
                let first = k.kernel(used, form.n_mu + used as f64)?;
                let kmax = if k.decreasing() { first } else { scan_max(k, form.n_mu, used, first)? };
                bound = Some((mass * kmax).to_f64());
            } else {
                bound = Some(0.0);
            }
        }
        let value = acc.value();
        let cancellation = acc.cancellation();
        let rel_error_estimate = if value.is_zero() {
            if acc.abs_total().is_zero() { 0.0 } else { f64::INFINITY }
        } else {
            (err.value() / value.abs()).to_f64() + EPS * cancellation
        };
        Ok(Evaluation {
            value,
            terms_used: used,
            approach: Approach::Mixture,
            truncation_bound: bound,
            cancellation,
            rel_error_estimate,
        })
    }

    /// Evaluates with the requested approach; `Auto` prefers the power series
    /// inside its convergence gate and falls back to the mixture when the
    /// power series is rejected.
    pub(crate) fn evaluate(
        &self,
        approach: Approach,
        power: &dyn PowerKernel,
        mixture: &mut dyn MixtureKernel,
        ctl: &TruncationControl,
    ) -> Result<Evaluation> {
        match approach {
            Approach::Power => self.sum_power(power, ctl),
            Approach::Mixture => self.sum_mixture(mixture, ctl),
            Approach::Auto => {
                if self.prefers_power(power) {
                    match self.sum_power(power, ctl) {
                        Ok(e) => return Ok(e),
                        Err(Error::Cancellation { .. })
                        | Err(Error::ConvergenceFailure { .. })
                        | Err(Error::OutsideApproach1Domain { .. }) => {}
                        Err(e) => return Err(e),
                    }
                }
                self.sum_mixture(mixture, ctl)
            }
        }
    }

    fn prefers_power(&self, k: &dyn PowerKernel) -> bool {
        let form = self.power_form();
        match k.family() {
            Family::Geometric { sigma } => form.rho / sigma < 0.9,
            Family::Density { w } | Family::Distribution { w } => form.rho * w / self.w_hat <= 2.0,
        }
    }
}

/// Largest `T(ν)` over `m ≥ from` for a kernel that is log-concave in `m`.
fn scan_max(k: &mut dyn MixtureKernel, n0: f64, from: usize, first: SignedLogValue) -> Result<SignedLogValue> {
    let mut best = first;
    let mut m = from;
    loop {
        m += 1;
        let v = k.kernel(m, n0 + m as f64)?;
        if v.cmp_abs(best) != std::cmp::Ordering::Greater {
            return Ok(best);
        }
        best = v;
    }
}
