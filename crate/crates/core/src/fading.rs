//! Extended η-μ and κ-μ single-branch models.

use crate::error::{invalid, Result};
use crate::specfun::{bessel_i, hyp1f1, ln_gamma, SignedLogValue};

/// Extended η-μ parameters with the derived quantities used by the sum series.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EtaMuParams {
    eta: f64,
    mu: f64,
    p: f64,
}

impl EtaMuParams {
    /// `η > 0` is the in-phase/quadrature power ratio, `μ > 0` the cluster count
    /// and `p > 0` the ratio of in-phase to quadrature clusters.
    pub fn new(eta: f64, mu: f64, p: f64) -> Result<Self> {
        for (name, v) in [("eta", eta), ("mu", mu), ("p", p)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(invalid(name, format!("must be positive and finite, got {v}")));
            }
        }
        Ok(Self { eta, mu, p })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// In-phase cluster count `a = μp/(1+p)`.
    pub fn a(&self) -> f64 {
        self.mu * self.p / (1.0 + self.p)
    }

    /// Quadrature cluster count `μ/(1+p)`.
    pub fn a_q(&self) -> f64 {
        self.mu / (1.0 + self.p)
    }

    /// `ξ = μ(1+η)/(1+p)`.
    pub fn xi(&self) -> f64 {
        self.mu * (1.0 + self.eta) / (1.0 + self.p)
    }

    /// `p/η`.
    pub fn ratio(&self) -> f64 {
        self.p / self.eta
    }

    /// The equivalent parametrisation `(1/η, μ, 1/p)`.
    pub fn mirrored(&self) -> Self {
        Self { eta: 1.0 / self.eta, mu: self.mu, p: 1.0 / self.p }
    }

    /// Gamma components of the branch power `G1 + G2` as `(shape, scale)` pairs.
    pub fn components(&self, w_hat: f64) -> [(f64, f64); 2] {
        let xi = self.xi();
        [(self.a(), w_hat / (xi * self.ratio())), (self.a_q(), w_hat / xi)]
    }
}

/// κ-μ parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KappaMuParams {
    kappa: f64,
    mu: f64,
}

impl KappaMuParams {
    /// `κ ≥ 0` is the dominant-to-scattered power ratio and `μ > 0` the cluster count.
    pub fn new(kappa: f64, mu: f64) -> Result<Self> {
        if !(kappa > 0.0) || !kappa.is_finite() {
            return Err(invalid("kappa", format!("must be positive and finite, got {kappa}")));
        }
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(invalid("mu", format!("must be positive and finite, got {mu}")));
        }
        Ok(Self { kappa, mu })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// `A = (1+κ)μ`, the gamma rate of each mixture component (per unit `ŵ`).
    pub fn rate(&self) -> f64 {
        (1.0 + self.kappa) * self.mu
    }

    /// `K = μ(κ+1)(κμ+1)`.
    pub fn k_bound(&self) -> f64 {
        self.mu * (self.kappa + 1.0) * (self.kappa * self.mu + 1.0)
    }
}

/// A single-branch fading law.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FadingModel {
    EtaMu(EtaMuParams),
    KappaMu(KappaMuParams),
}

impl From<EtaMuParams> for FadingModel {
    fn from(p: EtaMuParams) -> Self {
        FadingModel::EtaMu(p)
    }
}

impl From<KappaMuParams> for FadingModel {
    fn from(p: KappaMuParams) -> Self {
        FadingModel::KappaMu(p)
    }
}

fn check_w_hat(w_hat: f64) -> Result<()> {
    if !(w_hat > 0.0) || !w_hat.is_finite() {
        return Err(invalid("w_hat", format!("mean SNR must be positive and finite, got {w_hat}")));
    }
    Ok(())
}

impl FadingModel {
    pub fn mu(&self) -> f64 {
        match self {
            FadingModel::EtaMu(p) => p.mu(),
            FadingModel::KappaMu(p) => p.mu(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FadingModel::EtaMu(_) => "eta-mu",
            FadingModel::KappaMu(_) => "kappa-mu",
        }
    }

    /// Density of the branch power `W = R²` at `w ≥ 0`, in the log domain.
    pub fn power_pdf_log(&self, w_hat: f64, w: f64) -> Result<SignedLogValue> {
        check_w_hat(w_hat)?;
        if !(w >= 0.0) {
            return Err(invalid("w", format!("must be non-negative, got {w}")));
        }
        if w == 0.0 {
            return Ok(self.density_at_zero(w_hat));
        }
        match self {
            FadingModel::EtaMu(p) => {
                let (mu, a, xi) = (p.mu(), p.a(), p.xi());
                let ln_pre = a * p.ratio().ln() + mu * (xi / w_hat).ln() + (mu - 1.0) * w.ln()
                    - ln_gamma(mu)?
                    - xi * w / w_hat;
                let f = hyp1f1(a, mu, xi * (1.0 - p.ratio()) * w / w_hat)?;
                Ok(f * SignedLogValue::from_ln(ln_pre))
            }
            FadingModel::KappaMu(p) => {
                let (k, mu, rate) = (p.kappa(), p.mu(), p.rate());
                let z = 2.0 * mu * (k * (1.0 + k) * w / w_hat).sqrt();
                let ln_pre = mu.ln() + 0.5 * (mu + 1.0) * (1.0 + k).ln() + 0.5 * (mu - 1.0) * w.ln()
                    - 0.5 * (mu - 1.0) * k.ln()
                    - k * mu
                    - 0.5 * (mu + 1.0) * w_hat.ln()
                    - rate * w / w_hat;
                Ok(bessel_i(mu - 1.0, z)? * SignedLogValue::from_ln(ln_pre))
            }
        }
    }

    /// `ln C0` where `f_W(w) ≈ C0 w^{μ−1}` as `w → 0`.
    fn ln_leading_coefficient(&self, w_hat: f64) -> f64 {
        let mu = self.mu();
        let g = crate::specfun::lgam(mu);
        match self {
            FadingModel::EtaMu(p) => p.a() * p.ratio().ln() + mu * (p.xi() / w_hat).ln() - g,
            FadingModel::KappaMu(p) => mu * (p.rate() / w_hat).ln() - p.kappa() * mu - g,
        }
    }

    fn density_at_zero(&self, w_hat: f64) -> SignedLogValue {
        match self.mu() {
            mu if mu < 1.0 => SignedLogValue::from_ln(f64::INFINITY),
            mu if mu > 1.0 => SignedLogValue::ZERO,
            _ => SignedLogValue::from_ln(self.ln_leading_coefficient(w_hat)),
        }
    }

    /// Density of the branch power at `w`.
    pub fn power_pdf(&self, w_hat: f64, w: f64) -> Result<f64> {
        Ok(self.power_pdf_log(w_hat, w)?.to_f64())
    }

    /// Envelope density `f_R(r) = 2r f_W(r²)`.
    pub fn envelope_pdf(&self, w_hat: f64, r: f64) -> Result<f64> {
        if !(r >= 0.0) {
            return Err(invalid("r", format!("must be non-negative, got {r}")));
        }
        if r == 0.0 {
            check_w_hat(w_hat)?;
            return Ok(match self.mu() {
                mu if mu < 0.5 => f64::INFINITY,
                mu if mu > 0.5 => 0.0,
                _ => 2.0 * self.ln_leading_coefficient(w_hat).exp(),
            });
        }
        let v = self.power_pdf_log(w_hat, r * r)? * SignedLogValue::from_f64(2.0 * r);
        Ok(v.to_f64())
    }

    /// `ln E[e^{-sW}]` for the branch power, `s ≥ 0`.
    pub fn ln_mgf(&self, w_hat: f64, s: f64) -> Result<f64> {
        check_w_hat(w_hat)?;
        if !(s >= 0.0) {
            return Err(invalid("s", format!("must be non-negative, got {s}")));
        }
        Ok(match self {
            FadingModel::EtaMu(p) => p
                .components(w_hat)
                .iter()
                .map(|&(shape, scale)| -shape * (s * scale).ln_1p())
                .sum(),
            FadingModel::KappaMu(p) => {
                let t = s * w_hat / p.rate();
                -p.mu() * t.ln_1p() - p.kappa() * p.mu() * t / (1.0 + t)
            }
        })
    }
}
