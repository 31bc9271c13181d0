//! Memoized coefficient sequences for the two series representations.
//!
//! For the η-μ sum the power-series coefficients `h_m` and mixture coefficients
//! `h̃_m` come from power-of-series recursions; for κ-μ `k_m` comes from a
//! recursion and `k̃_m = (Nκμ)^m / m!` is explicit. Each coefficient carries a
//! first-order estimate of its relative rounding error.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, OnceLock, RwLock};

use crate::fading::{EtaMuParams, FadingModel, KappaMuParams};
use crate::specfun::{lgam, LogSum, SignedLogValue};

const EPS: f64 = f64::EPSILON;

/// A coefficient with its estimated relative error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Coefficient {
    pub value: SignedLogValue,
    pub rel_err: f64,
}

#[derive(Default)]
struct Sequence {
    coeffs: Vec<Coefficient>,
    // single-branch series terms g_i for the power recursion, index 0 unused
    branch: Vec<Coefficient>,
    // perturbed twin of `coeffs`, used only for error estimates
    shadow: Vec<SignedLogValue>,
    // running maximum of the normalized shadow divergence
    drift: f64,
}

impl Sequence {
    fn push(&mut self, step: Step) {
        self.coeffs.push(step.coeff);
        self.shadow.push(step.twin);
        self.drift = step.drift;
    }
}

/// Coefficient sequences for one `(model, N)` pair.
pub struct CoefficientCache {
    model: FadingModel,
    n: u32,
    power: RwLock<Sequence>,
    mixture: RwLock<Sequence>,
    steps: AtomicU64,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
struct Key(u8, [u64; 3], u32);

fn key(model: &FadingModel, n: u32) -> Key {
    match model {
        FadingModel::EtaMu(p) => Key(0, [p.eta().to_bits(), p.mu().to_bits(), p.p().to_bits()], n),
        FadingModel::KappaMu(p) => Key(1, [p.kappa().to_bits(), p.mu().to_bits(), 0], n),
    }
}

fn ln_fact(k: usize) -> f64 {
    lgam(k as f64 + 1.0)
}

impl CoefficientCache {
    /// A fresh, unshared cache.
    pub fn new(model: FadingModel, n: u32) -> Self {
        Self {
            model,
            n,
            power: RwLock::new(Sequence::default()),
            mixture: RwLock::new(Sequence::default()),
            steps: AtomicU64::new(0),
        }
    }

    /// The process-wide cache for `(model, N)`; parameters are matched by exact value.
    pub fn shared(model: FadingModel, n: u32) -> Arc<Self> {
        static REGISTRY: OnceLock<Mutex<HashMap<Key, Arc<CoefficientCache>>>> = OnceLock::new();
        let mut map = REGISTRY.get_or_init(Default::default).lock().unwrap();
        map.entry(key(&model, n)).or_insert_with(|| Arc::new(Self::new(model, n))).clone()
    }

    pub fn model(&self) -> &FadingModel {
        &self.model
    }

    pub fn branches(&self) -> u32 {
        self.n
    }

    /// Number of recursion steps (inner-sum terms plus outer-sum terms) performed so far.
    pub fn steps(&self) -> u64 {
        self.steps.load(Ordering::Relaxed)
    }

    /// Number of power-series coefficients computed so far.
    pub fn power_len(&self) -> usize {
        self.power.read().unwrap().coeffs.len()
    }

    /// Number of mixture coefficients computed so far.
    pub fn mixture_len(&self) -> usize {
        self.mixture.read().unwrap().coeffs.len()
    }

    /// Runs `f` on the first `len` power-series coefficients (`h_m` or `k_m`).
    pub fn with_power<R>(&self, len: usize, f: impl FnOnce(&[Coefficient]) -> R) -> R {
        with_sequence(&self.power, len, |seq, upto| self.extend_power(seq, upto), f)
    }

    /// Runs `f` on the first `len` mixture coefficients (`h̃_m` or `k̃_m`).
    pub fn with_mixture<R>(&self, len: usize, f: impl FnOnce(&[Coefficient]) -> R) -> R {
        with_sequence(&self.mixture, len, |seq, upto| self.extend_mixture(seq, upto), f)
    }

    fn count(&self, k: u64) {
        self.steps.fetch_add(k, Ordering::Relaxed);
    }

    fn extend_power(&self, seq: &mut Sequence, upto: usize) {
        let n = f64::from(self.n);
        if seq.coeffs.is_empty() {
            let h0 = match self.model {
                FadingModel::EtaMu(p) => SignedLogValue::from_ln(n * lgam(p.a())),
                FadingModel::KappaMu(_) => SignedLogValue::ONE,
            };
            seq.coeffs.push(Coefficient { value: h0, rel_err: EPS * n });
            seq.shadow.push(h0);
            seq.branch.push(Coefficient { value: SignedLogValue::ZERO, rel_err: 0.0 });
        }
        for m in seq.coeffs.len()..upto {
            let g = match self.model {
                FadingModel::EtaMu(p) => eta_branch_term(&p, m),
                FadingModel::KappaMu(p) => kappa_branch_term(&p, m),
            };
            self.count(m as u64 + 1);
            seq.branch.push(g);
            let ln_lead = match self.model {
                FadingModel::EtaMu(p) => -lgam(p.a()),
                FadingModel::KappaMu(_) => 0.0,
            };
            let step = miller_step(&seq.coeffs, &seq.shadow, seq.drift, &seq.branch, n, m, ln_lead);
            self.count(m as u64);
            seq.push(step);
        }
    }

    fn extend_mixture(&self, seq: &mut Sequence, upto: usize) {
        let n = f64::from(self.n);
        match self.model {
            FadingModel::EtaMu(p) => {
                let a = p.a();
                let q = 1.0 - p.ratio();
                if seq.coeffs.is_empty() {
                    let h0 = SignedLogValue::from_ln(n * lgam(a));
                    seq.coeffs.push(Coefficient { value: h0, rel_err: EPS * n });
                    seq.shadow.push(h0);
                    seq.branch.push(Coefficient { value: SignedLogValue::ZERO, rel_err: 0.0 });
                }
                for m in seq.coeffs.len()..upto {
                    // (1 − p/η)^m Γ(m+a) / m!
                    let value = if q == 0.0 {
                        SignedLogValue::ZERO
                    } else {
                        let sign = if q < 0.0 && m % 2 == 1 { -1 } else { 1 };
                        let ln = m as f64 * q.abs().ln() + lgam(m as f64 + a) - ln_fact(m);
                        SignedLogValue::new(ln, sign)
                    };
                    seq.branch.push(Coefficient { value, rel_err: 4.0 * EPS });
                    let step = miller_step(&seq.coeffs, &seq.shadow, seq.drift, &seq.branch, n, m, -lgam(a));
                    self.count(m as u64);
                    seq.push(step);
                }
            }
            FadingModel::KappaMu(p) => {
                let lambda = n * p.kappa() * p.mu();
                for m in seq.coeffs.len()..upto {
                    let value = if lambda == 0.0 {
                        if m == 0 { SignedLogValue::ONE } else { SignedLogValue::ZERO }
                    } else {
                        SignedLogValue::from_ln(m as f64 * lambda.ln() - ln_fact(m))
                    };
                    self.count(1);
                    seq.coeffs.push(Coefficient { value, rel_err: 2.0 * EPS });
                }
            }
        }
    }
}

fn with_sequence<R>(
    lock: &RwLock<Sequence>,
    len: usize,
    extend: impl FnOnce(&mut Sequence, usize),
    f: impl FnOnce(&[Coefficient]) -> R,
) -> R {
    {
        let seq = lock.read().unwrap();
        if seq.coeffs.len() >= len {
            return f(&seq.coeffs[..len]);
        }
    }
    let mut seq = lock.write().unwrap();
    if seq.coeffs.len() < len {
        extend(&mut seq, len);
    }
    f(&seq.coeffs[..len])
}

/// One step of the power-of-series recursion
/// `c_m = e^{ln_lead}/m · Σ_{i=1}^m ((N+1)i − m) g_i c_{m−i}`.
///
/// The recursion weights change sign, so a first-order bound that adds
/// absolute errors compounds the internal cancellation of every step and grows
/// geometrically even when the values stay accurate. The error estimate
/// instead follows a shadow run that repeats the recursion with every input
/// and product perturbed at rounding level. Its divergence, measured against
/// `Σ|terms|` and kept as a running maximum in `drift`, gives the propagated
/// error; the rounding of this step is added on top.
fn miller_step(
    c: &[Coefficient],
    shadow: &[SignedLogValue],
    drift: f64,
    g: &[Coefficient],
    n: f64,
    m: usize,
    ln_lead: f64,
) -> Step {
    let mut acc = LogSum::new();
    let mut alt = LogSum::new();
    let mut widest: f64 = 1.0;
    for i in 1..=m {
        let w = SignedLogValue::from_f64((n + 1.0) * i as f64 - m as f64);
        let t = w * g[i].value * c[m - i].value;
        if t.is_zero() {
            continue;
        }
        acc.add(t);
        widest = widest.max(t.ln_abs().abs());
        // values are stored as logarithms, so each carries an error of order ε·|ln|
        let jitter = EPS * (2.0 + t.ln_abs().abs()) + g[i].rel_err;
        let gi = g[i].value * SignedLogValue::from_f64(1.0 + jitter * unit_noise(m, i));
        alt.add(w * gi * shadow[m - i]);
    }
    let scale = SignedLogValue::from_ln(ln_lead - (m as f64).ln());
    let value = acc.value() * scale;
    let twin = alt.value() * scale;
    let sum = acc.value();
    let total = acc.abs_total();
    let drift = if total.is_zero() { drift } else { drift.max(((sum - alt.value()).abs() / total).to_f64()) };
    let rel_err = if sum.is_zero() {
        if total.is_zero() { 0.0 } else { f64::INFINITY }
    } else {
        let cancel = acc.cancellation();
        EPS * cancel * (2.0 + widest) + SHADOW_SAFETY * drift * cancel + 2.0 * EPS
    };
    Step { coeff: Coefficient { value, rel_err }, twin, drift }
}

struct Step {
    coeff: Coefficient,
    twin: SignedLogValue,
    drift: f64,
}

/// Safety factor on the observed shadow divergence.
const SHADOW_SAFETY: f64 = 8.0;

/// Deterministic value in `[-1, 1]` for the pair `(m, i)` (SplitMix64).
fn unit_noise(m: usize, i: usize) -> f64 {
    let mut z = (m as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (i as u64).wrapping_add(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    (z >> 11) as f64 / (1u64 << 52) as f64 - 1.0
}

/// `g_i = (−ξ)^i Σ_{l=0}^{i} Γ(i+μ) Γ(i−l+a) (p/η − 1)^{i−l} / (l! (i−l)! Γ(i−l+μ))`.
fn eta_branch_term(p: &EtaMuParams, i: usize) -> Coefficient {
    let (mu, a, xi) = (p.mu(), p.a(), p.xi());
    let r = p.ratio() - 1.0;
    let mut acc = LogSum::new();
    let mut widest: f64 = 1.0;
    for j in 0..=i {
        // j = i − l
        if r == 0.0 && j > 0 {
            break;
        }
        let ln = lgam(j as f64 + a) + if j > 0 { j as f64 * r.abs().ln() } else { 0.0 }
            - ln_fact(i - j)
            - ln_fact(j)
            - lgam(j as f64 + mu);
        let sign = if r < 0.0 && j % 2 == 1 { -1 } else { 1 };
        widest = widest.max(ln.abs());
        acc.add(SignedLogValue::new(ln, sign));
    }
    let sign = if i % 2 == 1 { -1 } else { 1 };
    let lead = i as f64 * xi.ln() + lgam(i as f64 + mu);
    let value = acc.value() * SignedLogValue::new(lead, sign);
    Coefficient { value, rel_err: EPS * (acc.cancellation() * (4.0 + widest) + lead.abs()) }
}

/// `G_i = Γ(i+μ) Σ_{l=0}^{i} (−κμ)^{−l} (κ(κ+1)μ²)^i / (l! (i−l)! Γ(i−l+μ))`.
fn kappa_branch_term(p: &KappaMuParams, i: usize) -> Coefficient {
    let (k, mu, a) = (p.kappa(), p.mu(), p.rate());
    let mut acc = LogSum::new();
    let mut widest: f64 = 1.0;
    // (κ(κ+1)μ²)^i (κμ)^{−l} = A^i (κμ)^{i−l}
    for l in 0..=i {
        let j = i - l;
        if k == 0.0 && j > 0 {
            continue;
        }
        let ln = if j > 0 { j as f64 * (k * mu).ln() } else { 0.0 } - ln_fact(l) - ln_fact(j)
            - lgam(j as f64 + mu);
        widest = widest.max(ln.abs());
        acc.add(SignedLogValue::new(ln, if l % 2 == 1 { -1 } else { 1 }));
    }
    let lead = i as f64 * a.ln() + lgam(i as f64 + mu);
    let value = acc.value() * SignedLogValue::from_ln(lead);
    Coefficient { value, rel_err: EPS * (acc.cancellation() * (4.0 + widest) + lead.abs()) }
}

/// Power-series coefficient `m` by the recursion without memoization.
///
/// Exponential cost; exists to check the cache against.
pub fn power_coefficient_uncached(model: FadingModel, n: u32, m: usize) -> Coefficient {
    fn rec(model: &FadingModel, n: u32, m: usize, g: &[Coefficient]) -> Step {
        let nf = f64::from(n);
        if m == 0 {
            let h0 = match model {
                FadingModel::EtaMu(p) => SignedLogValue::from_ln(nf * lgam(p.a())),
                FadingModel::KappaMu(_) => SignedLogValue::ONE,
            };
            return Step { coeff: Coefficient { value: h0, rel_err: EPS * nf }, twin: h0, drift: 0.0 };
        }
        let prev: Vec<Step> = (0..m).map(|j| rec(model, n, j, g)).collect();
        let coeffs: Vec<Coefficient> = prev.iter().map(|s| s.coeff).collect();
        let shadow: Vec<SignedLogValue> = prev.iter().map(|s| s.twin).collect();
        let ln_lead = match model {
            FadingModel::EtaMu(p) => -lgam(p.a()),
            FadingModel::KappaMu(_) => 0.0,
        };
        miller_step(&coeffs, &shadow, prev[m - 1].drift, g, nf, m, ln_lead)
    }
    let mut g = vec![Coefficient { value: SignedLogValue::ZERO, rel_err: 0.0 }];
    for i in 1..=m {
        g.push(match model {
            FadingModel::EtaMu(p) => eta_branch_term(&p, i),
            FadingModel::KappaMu(p) => kappa_branch_term(&p, i),
        });
    }
    rec(&model, n, m, &g).coeff
}
