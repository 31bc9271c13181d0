//! Exact samplers for both fading models and Monte Carlo estimators used to
//! cross-check the analytical engine.
//!
//! Samples are drawn in fixed-size batches. Batch `k` uses its own ChaCha8
//! stream derived from the seed, and results are assembled in batch order, so
//! output does not depend on the number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Poisson};
use rayon::prelude::*;

use crate::error::{domain, invalid, Error, Result};
use crate::fading::{EtaMuParams, FadingModel, KappaMuParams};
use crate::metrics::BinaryModulation;
use crate::series::SumDistribution;
use crate::specfun::erfc;

pub const DEFAULT_BATCH: usize = 1 << 16;
/// Fewest samples accepted by the KS statistic.
pub const KS_MIN_SAMPLES: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SimConfig {
    pub n_samples: usize,
    pub seed: u64,
    /// Samples per batch; each batch owns one random stream.
    pub batch: usize,
}

impl SimConfig {
    pub fn new(n_samples: usize, seed: u64) -> Result<Self> {
        Self { n_samples, seed, batch: DEFAULT_BATCH }.validated()
    }

    pub fn validated(self) -> Result<Self> {
        if self.n_samples == 0 {
            return Err(invalid("n_samples", "need at least one sample"));
        }
        if self.batch == 0 {
            return Err(invalid("batch", "batch size must be positive"));
        }
        Ok(self)
    }

    fn batches(&self) -> usize {
        self.n_samples.div_ceil(self.batch)
    }

    fn batch_len(&self, k: usize) -> usize {
        self.batch.min(self.n_samples - k * self.batch)
    }

    fn rng(&self, k: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(k as u64);
        rng
    }
}

/// Runs `draw` once per sample, batch by batch, in deterministic order.
fn generate<T, F>(config: &SimConfig, draw: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng) -> T + Sync,
{
    let config = config.validated()?;
    let parts: Vec<Vec<T>> = (0..config.batches())
        .into_par_iter()
        .map(|k| {
            let mut rng = config.rng(k);
            (0..config.batch_len(k)).map(|_| draw(&mut rng)).collect()
        })
        .collect();
    Ok(parts.into_iter().flatten().collect())
}

fn gamma(shape: f64, scale: f64) -> Gamma<f64> {
    Gamma::new(shape, scale).expect("shape and scale validated by the model")
}

/// `Gamma(μp/(1+p), ŵη/(ξp)) + Gamma(μ/(1+p), ŵ/ξ)`: the squared η-μ envelope.
pub fn sample_eta_mu_power(params: &EtaMuParams, w_hat: f64, config: &SimConfig) -> Result<Vec<f64>> {
    check_w_hat(w_hat)?;
    let (g1, g2) = eta_components(params, w_hat, 1.0);
    generate(config, |rng| g1.sample(rng) + g2.sample(rng))
}

/// The two independent gamma components `(G1, G2)` of the η-μ branch power.
pub fn sample_eta_mu_components(params: &EtaMuParams, w_hat: f64, config: &SimConfig) -> Result<Vec<(f64, f64)>> {
    check_w_hat(w_hat)?;
    let (g1, g2) = eta_components(params, w_hat, 1.0);
    generate(config, |rng| (g1.sample(rng), g2.sample(rng)))
}

/// `Gamma(μ + Poisson(κμ), ŵ/((1+κ)μ))`: the squared κ-μ envelope.
pub fn sample_kappa_mu_power(params: &KappaMuParams, w_hat: f64, config: &SimConfig) -> Result<Vec<f64>> {
    check_w_hat(w_hat)?;
    let draw = kappa_draw(params, w_hat, 1.0);
    generate(config, draw)
}

fn check_w_hat(w_hat: f64) -> Result<()> {
    if !(w_hat > 0.0) || !w_hat.is_finite() {
        return Err(invalid("w_hat", format!("must be positive and finite, got {w_hat}")));
    }
    Ok(())
}

fn eta_components(p: &EtaMuParams, w_hat: f64, n: f64) -> (Gamma<f64>, Gamma<f64>) {
    let [(s1, c1), (s2, c2)] = p.components(w_hat);
    (gamma(n * s1, c1), gamma(n * s2, c2))
}

fn kappa_draw(p: &KappaMuParams, w_hat: f64, n: f64) -> impl Fn(&mut ChaCha8Rng) -> f64 + Sync {
    let shape = n * p.mu();
    let scale = w_hat / p.rate();
    let lambda = n * p.kappa() * p.mu();
    let poisson = Poisson::new(lambda).expect("κμ is positive");
    move |rng| gamma(shape + poisson.sample(rng), scale).sample(rng)
}

/// Samples of the sum `W`, drawn in aggregated form: by gamma additivity
/// `Gamma(Na, ·) + Gamma(N(μ−a), ·)` for η-μ and `Gamma(Nμ + Poisson(Nκμ), ·)`
/// for κ-μ, both exact.
pub fn sample_sum(dist: &SumDistribution, config: &SimConfig) -> Result<Vec<f64>> {
    let n = f64::from(dist.branches());
    match dist.model() {
        FadingModel::EtaMu(p) => {
            let (g1, g2) = eta_components(p, dist.w_hat(), n);
            generate(config, |rng| g1.sample(rng) + g2.sample(rng))
        }
        FadingModel::KappaMu(p) => generate(config, kappa_draw(p, dist.w_hat(), n)),
    }
}

/// Samples of `W` as an explicit sum of `N` independent branches.
pub fn sample_sum_branchwise(dist: &SumDistribution, config: &SimConfig) -> Result<Vec<f64>> {
    let n = dist.branches();
    match dist.model() {
        FadingModel::EtaMu(p) => {
            let (g1, g2) = eta_components(p, dist.w_hat(), 1.0);
            generate(config, |rng| (0..n).map(|_| g1.sample(rng) + g2.sample(rng)).sum())
        }
        FadingModel::KappaMu(p) => {
            let one = kappa_draw(p, dist.w_hat(), 1.0);
            generate(config, |rng| (0..n).map(|_| one(rng)).sum())
        }
    }
}

/// Sample mean with its jackknife standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub n_samples: usize,
}

/// Mean of `values` and its delete-one jackknife standard error.
///
/// For the mean the jackknife replicates are `(S − x_i)/(n−1)`, whose spread
/// reduces to `Σ(x_i − x̄)² / (n(n−1))`; the sums are formed in order.
pub fn jackknife_mean(values: &[f64]) -> Result<Estimate> {
    let n = values.len();
    if n < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: n });
    }
    let mean = pairwise_sum(values) / n as f64;
    let squares: Vec<f64> = values.iter().map(|x| (x - mean).powi(2)).collect();
    let var = pairwise_sum(&squares) / (n as f64 * (n as f64 - 1.0));
    Ok(Estimate { value: mean, std_error: var.sqrt(), n_samples: n })
}

fn pairwise_sum(x: &[f64]) -> f64 {
    if x.len() <= 64 {
        return x.iter().sum();
    }
    let (a, b) = x.split_at(x.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// Semi-analytic BEP: average of `½ erfc(√(g_b W))` over sampled `W`.
pub fn empirical_bep(dist: &SumDistribution, modulation: BinaryModulation, config: &SimConfig) -> Result<Estimate> {
    let g = modulation.gain();
    let samples = sample_sum(dist, config)?;
    let conditional: Vec<f64> = samples.par_iter().map(|&w| 0.5 * erfc((g * w).sqrt())).collect();
    jackknife_mean(&conditional)
}

/// Fraction of sampled `W` below `gamma_th`, with its standard error.
pub fn empirical_outage(dist: &SumDistribution, gamma_th: f64, config: &SimConfig) -> Result<Estimate> {
    let samples = sample_sum(dist, config)?;
    let hits: Vec<f64> = samples.iter().map(|&w| f64::from(u8::from(w < gamma_th))).collect();
    jackknife_mean(&hits)
}

/// `sup |F_n − F|` over the sample points, exactly.
///
/// `F` is evaluated on a coarse set of order statistics first. Between two
/// evaluated statistics `x_j < x_k` both `F_n` and `F` are non-decreasing, so
/// no point in between deviates by more than
/// `max(k/n − F(x_j), F(x_k) − (j+1)/n)`. Only gaps whose bound exceeds the
/// largest deviation found so far are bisected, which settles the supremum
/// after a small fraction of the `n` evaluations.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64 + Sync) -> Result<f64> {
    let sorted = sorted_samples(samples)?;
    let len = sorted.len();
    let n = len as f64;
    let deviation = |i: usize, f: f64| ((i + 1) as f64 / n - f).max(f - i as f64 / n);
    let gap_bound = |j: usize, fj: f64, k: usize, fk: f64| (k as f64 / n - fj).max(fk - (j + 1) as f64 / n);

    let coarse = KS_COARSE_POINTS.min(len);
    let mut pending: Vec<usize> = (0..coarse).map(|j| j * (len - 1) / (coarse - 1)).collect();
    pending.dedup();
    let mut known: Vec<(usize, f64)> = vec![];
    let mut best: f64 = 0.0;
    while !pending.is_empty() {
        let values: Vec<f64> = pending.par_iter().map(|&i| cdf(sorted[i])).collect();
        if values.iter().any(|f| f.is_nan()) {
            return Err(domain("ks_distance", "the distribution function returned NaN"));
        }
        for (&i, &f) in pending.iter().zip(&values) {
            best = best.max(deviation(i, f));
        }
        known.extend(pending.iter().copied().zip(values));
        known.sort_by_key(|e| e.0);
        pending = known
            .windows(2)
            .filter(|w| w[1].0 > w[0].0 + 1 && gap_bound(w[0].0, w[0].1, w[1].0, w[1].1) > best)
            .map(|w| (w[0].0 + w[1].0) / 2)
            .collect();
    }
    Ok(best)
}

const KS_COARSE_POINTS: usize = 1025;

fn sorted_samples(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.len() < KS_MIN_SAMPLES {
        return Err(Error::InsufficientSamples { needed: KS_MIN_SAMPLES, got: samples.len() });
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(invalid("samples", "NaN sample"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted)
}

/// Critical KS distance at significance level 1%: `1.63/√n`.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.63 / (n as f64).sqrt()
}
