//! Per-term kernels of the two series representations.
//!
//! A power-series term is `C c_m K(ν)` with `ν = Nμ + m`; a mixture term is
//! `w_m T(ν)` where `T` is the quantity for a single `Gamma(ν, ŵ/θ)` variable.

use crate::error::Result;
use crate::specfun::{inc_gamma_pq, lgam, ln_poisson_kernel, SignedLogValue};

/// Shape of a power-series kernel, which determines how its tail is bounded.
#[derive(Clone, Copy, Debug)]
pub(crate) enum Family {
    /// `K(ν) = w^{ν−1} / (ŵ^ν Γ(ν))`
    Density { w: f64 },
    /// `K(ν) = (w/ŵ)^ν / Γ(ν+1)`
    Distribution { w: f64 },
    /// `K(ν) = σ^{−ν} D(ν)` with `D` positive and non-increasing
    Geometric { sigma: f64 },
}

pub(crate) trait PowerKernel {
    fn family(&self) -> Family;
    fn kernel(&self, nu: f64) -> Result<SignedLogValue>;
    /// `ln D(ν)` for the geometric family.
    fn ln_envelope(&self, _nu: f64) -> f64 {
        0.0
    }
}

pub(crate) trait MixtureKernel {
    fn kernel(&mut self, m: usize, nu: f64) -> Result<SignedLogValue>;
    /// Whether `T(ν)` is non-increasing in `ν`.
    fn decreasing(&self) -> bool {
        true
    }
}

pub(crate) struct PowerMgf {
    pub s_w_hat: f64,
}

impl PowerKernel for PowerMgf {
    fn family(&self) -> Family {
        Family::Geometric { sigma: self.s_w_hat }
    }
    fn kernel(&self, nu: f64) -> Result<SignedLogValue> {
        Ok(SignedLogValue::from_ln(-nu * self.s_w_hat.ln()))
    }
}

pub(crate) struct PowerPdf {
    pub w: f64,
    pub w_hat: f64,
}

impl PowerKernel for PowerPdf {
    fn family(&self) -> Family {
        Family::Density { w: self.w }
    }
    fn kernel(&self, nu: f64) -> Result<SignedLogValue> {
        Ok(SignedLogValue::from_ln((nu - 1.0) * self.w.ln() - nu * self.w_hat.ln() - lgam(nu)))
    }
}

pub(crate) struct PowerCdf {
    pub w: f64,
    pub w_hat: f64,
}

impl PowerKernel for PowerCdf {
    fn family(&self) -> Family {
        Family::Distribution { w: self.w }
    }
    fn kernel(&self, nu: f64) -> Result<SignedLogValue> {
        Ok(SignedLogValue::from_ln(nu * (self.w / self.w_hat).ln() - lgam(nu + 1.0)))
    }
}

pub(crate) struct MixtureMgf {
    pub s_w_hat_over_theta: f64,
}

impl MixtureKernel for MixtureMgf {
    fn kernel(&mut self, _m: usize, nu: f64) -> Result<SignedLogValue> {
        Ok(SignedLogValue::from_ln(-nu * self.s_w_hat_over_theta.ln_1p()))
    }
}

/// Gamma density with shape `ν` and rate `θ/ŵ` at `w`.
pub(crate) struct MixturePdf {
    pub w: f64,
    pub rate: f64,
}

impl MixtureKernel for MixturePdf {
    fn kernel(&mut self, _m: usize, nu: f64) -> Result<SignedLogValue> {
        let x = self.rate * self.w;
        let ln = if nu >= 11.0 {
            ln_poisson_kernel(nu - 1.0, x)
        } else {
            (nu - 1.0) * x.ln() - x - lgam(nu)
        };
        Ok(SignedLogValue::from_ln(ln + self.rate.ln()))
    }
    fn decreasing(&self) -> bool {
        false
    }
}

/// Lazily filled table of a kernel that satisfies `T(ν) = T(ν+1) + δ(ν)` with `δ ≥ 0`.
///
/// Each block of 50 indices is anchored by a direct evaluation at its top
/// index and filled by the recurrence run downward, which only adds
/// positive quantities.
pub(crate) struct DownwardBlocks<A, D> {
    n0: f64,
    anchor: A,
    delta: D,
    values: Vec<Option<SignedLogValue>>,
}

pub(crate) const BLOCK: usize = 50;

impl<A, D> DownwardBlocks<A, D>
where
    A: FnMut(f64) -> Result<SignedLogValue>,
    D: FnMut(f64) -> SignedLogValue,
{
    pub fn new(n0: f64, anchor: A, delta: D) -> Self {
        Self { n0, anchor, delta, values: Vec::new() }
    }

    pub fn get(&mut self, m: usize) -> Result<SignedLogValue> {
        if let Some(Some(v)) = self.values.get(m) {
            return Ok(*v);
        }
        let start = m / BLOCK * BLOCK;
        let top = start + BLOCK - 1;
        if self.values.len() <= top {
            self.values.resize(top + 1, None);
        }
        let mut v = (self.anchor)(self.n0 + top as f64)?;
        self.values[top] = Some(v);
        for k in (start..top).rev() {
            v = v + (self.delta)(self.n0 + k as f64);
            self.values[k] = Some(v);
        }
        Ok(self.values[m].unwrap())
    }
}

/// Regularized lower incomplete gamma `P(ν, x)` for `ν = n0 + m`.
pub(crate) fn gamma_cdf_table(
    n0: f64,
    x: f64,
) -> DownwardBlocks<impl FnMut(f64) -> Result<SignedLogValue>, impl FnMut(f64) -> SignedLogValue> {
    DownwardBlocks::new(
        n0,
        move |nu| Ok(inc_gamma_pq(nu, x)?.0),
        // P(ν,x) − P(ν+1,x) = x^ν e^{−x} / Γ(ν+1)
        move |nu| SignedLogValue::from_ln(ln_poisson_kernel(nu, x)),
    )
}

pub(crate) struct MixtureCdf<T> {
    pub table: T,
}

impl<A, D> MixtureKernel for MixtureCdf<DownwardBlocks<A, D>>
where
    A: FnMut(f64) -> Result<SignedLogValue>,
    D: FnMut(f64) -> SignedLogValue,
{
    fn kernel(&mut self, m: usize, _nu: f64) -> Result<SignedLogValue> {
        self.table.get(m)
    }
}
