//! Helpers shared by the integration tests.
#![allow(dead_code)]

use fadesum::{EtaMuParams, FadingModel, KappaMuParams, SignedLogValue, SumDistribution};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

/// `["eta-mu", η, μ, p]` or `["kappa-mu", κ, μ]`.
pub fn model(v: &Value) -> FadingModel {
    let a = v.as_array().unwrap();
    let x = |i: usize| a[i].as_f64().unwrap();
    match a[0].as_str().unwrap() {
        "eta-mu" => EtaMuParams::new(x(1), x(2), x(3)).unwrap().into(),
        "kappa-mu" => KappaMuParams::new(x(1), x(2)).unwrap().into(),
        other => panic!("unknown model {other}"),
    }
}

/// `[ln|v|, sign]` with `null` for zero.
pub fn lv(v: &Value) -> SignedLogValue {
    let a = v.as_array().unwrap();
    let sign = a[1].as_i64().unwrap() as i8;
    if sign == 0 {
        return SignedLogValue::ZERO;
    }
    SignedLogValue::new(a[0].as_f64().unwrap(), sign)
}

pub fn load(text: &str) -> Value {
    serde_json::from_str(text).unwrap()
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// `∫_a^b f` with an `n`-point Gauss–Legendre rule.
pub fn gl_integrate(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64, rule: &[(f64, f64)]) -> f64 {
    let (c, h) = ((a + b) / 2.0, (b - a) / 2.0);
    rule.iter().map(|&(x, w)| w * f(c + h * x)).sum::<f64>() * h
}

/// Adaptive bisection with a 20-point Gauss–Legendre panel.
pub fn integrate(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let rule = gauss_legendre(20);
    fn step(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, depth: u32, rule: &[(f64, f64)]) -> f64 {
        let m = (a + b) / 2.0;
        let l = gl_integrate(f, a, m, rule);
        let r = gl_integrate(f, m, b, rule);
        if depth == 0 || (l + r - whole).abs() <= tol {
            return l + r;
        }
        step(f, a, m, l, tol / 2.0, depth - 1, rule) + step(f, m, b, r, tol / 2.0, depth - 1, rule)
    }
    let whole = gl_integrate(f, a, b, &rule);
    step(f, a, b, whole, tol, 30, &rule)
}

/// `∫_0^∞ f` for a density-like `f` with scale `scale` and behaviour `w^{k−1}`
/// near zero. Substituting `w = scale·t^r` smooths the origin.
pub fn integrate_half_line(f: &mut dyn FnMut(f64) -> f64, k: f64, scale: f64, upper: f64, tol: f64) -> f64 {
    let r = (4.0 / k).ceil().max(1.0);
    let t_max = (upper / scale).powf(1.0 / r);
    let mut g = |t: f64| {
        if t == 0.0 {
            return 0.0;
        }
        let w = scale * t.powf(r);
        f(w) * scale * r * t.powf(r - 1.0)
    };
    integrate(&mut g, 0.0, t_max, tol)
}

/// Relative difference with an absolute floor.
pub fn close(got: f64, want: f64, abs: f64, rel: f64) -> bool {
    (got - want).abs() <= abs.max(rel * want.abs())
}

/// A random distribution with log-uniform parameters and ŵ in [0.3, 30].
pub fn random_dist(rng: &mut ChaCha8Rng, n: u32) -> SumDistribution {
    let mut logu = |lo: f64, hi: f64| rng.random_range(f64::ln(lo)..f64::ln(hi)).exp();
    let w_hat = logu(0.3, 30.0);
    let model: FadingModel = if logu(1.0, 2.0) < 1.5f64.sqrt() {
        EtaMuParams::new(logu(0.2, 5.0), logu(0.3, 3.0), logu(0.2, 5.0)).unwrap().into()
    } else {
        KappaMuParams::new(logu(0.05, 5.0), logu(0.3, 3.0)).unwrap().into()
    };
    SumDistribution::new(model, n, w_hat).unwrap()
}
