"""Reference values for the sum distribution, computed with mpmath.

The η-μ sum is Gamma(aN, ŵη/(ξp)) + Gamma((μ−a)N, ŵ/ξ); its density is a
single 1F1 and the distribution function is obtained by quadrature. The
κ-μ sum is κ-μ with shape Nμ and mean Nŵ. Series coefficients come from the
generating functions (binomial products and Laguerre polynomials), not from
the recursions used by the library.

Writes tests/data/series_oracle.json. Run from the crate directory:
python3 tests/oracles/gen_series.py
"""
import json
import random
from pathlib import Path

import mpmath as mp

mp.mp.dps = 40
rng = random.Random(20240612)


def lv(v):
    v = mp.mpf(v)
    if v == 0:
        return [None, 0]
    return [float(mp.log(abs(v))), 1 if v > 0 else -1]


def logu(lo, hi):
    return float(mp.e ** rng.uniform(float(mp.log(lo)), float(mp.log(hi))))


def eta_parts(eta, mu, p):
    eta, mu, p = map(mp.mpf, (eta, mu, p))
    a = mu * p / (1 + p)
    xi = mu * (1 + eta) / (1 + p)
    return eta, mu, p, a, xi


def eta_pdf(eta, mu, p, n, wh, w):
    eta, mu, p, a, xi = eta_parts(eta, mu, p)
    wh, w = mp.mpf(wh), mp.mpf(w)
    k1, s1 = a * n, wh * eta / (xi * p)
    k2, s2 = (mu - a) * n, wh / xi
    k = k1 + k2
    ln = (k - 1) * mp.log(w) - w / s2 - k1 * mp.log(s1) - k2 * mp.log(s2) - mp.loggamma(k)
    return mp.exp(ln) * mp.hyp1f1(k1, k, w * (1 / s2 - 1 / s1))


def kappa_pdf(kappa, mu, n, wh, w):
    kappa, mu, wh, w = map(mp.mpf, (kappa, mu, wh, w))
    m = n * mu
    mean = n * wh
    a = (1 + kappa) * mu
    lam = n * kappa * mu
    # κ-μ density with shape m, mean `mean`, written in its Poisson-gamma form
    x = a * w / wh
    return a / wh * mp.exp(-lam - x) * (x / lam) ** ((m - 1) / 2) * mp.besseli(m - 1, 2 * mp.sqrt(lam * x))


def pdf(model, n, wh, w):
    if model[0] == "eta-mu":
        return eta_pdf(*model[1:], n, wh, w)
    return kappa_pdf(*model[1:], n, wh, w)


def cdf(model, n, wh, w):
    f = lambda x: pdf(model, n, wh, x)
    w = mp.mpf(w)
    pts = [0, w / 64, w / 8, w / 2, w]
    return mp.quad(f, pts)


def mgf(model, n, wh, s):
    s, wh = mp.mpf(s), mp.mpf(wh)
    if model[0] == "eta-mu":
        eta, mu, p, a, xi = eta_parts(*model[1:])
        return (1 + s * wh * eta / (xi * p)) ** (-a * n) * (1 + s * wh / xi) ** (-(mu - a) * n)
    kappa, mu = map(mp.mpf, model[1:])
    a = (1 + kappa) * mu
    lam = n * kappa * mu
    return (a / (a + s * wh)) ** (n * mu) * mp.exp(-lam * s * wh / (a + s * wh))


def binomial_series(c, r, m_max):
    # coefficients of (1 + c x)^(−r)
    return [mp.rf(r, m) / mp.factorial(m) * (-c) ** m for m in range(m_max + 1)]


def convolve(x, y):
    return [mp.fsum(x[i] * y[m - i] for i in range(m + 1)) for m in range(len(x))]


def eta_h(eta, mu, p, n, m_max):
    eta, mu, p, a, xi = eta_parts(eta, mu, p)
    u = binomial_series(xi * p / eta, a * n, m_max)
    v = binomial_series(xi, (mu - a) * n, m_max)
    g = mp.gamma(a) ** n
    return [g * c for c in convolve(u, v)]


def eta_h_tilde(eta, mu, p, n, m_max):
    eta, mu, p, a, xi = eta_parts(eta, mu, p)
    q = 1 - p / eta
    g = mp.gamma(a) ** n
    return [g * mp.rf(a * n, m) * q ** m / mp.factorial(m) for m in range(m_max + 1)]


def kappa_k(kappa, mu, n, m_max):
    kappa, mu = map(mp.mpf, (kappa, mu))
    a = (1 + kappa) * mu
    lam = n * kappa * mu
    return [(-a) ** m * mp.laguerre(m, n * mu - 1, lam) for m in range(m_max + 1)]


def kappa_k_tilde(kappa, mu, n, m_max):
    lam = n * mp.mpf(kappa) * mp.mpf(mu)
    return [lam ** m / mp.factorial(m) for m in range(m_max + 1)]


def random_model():
    if rng.random() < 0.5:
        return ["eta-mu", round(logu(0.2, 5.0), 6), round(logu(0.3, 3.0), 6), round(logu(0.2, 5.0), 6)]
    return ["kappa-mu", round(logu(0.1, 5.0), 6), round(logu(0.3, 3.0), 6)]


def mean_of(n, wh):
    return n * wh


out = {}

# coefficient sequences
coeff_cases = [
    (["eta-mu", 1.5, 0.5, 0.75], 2),
    (["eta-mu", 0.25, 1.25, 1.1], 1),
    (["eta-mu", 1.5, 2.0, 0.5], 16),
    (["eta-mu", 0.6, 0.8, 2.5], 4),
    (["eta-mu", 2.0, 1.0, 2.0], 3),
    (["kappa-mu", 0.5, 0.5, ], 1),
    (["kappa-mu", 1.5, 1.5], 64),
    (["kappa-mu", 3.0, 0.7], 8),
]
rows = []
for model, n in coeff_cases:
    m_max = 60
    if model[0] == "eta-mu":
        power = eta_h(*model[1:], n, m_max)
        mixture = eta_h_tilde(*model[1:], n, m_max)
    else:
        power = kappa_k(*model[1:], n, m_max)
        mixture = kappa_k_tilde(*model[1:], n, m_max)
    rows.append({"model": model, "n": n, "power": [lv(v) for v in power], "mixture": [lv(v) for v in mixture]})
out["coefficients"] = rows

# h_5 for (1.5, 0.5, 0.75, N=2) from a Taylor expansion of the product MGF
eta, mu, p, a, xi = eta_parts(1.5, 0.5, 0.75)
gen = lambda x: ((1 + xi * p * x / eta) ** (-a) * (1 + xi * x) ** (-(mu - a))) ** 2
out["h5_taylor"] = lv(mp.taylor(gen, 0, 5)[5] * mp.gamma(a) ** 2)

# k_1 for a single branch from the large-s expansion of the MGF
kappa, mu = mp.mpf("0.5"), mp.mpf("0.5")
A = (1 + kappa) * mu
gen = lambda x: (1 + A * x) ** (-mu) * mp.exp(kappa * mu * A * x / (1 + A * x))
out["k1_taylor"] = {"model": ["kappa-mu", 0.5, 0.5], "value": lv(mp.taylor(gen, 0, 1)[1])}

# densities, distribution functions and MGFs at random points
rows = []
for i in range(200):
    model = random_model()
    n = [1, 2, 8, 64][i % 4]
    wh = round(logu(0.1, 10.0), 6)
    w = round(mean_of(n, wh) * logu(0.05, 3.0), 6)
    rows.append({
        "model": model, "n": n, "w_hat": wh, "w": w,
        "pdf": lv(pdf(model, n, wh, w)),
        "cdf": lv(cdf(model, n, wh, w)),
    })
out["points"] = rows

rows = []
for i in range(40):
    model = random_model()
    n = [1, 2, 8, 64][i % 4]
    wh = round(logu(0.1, 10.0), 6)
    s = round(logu(0.05, 20.0) / wh, 8)
    rows.append({"model": model, "n": n, "w_hat": wh, "s": s, "mgf": lv(mgf(model, n, wh, s))})
out["mgf"] = rows

# the η-μ MGF at s ∈ {0.5, 1, 5}/ŵ as a numerical Laplace transform of the density
rows = []
for model, n, wh in [(["eta-mu", 1.5, 0.5, 0.75], 4, 1.0), (["eta-mu", 0.4, 1.3, 2.5], 2, 0.7)]:
    for c in (0.5, 1.0, 5.0):
        s = c / wh
        v = mp.quad(lambda x: mp.exp(-s * x) * pdf(model, n, wh, x), [0, 1, 10, mp.inf])
        rows.append({"model": model, "n": n, "w_hat": wh, "s": s, "mgf": lv(v)})
out["mgf_laplace"] = rows

# single-branch κ-μ density at 100 random points
rows = []
for _ in range(100):
    model = ["kappa-mu", round(logu(0.1, 5.0), 6), round(logu(0.3, 3.0), 6)]
    wh = round(logu(0.1, 10.0), 6)
    w = round(wh * logu(0.01, 5.0), 6)
    rows.append({"model": model, "n": 1, "w_hat": wh, "w": w, "pdf": lv(pdf(model, 1, wh, w))})
out["kappa_single"] = rows

path = Path(__file__).resolve().parent.parent / "data" / "series_oracle.json"
path.write_text(json.dumps(out, indent=0))
print("wrote", path)
