//! Acceptance run: one line per criterion, non-zero exit if any fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::f64::consts::PI;
use std::process::Command;
use std::time::{Duration, Instant};

use fadesum::linkbudget::{mean_branch_snr, path_loss_factor, sweep, SweepSpec};
use fadesum::metrics::{bep, bep_truncation_bound, coverage, outage, sep_psk, sep_qam};
use fadesum::montecarlo::{ks_critical_1pct, ks_distance, sample_sum, SimConfig};
use fadesum::series::{power_coefficient_uncached, CoefficientCache};
use fadesum::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Outcome = std::result::Result<String, String>;

fn auto() -> TruncationControl {
    TruncationControl::default()
}

fn eta_mu() -> FadingModel {
    EtaMuParams::new(1.5, 0.5, 0.75).unwrap().into()
}

fn kappa_mu() -> FadingModel {
    KappaMuParams::new(0.5, 0.5).unwrap().into()
}

fn fr3(fc: f64, d: f64, n: u32) -> SumDistribution {
    let s = LinkScenario::fr3(fc, d, 30.0, n).unwrap();
    SumDistribution::new(eta_mu(), n, mean_branch_snr(&s).unwrap()).unwrap()
}

fn sub_thz(fc: f64, d: f64, n: u32) -> SumDistribution {
    let s = LinkScenario::sub_thz(fc, d, 30.0, n).unwrap();
    SumDistribution::new(kappa_mu(), n, mean_branch_snr(&s).unwrap()).unwrap()
}

fn within(got: f64, want: f64, rel: f64) -> bool {
    (got / want - 1.0).abs() <= rel
}

/// Collects sub-check results into one outcome.
#[derive(Default)]
struct Report {
    lines: Vec<String>,
    failed: bool,
}

impl Report {
    fn check(&mut self, ok: bool, line: String) {
        self.failed |= !ok;
        self.lines.push(if ok { line } else { format!("FAILED {line}") });
    }

    fn finish(self) -> Outcome {
        let text = self.lines.join("; ");
        if self.failed {
            Err(text)
        } else {
            Ok(text)
        }
    }
}

fn bpsk_anchor(dist: &SumDistribution, want: f64, r: &mut Report, limit: Duration) -> Evaluation {
    let start = Instant::now();
    let e = bep(dist, BinaryModulation::Bpsk, Approach::Auto, &auto()).unwrap();
    let took = start.elapsed();
    let v = e.to_f64();
    r.check(
        within(v, want, 0.15) && took < limit,
        format!("N={} BEP {v:.4e} (target {want:.1e}, {:+.1}%) in {:.0?}", dist.branches(), (v / want - 1.0) * 100.0, took),
    );
    e
}

fn criterion_1() -> Outcome {
    let mut r = Report::default();
    for (n, want) in [(128, 4e-3), (256, 8e-5)] {
        bpsk_anchor(&fr3(15e9, 250.0, n), want, &mut r, Duration::from_secs(5));
    }
    r.finish()
}

fn criterion_2() -> Outcome {
    let mut r = Report::default();
    for (n, want) in [(256, 1.2e-3), (512, 8.8e-6)] {
        let d = sub_thz(140e9, 300.0, n);
        let e = bpsk_anchor(&d, want, &mut r, Duration::from_secs(5));
        let capped = bep(&d, BinaryModulation::Bpsk, Approach::Mixture, &TruncationControl::fixed(400)).unwrap();
        let rel = capped.value.rel_diff(e.value);
        r.check(
            e.terms_used <= 400 && rel <= 1e-9,
            format!("N={n} uses {} terms, 400 terms agree to {rel:.1e}", e.terms_used),
        );
    }
    r.finish()
}

fn criterion_3() -> Outcome {
    let mut r = Report::default();
    let qpsk = MaryModulation::psk(4).unwrap();
    for (d, want) in [(fr3(15e9, 250.0, 256), 7.5e-3), (sub_thz(140e9, 300.0, 512), 1.4e-3)] {
        let v = sep_psk(&d, &qpsk, Approach::Auto, &auto()).unwrap().to_f64();
        r.check(
            within(v, want, 0.15),
            format!("{} N={} 4-PSK SEP {v:.4e} (target {want:.1e}, {:+.1}%)", d.model().name(), d.branches(), (v / want - 1.0) * 100.0),
        );
    }
    r.finish()
}

fn criterion_4() -> Outcome {
    let mut r = Report::default();
    let anchors = [
        (eta_mu(), LinkScenario::fr3(15e9, 450.0, 30.0, 256).unwrap(), 0.0),
        (eta_mu(), LinkScenario::fr3(15e9, 300.0, 30.0, 256).unwrap(), 5.0),
        (kappa_mu(), LinkScenario::sub_thz(140e9, 1200.0, 30.0, 1024).unwrap(), 0.0),
        (kappa_mu(), LinkScenario::sub_thz(140e9, 700.0, 30.0, 1024).unwrap(), 5.0),
    ];
    for (model, s, th_db) in anchors {
        let d = SumDistribution::new(model, s.n_antennas, mean_branch_snr(&s).unwrap()).unwrap();
        let g = 10f64.powf(th_db / 10.0);
        let v = coverage(&d, g, Approach::Auto, &auto()).unwrap().to_f64();
        let v100 = coverage(&d, g, Approach::Auto, &TruncationControl::fixed(100)).unwrap().to_f64();
        r.check(
            v >= 0.99,
            format!(
                "{} N={} d={} m {th_db} dB coverage {v:.5} (100 terms: {v100:.5})",
                model.name(),
                s.n_antennas,
                s.distance
            ),
        );
    }
    // full distance sweeps: 100 points, every antenna count and threshold of the study
    for (model, ns, scenario, far) in [
        (eta_mu(), vec![16, 32, 64, 128, 256], LinkScenario::fr3(15e9, 100.0, 30.0, 1).unwrap(), 1000.0),
        (kappa_mu(), vec![64, 128, 256, 512, 1024], LinkScenario::sub_thz(140e9, 100.0, 30.0, 1).unwrap(), 2000.0),
    ] {
        let grid: Vec<f64> = (1..=100).map(|i| far * f64::from(i) / 100.0).collect();
        let mut slowest = Duration::ZERO;
        for n in ns {
            for th_db in [0.0, 5.0] {
                let spec = SweepSpec {
                    model,
                    scenario: LinkScenario { n_antennas: n, ..scenario },
                    metric: Metric::Coverage { gamma_th: 10f64.powf(th_db / 10.0) },
                    approach: Approach::Auto,
                    control: TruncationControl::fixed(100),
                };
                let start = Instant::now();
                let t = sweep(&spec, SweepVariable::Distance, &grid).unwrap();
                slowest = slowest.max(start.elapsed());
                assert_eq!(t.rows.len(), 100);
            }
        }
        r.check(slowest < Duration::from_secs(10), format!("slowest {} sweep {:.0?}", model.name(), slowest));
    }
    r.finish()
}

fn criterion_5() -> Outcome {
    let ratio = (path_loss_factor(140e9) * 500f64.powi(-2)) / (path_loss_factor(15e9) * 500f64.powi(-3));
    let mut r = Report::default();
    r.check(within(ratio, 5.74, 0.01), format!("ratio 1/{ratio:.4}"));
    r.finish()
}

/// Carrier frequency where the BEP reaches `target`, by bisection in log f.
fn crossing(dist_at: impl Fn(f64) -> SumDistribution, lo: f64, hi: f64, target: f64) -> f64 {
    let f = |fc: f64| bep(&dist_at(fc), BinaryModulation::Bpsk, Approach::Auto, &auto()).unwrap().to_f64() - target;
    let (mut a, mut b) = (lo.ln(), hi.ln());
    assert!(f(lo) < 0.0 && f(hi) > 0.0);
    for _ in 0..60 {
        let m = 0.5 * (a + b);
        if f(m.exp()) < 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    (0.5 * (a + b)).exp()
}

fn criterion_6() -> Outcome {
    let mut r = Report::default();
    for (n, want) in [(32, 8e9), (256, 17e9)] {
        let fc = crossing(|fc| fr3(fc, 250.0, n), 1e9, 100e9, 1e-3);
        r.check(within(fc, want, 0.10), format!("eta-mu N={n} {:.2} GHz (target {:.0})", fc / 1e9, want / 1e9));
    }
    for (n, want) in [(128, 109e9), (1024, 220e9)] {
        let fc = crossing(|fc| sub_thz(fc, 300.0, n), 20e9, 1000e9, 1e-3);
        r.check(within(fc, want, 0.10), format!("kappa-mu N={n} {:.2} GHz (target {:.0})", fc / 1e9, want / 1e9));
    }
    r.finish()
}

fn mgf(d: &SumDistribution, s: f64) -> f64 {
    (f64::from(d.branches()) * d.model().ln_mgf(d.w_hat(), s).unwrap()).exp()
}

fn far_point(d: &SumDistribution) -> f64 {
    let (rate, lambda) = match d.model() {
        FadingModel::EtaMu(p) => (p.xi().min(p.xi() * p.ratio()), 0.0),
        FadingModel::KappaMu(p) => (p.rate(), f64::from(d.branches()) * p.kappa() * p.mu()),
    };
    (2.0 * (d.n_mu() + lambda) + 80.0) * d.w_hat() / rate
}

fn criterion_7() -> Outcome {
    let mut r = Report::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let tol = |v: f64| 1e-9f64.max(1e-6 * v);
    let (mut worst_ks, mut ks_fail, mut quad_fail) = (0.0f64, 0, 0);
    for i in 0..20 {
        let d = common::random_dist(&mut rng, [1, 4, 16, 64][i % 4]);
        // sampled W against the analytical distribution function
        let samples = sample_sum(&d, &SimConfig::new(1_000_000, 500 + i as u64).unwrap()).unwrap();
        let ks = ks_distance(&samples, |w| d.cdf(w, Approach::Auto, &auto()).unwrap().to_f64()).unwrap();
        let crit = ks_critical_1pct(samples.len());
        worst_ks = worst_ks.max(ks / crit);
        if ks >= crit {
            ks_fail += 1;
            r.check(false, format!("config {i} KS {ks:.2e} >= {crit:.2e}"));
        }

        // each metric against its defining integral
        let mut mism = |name: &str, got: f64, want: f64| {
            if (got - want).abs() > tol(want) {
                quad_fail += 1;
                r.check(false, format!("config {i} {name}: {got:e} vs quadrature {want:e}"));
            }
        };
        let upper = far_point(&d);
        let g = d.mean() * 0.8;
        let mut pdf = |w: f64| d.pdf(w, Approach::Auto, &auto()).unwrap().to_f64();
        let cdf_quad = common::integrate_half_line(&mut pdf, d.n_mu(), d.w_hat(), g, 1e-14);
        mism("cdf", d.cdf(g, Approach::Auto, &auto()).unwrap().to_f64(), cdf_quad);
        mism("outage", outage(&d, g, Approach::Auto, &auto()).unwrap().to_f64(), cdf_quad);
        let mut weighted = |w: f64| 0.5 * libm::erfc(w.sqrt()) * pdf(w);
        let bep_quad = common::integrate_half_line(&mut weighted, d.n_mu(), d.w_hat(), upper, 1e-14);
        mism("bep", bep(&d, BinaryModulation::Bpsk, Approach::Auto, &auto()).unwrap().to_f64(), bep_quad);
        let m = 8.0;
        let gp = (PI / m).sin().powi(2);
        let mut f = |t: f64| mgf(&d, gp / t.sin().powi(2));
        let psk_quad = common::integrate(&mut f, 0.0, (m - 1.0) * PI / m, 1e-14) / PI;
        let psk = sep_psk(&d, &MaryModulation::psk(8).unwrap(), Approach::Auto, &auto()).unwrap().to_f64();
        mism("8-psk", psk, psk_quad);
        let (gq, q) = (1.5 / 15.0, 0.75);
        let mut f = |t: f64| mgf(&d, gq / t.sin().powi(2));
        let qam_quad = 4.0 * q / PI * common::integrate(&mut f, 0.0, PI / 2.0, 1e-14)
            - 4.0 * q * q / PI * common::integrate(&mut f, 0.0, PI / 4.0, 1e-14);
        let qam = sep_qam(&d, &MaryModulation::qam(16).unwrap(), Approach::Auto, &auto()).unwrap().to_f64();
        mism("16-qam", qam, qam_quad);
    }
    r.check(
        ks_fail == 0 && quad_fail == 0,
        format!("20 configs: largest KS/critical {worst_ks:.2}, {quad_fail} quadrature mismatches"),
    );
    r.finish()
}

fn slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (mx, my) = points.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x / n, b + y / n));
    let num: f64 = points.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = points.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    num / den
}

fn criterion_8() -> Outcome {
    let mut r = Report::default();
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let (mut compared, mut worst_rel) = (0, 0.0f64);
    let (mut bounds_checked, mut bound_fail) = (0, 0);
    let (mut norm_worst, mut mean_worst, mut monotone) = (0.0f64, 0.0f64, true);
    for i in 0..20 {
        let d = common::random_dist(&mut rng, [1, 4, 16, 64][i % 4]);
        // power series against mixture: densities everywhere, BEP inside the gate
        for k in 1..=4 {
            let w = d.mean() * 0.4 * f64::from(k);
            for mode in [Mode::Pdf, Mode::Cdf] {
                let eval = |a, ctl: &TruncationControl| match mode {
                    Mode::Pdf => d.pdf(w, a, ctl),
                    Mode::Cdf => d.cdf(w, a, ctl),
                };
                if let Ok(p) = eval(Approach::Power, &auto()) {
                    let x = eval(Approach::Mixture, &auto()).unwrap();
                    worst_rel = worst_rel.max(p.value.rel_diff(x.value));
                    compared += 1;
                }
                // truncation bounds at several ε
                let exact = eval(Approach::Mixture, &auto()).unwrap().to_f64();
                for eps in [1usize, 5, 20, 60, 150] {
                    let part = eval(Approach::Mixture, &TruncationControl::fixed(eps)).unwrap();
                    let bound = d.mixture_truncation_bound(w, mode, eps).unwrap();
                    bounds_checked += 1;
                    if (part.to_f64() - exact).abs() > bound + 2e-12 * exact.abs() {
                        bound_fail += 1;
                    }
                    if let Ok(part) = eval(Approach::Power, &TruncationControl::fixed(eps)) {
                        let bound = d.truncation_bound(w, mode, eps).unwrap();
                        let slack = 2e-12 * exact.abs() + part.rel_error_estimate * part.to_f64().abs();
                        bounds_checked += 1;
                        if (part.to_f64() - exact).abs() > bound + slack {
                            bound_fail += 1;
                        }
                    }
                }
            }
        }
        let inside = d.with_w_hat(d.power_radius() / 0.5).unwrap();
        if let Ok(p) = bep(&inside, BinaryModulation::Bpsk, Approach::Power, &auto()) {
            let x = bep(&inside, BinaryModulation::Bpsk, Approach::Mixture, &auto()).unwrap();
            worst_rel = worst_rel.max(p.value.rel_diff(x.value));
            compared += 1;
            let exact = x.to_f64();
            for eps in [2usize, 10, 40] {
                if let (Ok(part), Ok(bound)) = (
                    bep(&inside, BinaryModulation::Bpsk, Approach::Power, &TruncationControl::fixed(eps)),
                    bep_truncation_bound(&inside, BinaryModulation::Bpsk, eps),
                ) {
                    bounds_checked += 1;
                    let slack = 2e-12 * exact + part.rel_error_estimate * part.to_f64().abs();
                    if (part.to_f64() - exact).abs() > bound + slack {
                        bound_fail += 1;
                    }
                }
            }
        }
        // normalization, mean and monotonicity
        let upper = far_point(&d);
        let mut pdf = |w: f64| d.pdf(w, Approach::Auto, &auto()).unwrap().to_f64();
        let total = common::integrate_half_line(&mut pdf, d.n_mu(), d.w_hat(), upper, 1e-13);
        let mut first = |w: f64| w * pdf(w);
        let mean = common::integrate_half_line(&mut first, d.n_mu() + 1.0, d.w_hat(), upper, 1e-13 * d.mean());
        norm_worst = norm_worst.max((total - 1.0).abs());
        mean_worst = mean_worst.max((mean / (f64::from(d.branches()) * d.w_hat()) - 1.0).abs());
        let cdfs: Vec<f64> =
            (0..=40).map(|k| d.cdf(upper * f64::from(k) / 40.0, Approach::Auto, &auto()).unwrap().to_f64()).collect();
        // each value carries the evaluation tolerance, so allow that much jitter
        let slack = 2.0 * auto().target_tol;
        monotone &= cdfs.windows(2).all(|p| p[1] >= p[0] - slack) && cdfs[40] <= 1.0 + slack;
    }
    r.check(compared >= 60 && worst_rel <= 1e-9, format!("{compared} approach comparisons, worst {worst_rel:.1e}"));
    r.check(bound_fail == 0, format!("{bounds_checked} truncation bounds, {bound_fail} violated"));
    r.check(norm_worst <= 1e-9 && mean_worst <= 1e-9, format!("normalization {norm_worst:.1e}, mean {mean_worst:.1e}"));
    r.check(monotone, "distribution functions monotone".into());
    let mut worst_slope = 0.0f64;
    for model in [eta_mu(), kappa_mu(), FadingModel::from(EtaMuParams::new(0.4, 1.2, 2.5).unwrap())] {
        for n in [1, 2, 4] {
            let base = SumDistribution::new(model, n, 1.0).unwrap();
            let start = 1e3 * f64::from(n) * base.power_radius();
            let points: Vec<(f64, f64)> = (0..=10)
                .map(|k| {
                    let w = start * 10f64.powf(f64::from(k) / 10.0);
                    let v = bep(&base.with_w_hat(w).unwrap(), BinaryModulation::Bpsk, Approach::Auto, &auto()).unwrap();
                    (w.log10(), v.value.log10_abs())
                })
                .collect();
            worst_slope = worst_slope.max((slope(&points) / -base.n_mu() - 1.0).abs());
        }
    }
    r.check(worst_slope <= 0.02, format!("diversity slope within {:.2}%", worst_slope * 100.0));
    r.finish()
}

fn criterion_9() -> Outcome {
    let mut r = Report::default();
    let runs: [&[&str]; 2] = [
        &[
            "sweep", "--model", "eta-mu", "--eta", "1.5", "--mu", "0.5", "--p", "0.75", "--n", "128", "--fc", "15e9",
            "--distance", "250", "--beta", "3", "--ptx-dbm", "30", "--bw-frac", "0.03", "--nf-db", "5", "--metric", "bep",
            "--var", "ptx_dbm", "--grid", "0:40:2",
        ],
        &[
            "mc-validate", "--model", "kappa-mu", "--kappa", "1.5", "--mu", "1.5", "--n", "64", "--w-hat", "1", "--metric",
            "cdf", "--w", "56,64,72", "--samples", "200000", "--seed", "42",
        ],
    ];
    for args in runs {
        let out: Vec<_> = (0..3)
            .map(|k| {
                let mut c = Command::new(env!("CARGO_BIN_EXE_fadesum"));
                c.args(args);
                if k == 2 {
                    c.env("FADESUM_THREADS", "1");
                }
                c.output().unwrap()
            })
            .collect();
        let same = out.iter().all(|o| o.status.success() && o.stdout == out[0].stdout && !o.stdout.is_empty());
        r.check(same, format!("`{}` byte-identical over 3 runs ({} bytes)", args[0], out[0].stdout.len()));
    }
    let mut identical = true;
    for model in [eta_mu(), kappa_mu()] {
        let cache = CoefficientCache::new(model, 8);
        let memo = cache.with_power(21, |c| c.to_vec());
        identical &= (0..=20).all(|m| memo[m] == power_coefficient_uncached(model, 8, m));
    }
    r.check(identical, "memoized and direct coefficients identical for m <= 20".into());
    r.finish()
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 9] = [
        ("eta-mu BEP anchors", criterion_1),
        ("kappa-mu BEP anchors", criterion_2),
        ("4-PSK SEP anchors", criterion_3),
        ("coverage anchors and sweep time", criterion_4),
        ("path-loss ratio", criterion_5),
        ("frequency crossings", criterion_6),
        ("oracle equivalence", criterion_7),
        ("series hygiene", criterion_8),
        ("determinism", criterion_9),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {} ({name}): PASS [{secs:.1} s] {detail}", i + 1),
            Err(detail) => {
                failures += 1;
                println!("criterion {} ({name}): FAIL [{secs:.1} s] {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
