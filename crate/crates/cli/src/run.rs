//! Validation of parsed flags and execution of each command.

use fadesum::linkbudget::{
    db_to_linear, format_real, linear_to_db, mean_branch_snr, sweep, Bandwidth, RowStatus, SweepRow, SweepSpec,
    SWEEP_HEADER,
};
use fadesum::montecarlo::{empirical_bep, empirical_outage, ks_critical_1pct, ks_distance, sample_sum, Estimate, SimConfig};
use fadesum::{
    Approach, BinaryModulation, Error, EtaMuParams, FadingModel, KappaMuParams, LinkScenario, MaryFamily, MaryModulation,
    Metric, Mode, SumDistribution, SweepVariable, Terms, TruncationControl,
};

use crate::args::{Cli, Command, Common, McArgs, SweepArgs, SCENARIO_KEYS};
use crate::Failure;

pub struct Output {
    pub csv: String,
    pub path: Option<String>,
    /// Some row failed numerically; the CSV still carries every row.
    pub numerical_failure: bool,
}

const MC_HEADER: &str = "mc_estimate,mc_stderr,n_samples,seed,ks_distance";
const DEFAULT_SAMPLES: usize = 1_000_000;
const DEFAULT_SEED: u64 = 1;

pub fn execute(cli: Cli) -> Result<Output, Failure> {
    match cli.command {
        Command::Pdf(a) => points(&a.common, a.w.as_deref(), Mode::Pdf),
        Command::Cdf(a) => points(&a.common, a.w.as_deref(), Mode::Cdf),
        Command::Outage(a) => {
            let gamma_th = db_to_linear(a.gamma_th_db.unwrap_or(0.0));
            single(&a.common, Metric::Outage { gamma_th })
        }
        Command::Bep(a) => single(&a.common, Metric::Bep(binary(a.modulation.as_deref())?)),
        Command::Sep(a) => single(&a.common, Metric::Sep(mary(a.modulation.as_deref())?)),
        Command::Sweep(a) => run_sweep(&a),
        Command::McValidate(a) => mc_validate(&a),
    }
}

fn invalid(e: Error) -> Failure {
    Failure::Invalid(e.to_string())
}

fn require<T>(v: Option<T>, name: &str, hint: &str) -> Result<T, Failure> {
    v.ok_or_else(|| Failure::Invalid(format!("missing required parameter `{name}` (--{}){hint}", name.replace('_', "-"))))
}

fn model(c: &Common) -> Result<FadingModel, Failure> {
    let name = require(c.model.as_deref(), "model", ": eta-mu or kappa-mu")?;
    match name {
        "eta-mu" => {
            if c.kappa.is_some() {
                return Err(Failure::Invalid("--kappa does not apply to model eta-mu".into()));
            }
            let hint = " for model eta-mu";
            let eta = require(c.eta, "eta", hint)?;
            let mu = require(c.mu, "mu", hint)?;
            let p = require(c.p, "p", hint)?;
            Ok(EtaMuParams::new(eta, mu, p).map_err(invalid)?.into())
        }
        "kappa-mu" => {
            if c.eta.is_some() || c.p.is_some() {
                return Err(Failure::Invalid("--eta and --p do not apply to model kappa-mu".into()));
            }
            let hint = " for model kappa-mu";
            let kappa = require(c.kappa, "kappa", hint)?;
            let mu = require(c.mu, "mu", hint)?;
            Ok(KappaMuParams::new(kappa, mu).map_err(invalid)?.into())
        }
        other => Err(Failure::Invalid(format!("invalid parameter `model`: expected eta-mu or kappa-mu, got `{other}`"))),
    }
}

/// Where the per-branch mean SNR comes from.
enum Source {
    WHat(f64),
    Link(LinkScenario),
}

fn scenario_flags(c: &Common) -> Vec<&'static str> {
    let given = [
        c.fc.is_some(),
        c.distance.is_some(),
        c.beta.is_some(),
        c.ptx_dbm.is_some(),
        c.bw_frac.is_some(),
        c.bw_hz.is_some(),
        c.nf_db.is_some(),
        c.alpha.is_some(),
    ];
    SCENARIO_KEYS.iter().zip(given).filter(|(_, g)| *g).map(|(k, _)| *k).collect()
}

fn source(c: &Common, n: u32) -> Result<Source, Failure> {
    let flags = scenario_flags(c);
    if let Some(w) = c.w_hat {
        if !flags.is_empty() {
            let list: Vec<String> = flags.iter().map(|f| format!("--{f}")).collect();
            return Err(Failure::Invalid(format!(
                "--w-hat and the link scenario flags are mutually exclusive (also given: {})",
                list.join(", ")
            )));
        }
        if !(w > 0.0 && w.is_finite()) {
            return Err(Failure::Invalid(format!("invalid parameter `w_hat`: must be positive and finite, got {w}")));
        }
        return Ok(Source::WHat(w));
    }
    let hint = " (or give --w-hat instead of the link scenario)";
    let bandwidth = match (c.bw_frac, c.bw_hz) {
        (Some(_), Some(_)) => return Err(Failure::Invalid("--bw-frac and --bw-hz are mutually exclusive".into())),
        (Some(f), None) => Bandwidth::Fraction(f),
        (None, Some(hz)) => Bandwidth::Hz(hz),
        (None, None) => return Err(Failure::Invalid(format!("missing required parameter `bw_frac` (--bw-frac or --bw-hz){hint}"))),
    };
    let scenario = LinkScenario {
        f_c: require(c.fc, "fc", hint)?,
        distance: require(c.distance, "distance", hint)?,
        beta: require(c.beta, "beta", hint)?,
        p_t_dbm: require(c.ptx_dbm, "ptx_dbm", hint)?,
        bandwidth,
        noise_figure_db: require(c.nf_db, "nf_db", hint)?,
        alpha: c.alpha.unwrap_or(0.0),
        n_antennas: n,
    };
    Ok(Source::Link(scenario.validated().map_err(invalid)?))
}

fn w_hat(s: &Source) -> Result<f64, Failure> {
    match s {
        Source::WHat(w) => Ok(*w),
        Source::Link(l) => mean_branch_snr(l).map_err(invalid),
    }
}

fn branches(c: &Common) -> Result<u32, Failure> {
    let n = require(c.n, "n", " (number of antennas)")?;
    if n == 0 {
        return Err(Failure::Invalid("invalid parameter `n`: must be at least 1".into()));
    }
    Ok(n)
}

fn distribution(c: &Common) -> Result<SumDistribution, Failure> {
    let model = model(c)?;
    let n = branches(c)?;
    let w = w_hat(&source(c, n)?)?;
    SumDistribution::new(model, n, w).map_err(invalid)
}

fn control(c: &Common) -> Result<(Approach, TruncationControl), Failure> {
    let approach = c.approach.as_deref().unwrap_or("auto").parse().map_err(invalid)?;
    let mut ctl = TruncationControl::default();
    match c.terms.as_deref() {
        None | Some("auto") => {}
        Some(t) => match t.parse::<usize>() {
            Ok(n) if n >= 1 => ctl.terms = Terms::Fixed(n),
            _ => return Err(Failure::Invalid(format!("invalid parameter `terms`: expected a positive integer or auto, got `{t}`"))),
        },
    }
    if let Some(tol) = c.tol {
        if !(tol > 0.0 && tol < 1.0) {
            return Err(Failure::Invalid(format!("invalid parameter `tol`: must lie in (0, 1), got {tol}")));
        }
        ctl.target_tol = tol;
        ctl.rel_tol = tol;
    }
    Ok((approach, ctl))
}

fn binary(s: Option<&str>) -> Result<BinaryModulation, Failure> {
    match s.unwrap_or("bpsk") {
        "bpsk" => Ok(BinaryModulation::Bpsk),
        "bfsk" => Ok(BinaryModulation::Bfsk),
        "bfsk-min" => Ok(BinaryModulation::BfskMinCorrelation),
        other => match other.strip_prefix("binary-g").and_then(|g| g.parse::<f64>().ok()) {
            Some(g) => BinaryModulation::custom(g).map_err(invalid),
            None => Err(Failure::Invalid(format!(
                "invalid parameter `modulation`: expected bpsk, bfsk, bfsk-min or binary-g<gain>, got `{other}`"
            ))),
        },
    }
}

fn mary(s: Option<&str>) -> Result<MaryModulation, Failure> {
    let s = require(s, "modulation", ": <M>-psk or <M>-qam")?;
    let bad = || Failure::Invalid(format!("invalid parameter `modulation`: expected <M>-psk or <M>-qam, got `{s}`"));
    let (order, family) = s.split_once('-').ok_or_else(bad)?;
    let order: u32 = order.parse().map_err(|_| bad())?;
    let family = match family {
        "psk" => MaryFamily::Psk,
        "qam" => MaryFamily::Qam,
        _ => return Err(bad()),
    };
    MaryModulation::new(family, order).map_err(invalid)
}

/// A comma list or an inclusive `start:stop:step` range.
fn grid(name: &str, s: Option<&str>) -> Result<Vec<f64>, Failure> {
    let s = require(s, name, "")?.trim();
    let bad = |what: &str| Failure::Invalid(format!("invalid parameter `{name}`: {what}"));
    let values: Vec<f64> = if s.contains(':') {
        let parts: Vec<f64> = s
            .split(':')
            .map(|p| p.trim().parse::<f64>().map_err(|_| bad(&format!("cannot parse range `{s}`"))))
            .collect::<Result<_, _>>()?;
        let [start, stop, step] = parts[..] else {
            return Err(bad("a range is start:stop:step"));
        };
        if !(step > 0.0) || !start.is_finite() || !stop.is_finite() {
            return Err(bad("a range needs finite ends and a positive step"));
        }
        if stop < start {
            vec![]
        } else {
            let count = ((stop - start) / step * (1.0 + 1e-12)).floor() as usize + 1;
            (0..count).map(|i| start + i as f64 * step).collect()
        }
    } else {
        s.split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(|p| p.parse::<f64>().map_err(|_| bad(&format!("cannot parse `{p}`"))))
            .collect::<Result<_, _>>()?
    };
    if values.is_empty() {
        return Err(bad("the grid is empty"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(bad("grid values must be finite"));
    }
    Ok(values)
}

/// Bad grid values are input errors; anything else failing is numerical.
fn classify(rows: &[(String, SweepRow)]) -> Result<bool, Failure> {
    let mut numerical = false;
    for (var, row) in rows {
        if let RowStatus::Failed(e) = &row.status {
            match e {
                Error::InvalidParameter { .. } | Error::Domain { .. } | Error::DegenerateScenario => {
                    return Err(Failure::Invalid(format!("at {var} = {}: {e}", row.grid_value)));
                }
                _ => numerical = true,
            }
        }
    }
    Ok(numerical)
}

fn table(c: &Common, rows: Vec<(String, SweepRow)>) -> Result<Output, Failure> {
    let numerical_failure = classify(&rows)?;
    let mut csv = format!("{SWEEP_HEADER}\n");
    for (var, row) in &rows {
        csv.push_str(&row.csv_fields_named(var).join(","));
        csv.push('\n');
    }
    Ok(Output { csv, path: c.output.clone(), numerical_failure })
}

fn points(c: &Common, w: Option<&str>, mode: Mode) -> Result<Output, Failure> {
    let dist = distribution(c)?;
    let (approach, ctl) = control(c)?;
    let ws = grid("w", w)?;
    let db = Some(linear_to_db(dist.w_hat()));
    let name = match mode {
        Mode::Pdf => "pdf",
        Mode::Cdf => "cdf",
    };
    let rows = ws
        .iter()
        .map(|&x| {
            let r = match mode {
                Mode::Pdf => dist.pdf(x, approach, &ctl),
                Mode::Cdf => dist.cdf(x, approach, &ctl),
            };
            ("w".to_string(), SweepRow::from_result(x, db, name.into(), r))
        })
        .collect();
    table(c, rows)
}

fn single(c: &Common, metric: Metric) -> Result<Output, Failure> {
    let dist = distribution(c)?;
    let (approach, ctl) = control(c)?;
    let r = metric.evaluate(&dist, approach, &ctl);
    let row = SweepRow::from_result(dist.w_hat(), Some(linear_to_db(dist.w_hat())), metric.name(), r);
    table(c, vec![("w_hat".into(), row)])
}

fn sweep_metric(name: Option<&str>, modulation: Option<&str>, gamma_th_db: Option<f64>) -> Result<Metric, Failure> {
    let gamma_th = db_to_linear(gamma_th_db.unwrap_or(0.0));
    match require(name, "metric", ": outage, coverage, bep or sep")? {
        "outage" => Ok(Metric::Outage { gamma_th }),
        "coverage" => Ok(Metric::Coverage { gamma_th }),
        "bep" => Ok(Metric::Bep(binary(modulation)?)),
        "sep" => Ok(Metric::Sep(mary(modulation)?)),
        other => Err(Failure::Invalid(format!(
            "invalid parameter `metric`: expected outage, coverage, bep or sep, got `{other}`"
        ))),
    }
}

fn run_sweep(a: &SweepArgs) -> Result<Output, Failure> {
    let c = &a.common;
    let model = model(c)?;
    let variable: SweepVariable = require(a.var.as_deref(), "var", ": d, ptx_dbm, fc, n or m")?.parse().map_err(invalid)?;
    let values = grid("grid", a.grid.as_deref())?;
    let n = match (variable, c.n) {
        (SweepVariable::N, n) => n.unwrap_or(1),
        _ => branches(c)?,
    };
    // The swept field is overwritten per point, so it need not be given.
    let mut c = c.clone();
    match variable {
        SweepVariable::Distance => c.distance = c.distance.or(Some(values[0])),
        SweepVariable::PtDbm => c.ptx_dbm = c.ptx_dbm.or(Some(values[0])),
        SweepVariable::Fc => c.fc = c.fc.or(Some(values[0])),
        SweepVariable::N | SweepVariable::M => {}
    }
    let c = &c;
    let scenario = match source(c, n)? {
        Source::Link(l) => l,
        Source::WHat(_) => {
            return Err(Failure::Invalid("sweep derives w_hat from the link scenario; give the scenario flags instead of --w-hat".into()))
        }
    };
    let metric = sweep_metric(a.metric.as_deref(), a.modulation.as_deref(), a.gamma_th_db)?;
    let (approach, control) = control(c)?;
    let spec = SweepSpec { model, scenario, metric, approach, control };
    let t = sweep(&spec, variable, &values).map_err(invalid)?;
    let name = variable.name().to_string();
    table(c, t.rows.into_iter().map(|r| (name.clone(), r)).collect())
}

fn mc_validate(a: &McArgs) -> Result<Output, Failure> {
    let c = &a.common;
    let dist = distribution(c)?;
    let (approach, ctl) = control(c)?;
    let samples = a.samples.unwrap_or(DEFAULT_SAMPLES);
    let seed = a.seed.unwrap_or(DEFAULT_SEED);
    let config = SimConfig::new(samples, seed).map_err(invalid)?;
    let db = Some(linear_to_db(dist.w_hat()));
    let gamma_th = db_to_linear(a.gamma_th_db.unwrap_or(0.0));

    let flip = |e: Estimate| Estimate { value: 1.0 - e.value, ..e };
    let mut cases: Vec<(String, SweepRow, Estimate)> = vec![];
    match a.metric.as_deref().unwrap_or("bep") {
        "bep" => {
            let m = binary(a.modulation.as_deref())?;
            let metric = Metric::Bep(m);
            let row = SweepRow::from_result(dist.w_hat(), db, metric.name(), metric.evaluate(&dist, approach, &ctl));
            let est = empirical_bep(&dist, m, &config).map_err(invalid)?;
            cases.push(("w_hat".into(), row, est));
        }
        "outage" | "coverage" => {
            let cov = a.metric.as_deref() == Some("coverage");
            let metric = if cov { Metric::Coverage { gamma_th } } else { Metric::Outage { gamma_th } };
            let row = SweepRow::from_result(dist.w_hat(), db, metric.name(), metric.evaluate(&dist, approach, &ctl));
            let est = empirical_outage(&dist, gamma_th, &config).map_err(invalid)?;
            cases.push(("w_hat".into(), row, if cov { flip(est) } else { est }));
        }
        "cdf" => {
            for w in grid("w", a.w.as_deref())? {
                let row = SweepRow::from_result(w, db, "cdf".into(), dist.cdf(w, approach, &ctl));
                let est = empirical_outage(&dist, w, &config).map_err(invalid)?;
                cases.push(("w".into(), row, est));
            }
        }
        other => {
            return Err(Failure::Invalid(format!(
                "invalid parameter `metric`: mc-validate supports bep, outage, coverage and cdf, got `{other}`"
            )))
        }
    }

    let rows: Vec<(String, SweepRow)> = cases.iter().map(|(v, r, _)| (v.clone(), r.clone())).collect();
    let numerical_failure = classify(&rows)?;
    let ks = match sample_sum(&dist, &config).and_then(|s| ks_distance(&s, |w| dist.cdf(w, approach, &ctl).map_or(f64::NAN, |e| e.to_f64())))
    {
        Ok(d) if d.is_finite() => Some(d),
        Ok(_) => None,
        Err(Error::InsufficientSamples { .. }) => None,
        Err(e) => return Err(invalid(e)),
    };
    let ks_ok = ks.is_none_or(|d| d < ks_critical_1pct(samples));

    let mut csv = format!("{SWEEP_HEADER},{MC_HEADER}\n");
    for (var, row, est) in &cases {
        let mut fields = row.csv_fields_named(var);
        if let (Some(v), RowStatus::Ok | RowStatus::Underflow) = (row.value, &row.status) {
            // a never-hit indicator has zero spread; allow the sampling resolution
            let tol = (3.0 * est.std_error).max(3.0 / samples as f64);
            if (v.to_f64() - est.value).abs() > tol {
                fields[7] = "mc_mismatch".into();
            } else if !ks_ok {
                fields[7] = "ks_reject".into();
            }
        }
        fields.extend([
            format_real(est.value),
            format_real(est.std_error),
            samples.to_string(),
            seed.to_string(),
            ks.map(format_real).unwrap_or_default(),
        ]);
        csv.push_str(&fields.join(","));
        csv.push('\n');
    }
    Ok(Output { csv, path: c.output.clone(), numerical_failure })
}
