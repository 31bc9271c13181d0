//! Physical link model: per-antenna mean SNR `ŵ` from carrier frequency,
//! distance, transmit power, bandwidth and CSI quality, plus sweeps of a
//! metric over one scenario variable.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::fading::FadingModel;
use crate::metrics::{MaryModulation, Metric};
use crate::series::{Approach, Evaluation, SumDistribution, TruncationControl};
use crate::specfun::{format_scientific, SignedLogValue};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Log-domain floor below which a probability is reported as zero.
pub const LN_UNDERFLOW: f64 = -740.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Bandwidth {
    /// `Ω = fraction · f_c`
    Fraction(f64),
    Hz(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkScenario {
    /// Carrier frequency in Hz.
    pub f_c: f64,
    /// Transmitter to user distance in metres.
    pub distance: f64,
    /// Path-loss exponent.
    pub beta: f64,
    pub p_t_dbm: f64,
    pub bandwidth: Bandwidth,
    pub noise_figure_db: f64,
    /// CSI estimation accuracy; 0 is perfect CSI.
    pub alpha: f64,
    pub n_antennas: u32,
}

fn positive(name: &'static str, x: f64) -> Result<()> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(invalid(name, format!("must be positive and finite, got {x}")));
    }
    Ok(())
}

impl LinkScenario {
    /// FR3 setup: `Ω = 0.03 f_c`, `β = 3`, `ν = 5 dB`, perfect CSI.
    pub fn fr3(f_c: f64, distance: f64, p_t_dbm: f64, n_antennas: u32) -> Result<Self> {
        Self {
            f_c,
            distance,
            beta: 3.0,
            p_t_dbm,
            bandwidth: Bandwidth::Fraction(0.03),
            noise_figure_db: 5.0,
            alpha: 0.0,
            n_antennas,
        }
        .validated()
    }

    /// Sub-THz setup: `Ω = 0.01 f_c`, `β = 2`, `ν = 5 dB`, perfect CSI.
    pub fn sub_thz(f_c: f64, distance: f64, p_t_dbm: f64, n_antennas: u32) -> Result<Self> {
        Self {
            f_c,
            distance,
            beta: 2.0,
            p_t_dbm,
            bandwidth: Bandwidth::Fraction(0.01),
            noise_figure_db: 5.0,
            alpha: 0.0,
            n_antennas,
        }
        .validated()
    }

    pub fn validated(self) -> Result<Self> {
        positive("fc", self.f_c)?;
        positive("distance", self.distance)?;
        positive("beta", self.beta)?;
        if !self.p_t_dbm.is_finite() {
            return Err(invalid("ptx_dbm", "must be finite"));
        }
        if !self.noise_figure_db.is_finite() {
            return Err(invalid("nf_db", "must be finite"));
        }
        match self.bandwidth {
            Bandwidth::Fraction(f) if !(f > 0.0 && f < 1.0) => {
                return Err(invalid("bw_frac", format!("must lie in (0, 1), got {f}")));
            }
            Bandwidth::Hz(b) => positive("bw_hz", b)?,
            _ => {}
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(invalid("alpha", format!("must lie in [0, 1], got {}", self.alpha)));
        }
        if self.n_antennas == 0 {
            return Err(invalid("n", "need at least one antenna"));
        }
        Ok(self)
    }

    pub fn bandwidth_hz(&self) -> f64 {
        match self.bandwidth {
            Bandwidth::Fraction(f) => f * self.f_c,
            Bandwidth::Hz(b) => b,
        }
    }
}

/// `φ = (c / (4π f_c))²`, the free-space gain at 1 m.
pub fn path_loss_factor(f_c: f64) -> f64 {
    (SPEED_OF_LIGHT / (4.0 * PI * f_c)).powi(2)
}

/// `σ² = −174 + 10 log₁₀ Ω + ν` in dBm.
pub fn noise_power_dbm(s: &LinkScenario) -> f64 {
    -174.0 + 10.0 * s.bandwidth_hz().log10() + s.noise_figure_db
}

/// `ŵ = (1 − α²) (P_t/σ²) φ d^{−β}`.
pub fn mean_branch_snr(s: &LinkScenario) -> Result<f64> {
    let s = s.validated()?;
    let csi = 1.0 - s.alpha * s.alpha;
    if csi == 0.0 {
        return Err(Error::DegenerateScenario);
    }
    let snr_db = s.p_t_dbm - noise_power_dbm(&s);
    Ok(csi * db_to_linear(snr_db) * path_loss_factor(s.f_c) * s.distance.powf(-s.beta))
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Scenario variable swept along the grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepVariable {
    Distance,
    PtDbm,
    Fc,
    N,
    M,
}

impl SweepVariable {
    pub fn name(&self) -> &'static str {
        match self {
            SweepVariable::Distance => "d",
            SweepVariable::PtDbm => "ptx_dbm",
            SweepVariable::Fc => "fc",
            SweepVariable::N => "n",
            SweepVariable::M => "m",
        }
    }
}

impl std::str::FromStr for SweepVariable {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "d" | "distance" => SweepVariable::Distance,
            "ptx_dbm" | "ptx-dbm" | "pt" => SweepVariable::PtDbm,
            "fc" => SweepVariable::Fc,
            "n" | "N" => SweepVariable::N,
            "m" | "M" => SweepVariable::M,
            other => return Err(invalid("var", format!("unknown sweep variable `{other}`"))),
        })
    }
}

/// Outcome of one sweep point.
#[derive(Clone, Debug, PartialEq)]
pub enum RowStatus {
    Ok,
    /// The value is below `e^{−740}` and is reported as zero.
    Underflow,
    Failed(Error),
}

impl RowStatus {
    pub fn label(&self) -> &'static str {
        match self {
            RowStatus::Ok => "ok",
            RowStatus::Underflow => "underflow",
            RowStatus::Failed(e) => error_label(e),
        }
    }
}

pub fn error_label(e: &Error) -> &'static str {
    match e {
        Error::InvalidParameter { .. } => "invalid_parameter",
        Error::Domain { .. } => "domain_error",
        Error::Pole { .. } => "pole",
        Error::ConvergenceFailure { .. } => "convergence_failure",
        Error::OutsideApproach1Domain { .. } => "outside_approach1_domain",
        Error::Cancellation { .. } => "cancellation",
        Error::Unavailable(_) => "unavailable",
        Error::DegenerateScenario => "degenerate_scenario",
        Error::InsufficientSamples { .. } => "insufficient_samples",
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub grid_value: f64,
    /// `ŵ` in dB; `None` when the scenario itself is invalid.
    pub w_hat_db: Option<f64>,
    pub metric: String,
    pub value: Option<SignedLogValue>,
    pub terms_used: Option<usize>,
    pub approach: Option<Approach>,
    pub status: RowStatus,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepTable {
    pub variable: SweepVariable,
    pub rows: Vec<SweepRow>,
}

pub const SWEEP_HEADER: &str = "grid_var,grid_value,w_hat_db,metric,value,terms_used,approach,status";

/// `{:.12e}` for plain reals.
pub fn format_real(x: f64) -> String {
    format!("{x:.12e}")
}

/// Prints a metric value, flooring at `e^{−740}`.
pub fn format_value(v: SignedLogValue) -> String {
    if v.is_zero() || v.ln_abs() < LN_UNDERFLOW {
        format_real(0.0)
    } else {
        format_scientific(v, 12)
    }
}

impl SweepRow {
    /// A row for one evaluation; tiny values are flagged as underflow.
    pub fn from_result(grid_value: f64, w_hat_db: Option<f64>, metric: String, result: Result<Evaluation>) -> Self {
        match result {
            Ok(e) => SweepRow {
                grid_value,
                w_hat_db,
                metric,
                value: Some(e.value),
                terms_used: Some(e.terms_used),
                approach: Some(e.approach),
                status: if e.value.is_zero() || e.value.ln_abs() < LN_UNDERFLOW { RowStatus::Underflow } else { RowStatus::Ok },
            },
            Err(e) => SweepRow {
                grid_value,
                w_hat_db,
                metric,
                value: None,
                terms_used: None,
                approach: None,
                status: RowStatus::Failed(e),
            },
        }
    }

    pub fn csv_fields(&self, variable: SweepVariable) -> Vec<String> {
        self.csv_fields_named(variable.name())
    }

    /// The CSV fields with an arbitrary grid variable name.
    pub fn csv_fields_named(&self, grid_var: &str) -> Vec<String> {
        vec![
            grid_var.to_string(),
            format_real(self.grid_value),
            self.w_hat_db.map(format_real).unwrap_or_default(),
            self.metric.clone(),
            self.value.map(format_value).unwrap_or_default(),
            self.terms_used.map(|t| t.to_string()).unwrap_or_default(),
            self.approach.map(|a| a.label().to_string()).unwrap_or_default(),
            self.status.label().to_string(),
        ]
    }
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(SWEEP_HEADER);
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.csv_fields(self.variable).join(","));
            out.push('\n');
        }
        out
    }

    pub fn has_convergence_failure(&self) -> bool {
        self.rows.iter().any(|r| matches!(r.status, RowStatus::Failed(Error::ConvergenceFailure { .. })))
    }
}

/// Everything a sweep needs besides the grid.
#[derive(Clone, Debug)]
pub struct SweepSpec {
    pub model: FadingModel,
    pub scenario: LinkScenario,
    pub metric: Metric,
    pub approach: Approach,
    pub control: TruncationControl,
}

fn as_count(name: &'static str, x: f64) -> Result<u32> {
    if !(x >= 1.0) || x.fract() != 0.0 || x > f64::from(u32::MAX) {
        return Err(invalid(name, format!("must be a positive integer, got {x}")));
    }
    Ok(x as u32)
}

/// Evaluates the metric at every grid point. Rows follow grid order and each
/// point is computed independently, so the result does not depend on the
/// order of the grid or on the number of worker threads.
pub fn sweep(spec: &SweepSpec, variable: SweepVariable, grid: &[f64]) -> Result<SweepTable> {
    if grid.is_empty() {
        return Err(invalid("grid", "the grid is empty"));
    }
    if let Some(x) = grid.iter().find(|x| !x.is_finite()) {
        return Err(invalid("grid", format!("non-finite grid value {x}")));
    }
    let rows = grid.par_iter().map(|&x| sweep_point(spec, variable, x)).collect();
    Ok(SweepTable { variable, rows })
}

fn sweep_point(spec: &SweepSpec, variable: SweepVariable, x: f64) -> SweepRow {
    let mut scenario = spec.scenario;
    let mut metric = spec.metric;
    let failed = |e: Error, metric: String| SweepRow::from_result(x, None, metric, Err(e));
    let applied = match variable {
        SweepVariable::Distance => {
            scenario.distance = x;
            Ok(())
        },
        SweepVariable::PtDbm => {
            scenario.p_t_dbm = x;
            Ok(())
        },
        SweepVariable::Fc => {
            scenario.f_c = x;
            Ok(())
        },
        SweepVariable::N => as_count("n", x).map(|n| scenario.n_antennas = n),
        SweepVariable::M => match metric {
            Metric::Sep(m) => as_count("m", x)
                .and_then(|order| MaryModulation::new(m.family(), order))
                .map(|m| metric = Metric::Sep(m)),
            _ => Err(invalid("var", "sweeping M needs an M-ary modulation")),
        },
    };
    let name = metric.name();
    if let Err(e) = applied {
        return failed(e, name);
    }
    let w_hat = match mean_branch_snr(&scenario) {
        Ok(w) => w,
        Err(e) => return failed(e, name),
    };
    let evaluated = SumDistribution::new(spec.model, scenario.n_antennas, w_hat)
        .and_then(|d| metric.evaluate(&d, spec.approach, &spec.control));
    SweepRow::from_result(x, Some(linear_to_db(w_hat)), name, evaluated)
}
