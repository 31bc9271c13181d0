//! Flag definitions and config-file merging.

use std::collections::BTreeSet;

use clap::{Args, CommandFactory, Parser, Subcommand};

use crate::Failure;

#[derive(Parser, Debug)]
#[command(name = "fadesum", version, about = "Statistics of sums of squared eta-mu and kappa-mu fading variables")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Density of the sum at the given points
    #[command(args_override_self = true, allow_negative_numbers = true)]
    Pdf(PointArgs),
    /// Distribution function of the sum at the given points
    #[command(args_override_self = true, allow_negative_numbers = true)]
    Cdf(PointArgs),
    /// Outage probability for an SNR threshold
    #[command(args_override_self = true, allow_negative_numbers = true)]
    Outage(OutageArgs),
    /// Bit error probability of a binary modulation
    #[command(args_override_self = true, allow_negative_numbers = true)]
    Bep(BepArgs),
    /// Symbol error probability of M-PSK or M-QAM
    #[command(args_override_self = true, allow_negative_numbers = true)]
    Sep(SepArgs),
    /// A metric over a grid of one scenario variable
    #[command(args_override_self = true, allow_negative_numbers = true)]
    Sweep(SweepArgs),
    /// Analytical metric next to a Monte Carlo estimate
    #[command(name = "mc-validate", args_override_self = true, allow_negative_numbers = true)]
    McValidate(McArgs),
}

#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// Fading model: eta-mu or kappa-mu
    #[arg(long)]
    pub model: Option<String>,
    /// Power ratio of the in-phase and quadrature components (eta-mu)
    #[arg(long)]
    pub eta: Option<f64>,
    /// Cluster count
    #[arg(long)]
    pub mu: Option<f64>,
    /// Ratio of in-phase to quadrature cluster counts (eta-mu)
    #[arg(long)]
    pub p: Option<f64>,
    /// Dominant-to-scattered power ratio (kappa-mu)
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Number of antennas
    #[arg(long)]
    pub n: Option<u32>,
    /// Mean power per branch, linear; replaces the link scenario flags
    #[arg(long)]
    pub w_hat: Option<f64>,
    /// Carrier frequency in Hz
    #[arg(long)]
    pub fc: Option<f64>,
    /// Link distance in m
    #[arg(long)]
    pub distance: Option<f64>,
    /// Path-loss exponent
    #[arg(long)]
    pub beta: Option<f64>,
    /// Transmit power in dBm
    #[arg(long)]
    pub ptx_dbm: Option<f64>,
    /// Bandwidth as a fraction of the carrier frequency
    #[arg(long)]
    pub bw_frac: Option<f64>,
    /// Bandwidth in Hz
    #[arg(long)]
    pub bw_hz: Option<f64>,
    /// Receiver noise figure in dB
    #[arg(long)]
    pub nf_db: Option<f64>,
    /// Channel estimation error power fraction, 0 for perfect CSI
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Series representation: 1, 2 or auto
    #[arg(long)]
    pub approach: Option<String>,
    /// Number of series terms, or auto
    #[arg(long)]
    pub terms: Option<String>,
    /// Truncation tolerance when terms is auto
    #[arg(long)]
    pub tol: Option<f64>,
    /// Write the CSV to this file instead of standard output
    #[arg(long)]
    pub output: Option<String>,
    /// Read flag defaults from a `key = value` file
    #[arg(long)]
    pub config: Option<String>,
}

#[derive(Args, Debug)]
pub struct PointArgs {
    #[command(flatten)]
    pub common: Common,
    /// Evaluation points: a comma list or start:stop:step
    #[arg(long)]
    pub w: Option<String>,
}

#[derive(Args, Debug)]
pub struct OutageArgs {
    #[command(flatten)]
    pub common: Common,
    /// SNR threshold in dB
    #[arg(long)]
    pub gamma_th_db: Option<f64>,
}

#[derive(Args, Debug)]
pub struct BepArgs {
    #[command(flatten)]
    pub common: Common,
    /// bpsk, bfsk, bfsk-min or binary-g<gain>
    #[arg(long)]
    pub modulation: Option<String>,
}

#[derive(Args, Debug)]
pub struct SepArgs {
    #[command(flatten)]
    pub common: Common,
    /// <M>-psk or <M>-qam
    #[arg(long)]
    pub modulation: Option<String>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    /// outage, coverage, bep or sep
    #[arg(long)]
    pub metric: Option<String>,
    /// Modulation for bep or sep
    #[arg(long)]
    pub modulation: Option<String>,
    /// SNR threshold in dB for outage or coverage
    #[arg(long)]
    pub gamma_th_db: Option<f64>,
    /// Swept variable: d, ptx_dbm, fc, n or m
    #[arg(long)]
    pub var: Option<String>,
    /// Grid values: a comma list or start:stop:step
    #[arg(long)]
    pub grid: Option<String>,
}

#[derive(Args, Debug)]
pub struct McArgs {
    #[command(flatten)]
    pub common: Common,
    /// bep, outage, coverage or cdf
    #[arg(long)]
    pub metric: Option<String>,
    /// Binary modulation for bep
    #[arg(long)]
    pub modulation: Option<String>,
    /// SNR threshold in dB for outage or coverage
    #[arg(long)]
    pub gamma_th_db: Option<f64>,
    /// Evaluation points for cdf: a comma list or start:stop:step
    #[arg(long)]
    pub w: Option<String>,
    /// Monte Carlo sample count
    #[arg(long)]
    pub samples: Option<usize>,
    /// Random seed
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Flags that describe the link scenario; `w-hat` excludes all of them.
pub const SCENARIO_KEYS: [&str; 8] = ["fc", "distance", "beta", "ptx-dbm", "bw-frac", "bw-hz", "nf-db", "alpha"];

/// Parses `argv`, filling flags absent from the command line from the
/// `--config` file when one is given.
pub fn parse(argv: Vec<String>) -> Result<Cli, Failure> {
    let merged = merge_config(argv)?;
    Cli::try_parse_from(merged).map_err(Failure::Clap)
}

fn merge_config(argv: Vec<String>) -> Result<Vec<String>, Failure> {
    let Some(sub_pos) = argv.iter().skip(1).position(|a| !a.starts_with('-')).map(|i| i + 1) else {
        return Ok(argv);
    };
    let Some(path) = config_path(&argv[sub_pos + 1..]) else {
        return Ok(argv);
    };
    let text = std::fs::read_to_string(&path).map_err(|e| Failure::Io(format!("cannot read config `{path}`: {e}")))?;
    let entries = parse_config(&text)?;

    let accepted = accepted_flags(&argv[sub_pos]);
    let given: BTreeSet<String> = argv[sub_pos + 1..]
        .iter()
        .filter_map(|a| a.strip_prefix("--"))
        .map(|a| a.split('=').next().unwrap_or(a).to_string())
        .collect();
    let cli_has_w_hat = given.contains("w-hat");
    let cli_has_scenario = SCENARIO_KEYS.iter().any(|k| given.contains(*k));

    let mut injected = vec![];
    for (line, key, value) in entries {
        if key == "config" {
            return Err(Failure::Invalid(format!("config line {line}: `config` cannot be nested")));
        }
        if !all_flags().contains(&key) {
            return Err(Failure::Invalid(format!("config line {line}: unknown key `{key}`")));
        }
        let overridden = (cli_has_w_hat && SCENARIO_KEYS.contains(&key.as_str())) || (cli_has_scenario && key == "w-hat");
        if accepted.contains(&key) && !overridden {
            injected.push(format!("--{key}={value}"));
        }
    }
    let mut out = argv[..=sub_pos].to_vec();
    out.extend(injected);
    out.extend_from_slice(&argv[sub_pos + 1..]);
    Ok(out)
}

fn config_path(args: &[String]) -> Option<String> {
    let mut path = None;
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            path = it.next().cloned();
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        }
    }
    path
}

/// `key = value` lines; `#` starts a comment. Keys may use `_` for `-`.
fn parse_config(text: &str) -> Result<Vec<(usize, String, String)>, Failure> {
    let mut out = vec![];
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Failure::Invalid(format!("config line {}: expected `key = value`", i + 1)));
        };
        let (key, value) = (key.trim().replace('_', "-"), value.trim());
        if key.is_empty() || value.is_empty() {
            return Err(Failure::Invalid(format!("config line {}: expected `key = value`", i + 1)));
        }
        out.push((i + 1, key, value.to_string()));
    }
    Ok(out)
}

fn long_flags(cmd: &clap::Command) -> BTreeSet<String> {
    cmd.get_arguments().filter_map(|a| a.get_long()).map(str::to_string).collect()
}

fn accepted_flags(sub: &str) -> BTreeSet<String> {
    Cli::command().find_subcommand(sub).map(long_flags).unwrap_or_default()
}

fn all_flags() -> BTreeSet<String> {
    Cli::command().get_subcommands().flat_map(long_flags).collect()
}
