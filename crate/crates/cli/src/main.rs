mod args;
mod run;

use std::io::Write;
use std::process::ExitCode;

/// Why a run stopped early.
#[derive(Debug)]
pub enum Failure {
    Clap(clap::Error),
    Invalid(String),
    Io(String),
}

const EXIT_INVALID: u8 = 2;
const EXIT_CONVERGENCE: u8 = 3;
const EXIT_IO: u8 = 4;

fn main() -> ExitCode {
    if let Err(f) = configure_threads() {
        return report(f);
    }
    let cli = match args::parse(std::env::args().collect()) {
        Ok(cli) => cli,
        Err(f) => return report(f),
    };
    match run::execute(cli) {
        Ok(out) => {
            if let Err(f) = emit(&out.csv, out.path.as_deref()) {
                return report(f);
            }
            if out.numerical_failure {
                eprintln!("error: some rows failed to converge; see the status column");
                ExitCode::from(EXIT_CONVERGENCE)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(f) => report(f),
    }
}

/// `FADESUM_THREADS` caps the worker pool.
fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("FADESUM_THREADS") else {
        return Ok(());
    };
    let n: usize = match raw.trim().parse() {
        Ok(n) if n >= 1 => n,
        _ => return Err(Failure::Invalid(format!("FADESUM_THREADS must be an integer >= 1, got `{raw}`"))),
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Invalid(format!("cannot start {n} worker threads: {e}")))
}

fn emit(csv: &str, path: Option<&str>) -> Result<(), Failure> {
    let written = match path {
        Some(p) => std::fs::write(p, csv).map_err(|e| format!("cannot write `{p}`: {e}")),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(csv.as_bytes()).and_then(|_| out.flush()).map_err(|e| format!("cannot write output: {e}"))
        }
    };
    written.map_err(Failure::Io)
}

fn report(f: Failure) -> ExitCode {
    match f {
        Failure::Clap(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { 0 };
            let _ = e.print();
            ExitCode::from(code)
        }
        Failure::Invalid(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_INVALID)
        }
        Failure::Io(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_IO)
        }
    }
}
