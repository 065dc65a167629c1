//! Command-line front end for the three-mode condensate-cavity engine.
//!
//! Subcommands: `eigen` (spectral report), `evolve` (observables over a time
//! grid), `sweep` (observables along one parameter axis), `map`
//! (coupling-detuning plane scan), and `validate` (Gaussian engine against
//! the Fock-space oracle). Every code path is deterministic, so repeated
//! runs with the same configuration emit byte-identical output.

pub mod commands;
pub mod config;
pub mod csvfmt;
pub mod svg;

use std::ffi::OsString;
use std::io::Write;
use std::sync::Once;

use clap::Parser;

pub const EXIT_OK: i32 = 0;
/// Physics or regime error: the requested quantity does not exist at this
/// parameter point (also the catch-all for filesystem failures).
pub const EXIT_PHYSICS: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
/// The Fock-space oracle could not produce a converged record.
pub const EXIT_ORACLE: i32 = 3;

/// Terminal failure: an exit code plus the message printed to stderr.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    pub fn physics(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_PHYSICS,
            message: message.into(),
        }
    }
}

pub type CliResult<T> = Result<T, Failure>;

impl From<carl_core::Error> for Failure {
    fn from(e: carl_core::Error) -> Self {
        use carl_core::Error;
        let code = match e {
            Error::InvalidParameter { .. } => EXIT_USAGE,
            Error::DegenerateSpectrum { .. }
            | Error::NoGrowingBranch { .. }
            | Error::UndefinedPhase => EXIT_PHYSICS,
            Error::TruncatedWeight { .. }
            | Error::CutoffInsufficient { .. }
            | Error::LadderNotConverged { .. }
            | Error::ResourceBudget { .. }
            | Error::IterationBudget => EXIT_ORACLE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure {
            code: EXIT_PHYSICS,
            message: format!("io error: {e}"),
        }
    }
}

static THREAD_POOL: Once = Once::new();

/// Applies the `CARL_THREADS` worker cap. The global pool can only be built
/// once per process; later calls just revalidate the variable.
fn init_threads() -> CliResult<()> {
    let Some(raw) = std::env::var_os("CARL_THREADS") else {
        return Ok(());
    };
    let text = raw.to_string_lossy();
    let threads: usize = text
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| Failure::usage(format!("CARL_THREADS must be a positive integer, got `{text}`")))?;
    THREAD_POOL.call_once(|| {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    });
    Ok(())
}

/// Parses `args`, runs the selected command, and returns the process exit
/// code. All ordinary output goes to `out`; failures go to stderr.
pub fn run<I, S>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match config::Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    EXIT_OK
                }
                _ => {
                    eprint!("{e}");
                    EXIT_USAGE
                }
            };
        }
    };
    match dispatch(cli, out) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn dispatch(cli: config::Cli, out: &mut dyn Write) -> CliResult<()> {
    init_threads()?;
    match config::resolve(cli)? {
        config::ResolvedCommand::Eigen(cfg) => commands::eigen::run(&cfg, out),
        config::ResolvedCommand::Evolve(cfg) => commands::evolve::run(&cfg, out),
        config::ResolvedCommand::Sweep(cfg) => commands::sweep::run(&cfg, out),
        config::ResolvedCommand::Map(cfg) => commands::map::run(&cfg, out),
        config::ResolvedCommand::Validate(cfg) => commands::validate::run(&cfg, out),
    }
}
