use core::fmt;

use crate::moments::Mode;
use crate::spectral::Regime;

pub type Result<T> = core::result::Result<T, Error>;

/// Errors shared by the whole engine.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A constructor or operation precondition was violated.
    InvalidParameter {
        name: &'static str,
        reason: &'static str,
    },
    /// Eigenvalue gap below tolerance; the eigenvector basis is too
    /// ill-conditioned to use. Callers should switch to the direct
    /// matrix-exponential propagator.
    DegenerateSpectrum { gap: f64 },
    /// An operation that needs an exponentially growing branch was invoked
    /// in a regime that has none.
    NoGrowingBranch { regime: Regime },
    /// Phase decomposition requested with no injected probe field.
    UndefinedPhase,
    /// The truncated coherent state would neglect more weight than allowed.
    TruncatedWeight { neglected: f64 },
    /// Probability reached the edge of the Fock-space box.
    CutoffInsufficient { mode: Mode, leakage: f64 },
    /// The cutoff ladder ran out of rungs before successive records agreed.
    LadderNotConverged { last_delta: f64 },
    /// The requested Fock space would exceed the dense-solver memory budget.
    ResourceBudget { required_bytes: u64 },
    /// The dense eigensolver ran out of sweeps before the spectrum deflated.
    IterationBudget,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter { name, reason } => {
                write!(f, "invalid parameter `{name}`: {reason}")
            }
            Error::DegenerateSpectrum { gap } => write!(
                f,
                "degenerate spectrum (eigenvalue gap {gap:.3e}); \
                 use the series propagator"
            ),
            Error::NoGrowingBranch { regime } => {
                write!(f, "no exponentially growing branch in {regime:?} regime")
            }
            Error::UndefinedPhase => {
                write!(f, "phase decomposition undefined for zero probe amplitude")
            }
            Error::TruncatedWeight { neglected } => write!(
                f,
                "initial coherent state loses weight {neglected:.3e} to truncation"
            ),
            Error::CutoffInsufficient { mode, leakage } => write!(
                f,
                "Fock cutoff saturated on mode {mode:?} (boundary probability {leakage:.3e})"
            ),
            Error::LadderNotConverged { last_delta } => write!(
                f,
                "cutoff ladder exhausted without convergence (last record delta {last_delta:.3e})"
            ),
            Error::ResourceBudget { required_bytes } => write!(
                f,
                "Fock space needs ~{required_bytes} bytes, over the dense-solver budget"
            ),
            Error::IterationBudget => {
                write!(f, "dense eigensolver exceeded its iteration budget")
            }
        }
    }
}

impl core::error::Error for Error {}
