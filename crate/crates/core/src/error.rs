use alloc::string::String;
use core::fmt;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A model parameter is outside its domain (N <= 1, h <= 0, non-finite values).
    InvalidParams(String),
    /// The similarity exponent lies outside the open band required by the operation.
    BandViolation {
        delta: f64,
        lower: f64,
        upper: f64,
        /// The inequality that failed, e.g. `"delta < 2"`.
        failed: String,
        context: &'static str,
    },
    /// An argument other than the model parameters is invalid.
    InvalidArgument(String),
    /// A series or quadrature did not converge within its budget.
    NonConvergence(String),
    /// No curvature bound was supplied and none could be probed.
    MissingCurvatureBound,
    /// A curve is sampled too coarsely for the requested box sizes.
    Undersampled { samples_per_box: f64, required: f64 },
    /// Too few box sizes survive the scale window.
    TooFewScales { usable: usize, required: usize },
    /// The fit window of the density estimator is too narrow.
    WindowTooNarrow(String),
    /// The explicit time stepper is unstable for the requested step.
    Unstable(String),
    /// A trajectory has too few snapshots for the requested diagnostic.
    InsufficientSnapshots { have: usize, need: usize },
}

impl Error {
    /// `true` for errors caused by invalid input, `false` for numerical failures.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParams(_)
                | Error::BandViolation { .. }
                | Error::InvalidArgument(_)
                | Error::MissingCurvatureBound
                | Error::Undersampled { .. }
                | Error::InsufficientSnapshots { .. }
                | Error::WindowTooNarrow(_)
        )
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParams(msg) => write!(f, "invalid chain parameters: {msg}"),
            Error::BandViolation {
                delta,
                lower,
                upper,
                failed,
                context,
            } => write!(
                f,
                "delta = {delta} violates {failed}: {context} requires {lower} < delta < {upper}"
            ),
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::NonConvergence(msg) => write!(f, "no convergence: {msg}"),
            Error::MissingCurvatureBound => {
                write!(f, "no curvature bound supplied and probing |u''| failed")
            }
            Error::Undersampled {
                samples_per_box,
                required,
            } => write!(
                f,
                "curve undersampled: {samples_per_box:.2} samples per smallest box, need {required}"
            ),
            Error::TooFewScales { usable, required } => {
                write!(f, "only {usable} usable box sizes, need at least {required}")
            }
            Error::WindowTooNarrow(msg) => write!(f, "fit window too narrow: {msg}"),
            Error::Unstable(msg) => write!(f, "unstable time stepping: {msg}"),
            Error::InsufficientSnapshots { have, need } => {
                write!(f, "trajectory has {have} snapshots, need at least {need}")
            }
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
