use std::fmt;
use std::path::PathBuf;

/// Library-wide result type.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by table construction, distribution evaluation and the
/// constraint/study drivers.
#[derive(Debug)]
pub enum Error {
    /// A parameter violated its documented bound. The message names the bound.
    Domain(String),
    /// An index or divisor fell outside `1..=n`.
    IndexOutOfRange {
        index: u64,
        n: u64,
    },
    /// A table would exceed the in-memory budget.
    Resource {
        what: &'static str,
        required_bytes: u64,
        budget_bytes: u64,
    },
    /// Two inputs that must share a size (`n`, `limit`) do not.
    Mismatch(String),
    /// Reflection requires every perturbation to lie in `[-1/n, 1/n]`;
    /// the witness index and its value are reported.
    ReflectionHypothesis {
        index: u64,
        epsilon: f64,
        n: u64,
    },
    /// A value required to be prime is not.
    NotPrime(u64),
    /// A schedule was too short or not strictly increasing.
    Schedule(String),
    /// Family text did not parse; `position` is a byte offset into the input.
    Parse {
        position: usize,
        message: String,
    },
    /// The requested absolute tolerance needs a prime cutoff beyond the
    /// summation cap, so it cannot be certified.
    ToleranceUnachievable {
        s: f64,
        abs_tol: f64,
        cutoff_cap: u64,
        achievable: f64,
    },
    /// A cache file is malformed or fails its digest check.
    Cache {
        path: PathBuf,
        reason: String,
    },
    Io(std::io::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain(msg) => write!(f, "domain error: {msg}"),
            Error::IndexOutOfRange { index, n } => {
                write!(f, "index {index} out of range 1..={n}")
            }
            Error::Resource {
                what,
                required_bytes,
                budget_bytes,
            } => write!(
                f,
                "{what} needs {required_bytes} bytes, exceeding the {budget_bytes}-byte budget"
            ),
            Error::Mismatch(msg) => write!(f, "mismatched inputs: {msg}"),
            Error::ReflectionHypothesis { index, epsilon, n } => write!(
                f,
                "reflection hypothesis violated at i={index}: epsilon={epsilon} \
                 outside [-1/{n}, 1/{n}]"
            ),
            Error::NotPrime(v) => write!(f, "{v} is not prime"),
            Error::Schedule(msg) => write!(f, "bad schedule: {msg}"),
            Error::Parse { position, message } => {
                write!(f, "parse error at byte {position}: {message}")
            }
            Error::ToleranceUnachievable {
                s,
                abs_tol,
                cutoff_cap,
                achievable,
            } => write!(
                f,
                "abs_tol {abs_tol} at s={s} needs a prime cutoff beyond {cutoff_cap}; \
                 best certifiable bound is {achievable}"
            ),
            Error::Cache { path, reason } => {
                write!(f, "cache file {}: {reason}", path.display())
            }
            Error::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}
