use std::fmt;
use std::io;

/// Errors raised by the arithmetic models, scheme handling and benchmarks.
#[derive(Debug)]
pub enum Error {
    /// Operand widths or unit parameters that do not fit together.
    Config(String),
    /// A value does not fit in its declared width.
    OutOfRange { value: u64, width: u32 },
    /// Leading-one detection on a zero operand.
    NoLeadingOne,
    DivisionByZero,
    /// Dividend violates `dividend < 2^N * divisor` for a 2N/N divider.
    QuotientOverflow { dividend: u64, divisor: u64, n: u32 },
    /// Antilog shift past the output width.
    ShiftOverflow { k_total: u32, out_width: u32 },
    UnknownScheme(String),
    /// A scheme file or scheme value that breaks a structural invariant.
    InvalidScheme(String),
    /// A sampling plan that cannot be run on the requested unit.
    Plan(String),
    Pipeline(String),
    Image(String),
    Io(io::Error),
    Json(serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::OutOfRange { value, width } => {
                write!(f, "value {value} does not fit in {width} bits")
            }
            Error::NoLeadingOne => f.write_str("leading-one detection on a zero operand"),
            Error::DivisionByZero => f.write_str("division by zero"),
            Error::QuotientOverflow { dividend, divisor, n } => write!(
                f,
                "quotient overflow: dividend {dividend} >= 2^{n} * divisor {divisor}"
            ),
            Error::ShiftOverflow { k_total, out_width } => write!(
                f,
                "antilog shift by {k_total} overflows a {out_width}-bit result"
            ),
            Error::UnknownScheme(name) => write!(f, "unknown scheme `{name}`"),
            Error::InvalidScheme(msg) => write!(f, "invalid scheme: {msg}"),
            Error::Plan(msg) => write!(f, "sampling plan error: {msg}"),
            Error::Pipeline(msg) => write!(f, "pipeline error: {msg}"),
            Error::Image(msg) => write!(f, "image error: {msg}"),
            Error::Io(err) => write!(f, "i/o error: {err}"),
            Error::Json(err) => write!(f, "json error: {err}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(err) => Some(err),
            Error::Json(err) => Some(err),
            _ => None,
        }
    }
}

impl From<io::Error> for Error {
    fn from(err: io::Error) -> Self {
        Error::Io(err)
    }
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Json(err)
    }
}
