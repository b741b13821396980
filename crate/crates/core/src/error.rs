use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong in the library.
///
/// Variants are grouped so the CLI can map them onto exit codes: input
/// problems (`2`) versus numerical failures (`3`).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("format error{}: {msg}", line_suffix(*.line))]
    Format { line: Option<usize>, msg: String },

    #[error("weight error{}: weight {value} is not strictly positive and finite", line_suffix(*.line))]
    Weight { line: Option<usize>, value: f64 },

    #[error("index error{}: node {index} out of range for n = {n}", line_suffix(*.line))]
    Index {
        line: Option<usize>,
        index: i64,
        n: usize,
    },

    #[error("dimension error: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("connectivity error: lambda_2 = {lambda2:e} is not above zero tolerance {zero_tol:e}")]
    Connectivity { lambda2: f64, zero_tol: f64 },

    #[error("generation error: {0}")]
    Generation(String),

    #[error("scale error: {0}")]
    Scale(String),

    #[error("input error: {0}")]
    Input(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("numerical error: {msg}{}", iter_suffix(*.iterations))]
    Numerical {
        msg: String,
        iterations: Option<usize>,
    },

    #[error("solver error: {0}")]
    Solver(String),
}

fn line_suffix(line: Option<usize>) -> String {
    line.map(|l| format!(" at line {l}")).unwrap_or_default()
}

fn iter_suffix(iterations: Option<usize>) -> String {
    iterations
        .map(|i| format!(" after {i} iterations"))
        .unwrap_or_default()
}

impl Error {
    pub(crate) fn format(line: Option<usize>, msg: impl Into<String>) -> Self {
        Error::Format {
            line,
            msg: msg.into(),
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical {
            msg: msg.into(),
            iterations: None,
        }
    }

    /// True for failures of a numerical method, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Numerical { .. } | Error::Solver(_))
    }
}
