use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// A moment-existence or parameter constraint is violated.
    #[error("constraint violated: {constraint} ({detail})")]
    Constraint {
        constraint: &'static str,
        detail: String,
    },

    #[error(
        "quadrature did not converge after {subdivisions} subdivisions \
         (estimate {value:e}, error estimate {error:e})"
    )]
    NonConvergence {
        subdivisions: usize,
        value: f64,
        error: f64,
    },

    #[error("integrand returned NaN at x = {0:e}")]
    NanIntegrand(f64),

    /// Cancellation in the binomial expansion leaves too few correct digits.
    #[error(
        "{what}: the binomial expansion cancels too strongly in double precision \
         (estimated relative rounding error {estimate:.1e}, limit {limit:.0e})"
    )]
    IllConditioned {
        what: &'static str,
        estimate: f64,
        limit: f64,
    },

    /// Conditional inversion in the sampler failed to reach the target.
    #[error("inversion failed: {0}")]
    Inversion(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("invalid configuration at `{path}`: {message}")]
    Config { path: String, message: String },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    /// True for failures of the numerical machinery rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonConvergence { .. }
                | Error::NanIntegrand(_)
                | Error::Inversion(_)
                | Error::IllConditioned { .. }
        )
    }
}
