use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A field returned NaN or an infinity. `index` is the coordinate being
    /// perturbed, or the output component when no perturbation was involved.
    #[error("non-finite field value at index {index}")]
    NonFiniteField { index: usize },

    #[error("shape mismatch in {what}: expected {expected}, found {found}")]
    Shape {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("singular Hessian (condition estimate {condition:e})")]
    SingularHessian { condition: f64 },

    #[error("Newton iteration did not converge after {iterations} steps (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("precondition failed: {0}")]
    PreconditionFailed(String),

    #[error("invalid metric: {0}")]
    InvalidMetric(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unknown monitor channel `{0}`")]
    UnknownChannel(String),
}

impl Error {
    pub(crate) fn shape(what: &'static str, expected: usize, found: usize) -> Self {
        Error::Shape {
            what,
            expected,
            found,
        }
    }
}

pub(crate) fn ensure_len(what: &'static str, v: &[f64], expected: usize) -> Result<()> {
    if v.len() == expected {
        Ok(())
    } else {
        Err(Error::shape(what, expected, v.len()))
    }
}
