use std::fmt;

use thiserror::Error;

/// A right-hand side, a partial derivative, or a jet operation was evaluated
/// outside its domain (division by zero, square root of a nonpositive value).
#[derive(Debug, Clone, PartialEq)]
pub struct DomainError {
    /// Tag naming the offending sub-expression, e.g. `"t^2 u - t"`.
    pub tag: String,
    /// Evaluation time, when known.
    pub t: Option<f64>,
    /// Evaluation state, when known.
    pub u: Vec<f64>,
}

impl DomainError {
    pub fn new(tag: impl Into<String>) -> Self {
        Self {
            tag: tag.into(),
            t: None,
            u: Vec::new(),
        }
    }

    /// Attach the evaluation point if none is recorded yet.
    pub fn at(mut self, t: f64, u: &[f64]) -> Self {
        if self.t.is_none() {
            self.t = Some(t);
            self.u = u.to_vec();
        }
        self
    }
}

impl fmt::Display for DomainError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "domain error in `{}`", self.tag)?;
        if let Some(t) = self.t {
            write!(f, " at t={t}, u={:?}", self.u)?;
        }
        Ok(())
    }
}

impl std::error::Error for DomainError {}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Domain(#[from] DomainError),

    #[error("stage {stage} of step {step}: {source}")]
    Stage {
        step: usize,
        stage: usize,
        #[source]
        source: DomainError,
    },

    #[error("{method} with N={n}: {source}")]
    Run {
        method: String,
        n: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("derivative provider: {0}")]
    Provider(String),

    #[error("unknown method `{id}`; valid ids: {valid}")]
    UnknownMethod { id: String, valid: String },

    #[error("unknown problem `{id}`; valid ids: {valid}")]
    UnknownProblem { id: String, valid: String },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
