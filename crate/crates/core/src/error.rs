use thiserror::Error;

/// Errors raised by the solvers. Numeric payloads are reported as `f64`
/// regardless of the scalar type used for the computation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{op}: argument outside the domain ({detail})")]
    Domain { op: &'static str, detail: String },

    #[error("characteristic escapes to infinity at t = {escape_time} (requested t = {requested})")]
    BlowUp { escape_time: f64, requested: f64 },

    #[error("{routine} did not converge; final bracket [{lo}, {hi}]")]
    NoConvergence { routine: &'static str, lo: f64, hi: f64 },

    #[error("{routine}: no sign change on [{lo}, {hi}] (f = {flo}, {fhi})")]
    NoSignChange { routine: &'static str, lo: f64, hi: f64, flo: f64, fhi: f64 },

    #[error("unresolved bracket on branch {branch}: {detail}")]
    UnresolvedBranch { branch: String, detail: String },

    #[error(
        "backward HJB scheme left the admissible band at t = {time} (value {value}); \
         use at least {recommended_steps} steps"
    )]
    Unstable { time: f64, value: f64, recommended_steps: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
