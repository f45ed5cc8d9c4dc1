use thiserror::Error;

use crate::fock_space::Determinant;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("index error at line {line}: {message}")]
    Index { line: usize, message: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("{solver} did not converge after {iterations} iterations (last residual {residual:.3e})")]
    Convergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("intruder state {determinant}: zeroth-order denominator {denominator:.3e}")]
    IntruderState {
        determinant: String,
        denominator: f64,
    },

    #[error("reference coefficient |C0| = {c0:.3e} is below the dominance threshold {threshold:.3e}")]
    ReferenceDominance { c0: f64, threshold: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn intruder(det: &Determinant, denominator: f64) -> Self {
        Error::IntruderState {
            determinant: det.to_string(),
            denominator,
        }
    }
}
