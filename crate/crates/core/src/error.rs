use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid mesh: {0}")]
    Mesh(String),

    #[error("invalid profile: {0}")]
    Profile(String),

    #[error("coordinate {value} outside [{lo}, {hi}]")]
    Domain { value: f64, lo: f64, hi: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is singular to working precision (pivot {pivot})")]
    Singular { pivot: usize },

    #[error("matrix is not symmetric definite ({0}); use lu_solve instead")]
    Indefinite(String),

    #[error("eigenvalue iteration did not converge (stuck at index {index})")]
    NoConvergence { index: usize },

    #[error("indeterminate pencil: alpha and beta both vanish at index {index}")]
    IndeterminatePencil { index: usize },

    #[error("pressure elimination failed at alpha = {alpha}, {n_elements} elements: {source}")]
    PressureElimination {
        alpha: f64,
        n_elements: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("unknown {kind} `{name}` (known: {known})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        known: String,
    },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
