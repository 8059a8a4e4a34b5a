//! Error types shared across the crate.

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("symmetric-function order {k} out of range for dimension {n}")]
    OrderOutOfRange { k: usize, n: usize },

    #[error("index {index} out of range for dimension {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("invalid quotient orders (k, l) = ({k}, {l}) for dimension {n}")]
    InvalidQuotientOrders { k: usize, l: usize, n: usize },

    #[error("sigma_{l} = {value:e} vanishes; Hessian quotient is singular")]
    SingularQuotient { l: usize, value: f64 },

    #[error("eigenvalues leave the Garding cone Gamma_{k} (margin {margin:e})")]
    NotAdmissible { k: usize, margin: f64 },

    #[error("non-spacelike configuration: |Du|^2_sigma = {grad_sq:e} >= u^2 = {u_sq:e}")]
    NonSpacelike { grad_sq: f64, u_sq: f64 },

    #[error("graph function must be positive, got u = {u:e}")]
    NonPositiveGraph { u: f64 },

    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("eigen tuple must have at least one finite entry")]
    InvalidEigenTuple,

    #[error("psi must be strictly positive, evaluated to {value:e}")]
    InvalidPsi { value: f64 },

    #[error("analytic theta-derivative is unavailable for tabulated psi")]
    UnsupportedDerivative,

    #[error("boundary data non-positive at node {node}: {value:e}")]
    InvalidBoundary { node: usize, value: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("residual undefined: {non_positive} non-positive, {non_spacelike} non-spacelike, {inadmissible} inadmissible node(s); first offenders {nodes:?}")]
    ResidualUndefined {
        non_positive: usize,
        non_spacelike: usize,
        inadmissible: usize,
        nodes: Vec<usize>,
    },

    #[error("Jacobian perturbation left the admissible set even after {halvings} step halvings")]
    JacobianPerturbation { halvings: usize },

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}
