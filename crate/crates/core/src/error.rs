use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors reported by validation gates and contract checks across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (defect {0:.3e})")]
    NotHermitian(f64),
    #[error("matrix is not positive semidefinite (minimum eigenvalue {0:.3e})")]
    NotPsd(f64),
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("not a valid density operator: {0}")]
    NotState(String),
    #[error("unsupported dimension {0}")]
    BadDim(usize),
    #[error("{1} does not divide {0}")]
    NotDivisor(usize, usize),
    #[error("rank {rank} out of range for dimension {dim}")]
    BadRank { rank: usize, dim: usize },
    #[error("not a probability distribution: {0}")]
    NotDistribution(String),
    #[error("state is not pure (largest eigenvalue {0})")]
    NotPure(f64),
    #[error("input arity mismatch: {0}")]
    ArityMismatch(String),
    #[error("not an orthogonal projector (defect {0:.3e})")]
    NotProjector(f64),
    #[error("bases are not mutually unbiased (defect {0:.3e})")]
    NotMub(f64),
    #[error("columns are not orthonormal (defect {0:.3e})")]
    NotBasis(f64),
    #[error("not a POVM: {0}")]
    NotPovm(String),
    #[error("bad family spec: {0}")]
    BadSpec(String),
    #[error("dimensions {0} and {1} are not coprime")]
    NotCoprime(usize, usize),
    #[error("side states are not mutually orthogonal (overlap {0:.3e})")]
    NotOrthogonal(f64),
    #[error("overlap product has nonreal part {0:.3e}")]
    RealityViolated(f64),
    #[error("relation {0} is not supported by this operation")]
    UnsupportedRelation(String),
    #[error("step size {0} out of range (need 0 < step <= 0.1)")]
    BadStep(f64),
    #[error("projector does not contain the state support (leakage {0:.3e})")]
    SupportNotContained(f64),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}
