use thiserror::Error;

/// Errors raised by the projection-geometry toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (residual {residual:.3e})")]
    NotHermitian { residual: f64 },
    #[error("matrix is not skew-Hermitian (residual {residual:.3e})")]
    NotSkewHermitian { residual: f64 },
    #[error("matrix is not unitary (residual {residual:.3e})")]
    NotUnitary { residual: f64 },
    #[error("singular input: smallest singular value {smallest:.3e} is below cutoff {cutoff:.3e}")]
    SingularInput { smallest: f64, cutoff: f64 },
    #[error("principal logarithm undefined: eigenvalue at distance {distance:.3e} from -1")]
    BranchCut { distance: f64 },
    #[error("rho must be at least 1, got {0}")]
    BadRho(f64),
    #[error("not a projection: hermiticity residual {hermiticity:.3e}, idempotency residual {idempotency:.3e}")]
    NotProjection { hermiticity: f64, idempotency: f64 },
    #[error("columns are rank deficient (smallest singular value {smallest:.3e})")]
    RankDeficient { smallest: f64 },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("the pair has no generic part")]
    NoGenericPart,
    #[error("no geodesic: rank(p∧q⊥) = {rank_10} but rank(p⊥∧q) = {rank_01}")]
    NoGeodesic { rank_10: usize, rank_01: usize },
    #[error("rank mismatch: {source_rank} vs {target_rank}")]
    RankMismatch {
        source_rank: usize,
        target_rank: usize,
    },
    #[error("matrix is not a member of the algebra (off-block residual {residual:.3e})")]
    NotMember { residual: f64 },
    #[error("invalid algebra: {0}")]
    BadAlgebra(String),
    #[error("trace {0} is not attainable by a projection in this algebra")]
    BadTrace(String),
    #[error("invariant violated: {what} (measured {measured}, expected {expected})")]
    InvariantViolation {
        what: String,
        measured: f64,
        expected: f64,
    },
    #[error("not a unital *-subalgebra: {0}")]
    NotSubalgebra(String),
    #[error("expectations too far apart: ‖e0 − e1‖ = {distance:.6} is not below 1")]
    TooFar { distance: f64 },
    #[error("a curve needs at least two points, got {0}")]
    TooFewPoints(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("internal consistency failure: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
