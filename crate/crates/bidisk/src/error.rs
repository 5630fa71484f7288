use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the library can report. The CLI maps these onto exit codes.
#[derive(Debug, Error, Clone)]
pub enum Error {
    #[error("support of degree ({dz},{dw}) does not fit in box ({n},{m})")]
    DegreeBox { dz: usize, dw: usize, n: usize, m: usize },
    #[error("degree {found} in the organizing variable exceeds the allowed {allowed}")]
    Degree { found: usize, allowed: usize },
    #[error("matrix polynomial has identically zero determinant")]
    SingularPencil,
    #[error("slice at z0 = {z0} vanishes identically")]
    DegenerateSlice { z0: Complex64 },
    #[error("polynomial is identically zero")]
    ZeroPolynomial,
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("series or integral diverges: {0}")]
    Divergence(String),
    #[error("not square integrable: {0}")]
    NonMember(String),
    #[error("membership could not be decided: {0}")]
    Inconclusive(String),
    #[error("rank deficiency: {0}")]
    RankDeficient(String),
    #[error("structural check failed: {0}")]
    Structural(String),
    #[error("alignment failed: {0}")]
    AlignmentFailed(String),
    #[error("polynomial is not in the symmetric case: {0}")]
    NotSymmetric(String),
    #[error("no factorization: {0}")]
    NoFactorization(String),
    #[error("trigonometric polynomial is not strictly positive on the torus (min {min:e} at z = {z:?}, w = {w:?})")]
    NotStrictlyPositive { min: f64, z: [f64; 2], w: [f64; 2] },
    #[error("common factor of degree {degree}")]
    CommonFactor { degree: usize },
    #[error("not a distinguished variety: {0}")]
    NotDistinguished(String),
    #[error("pole: {0}")]
    Pole(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("inconsistent data: {0}")]
    Inconsistent(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}
