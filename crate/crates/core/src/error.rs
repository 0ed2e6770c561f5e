use thiserror::Error;

/// Errors raised by problem construction, the dual machinery, the solver and
/// the verification layer.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: String,
        expected: usize,
        found: usize,
    },

    #[error("matrix {name} is not symmetric (relative asymmetry {asymmetry:.3e})")]
    Asymmetric { name: String, asymmetry: f64 },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: String, reason: String },

    /// A point lies outside the domain of V (primal side) or V* (dual side).
    #[error("point outside domain: {0}")]
    Domain(String),

    /// The supplied dual point is not the canonical image of the primal point.
    #[error("dual point is not the canonical image of x (residual {residual:.3e})")]
    Consistency { residual: f64 },

    /// G(ς) is singular and F(ς) is not in its column space.
    #[error("G(sigma) is singular and F(sigma) is outside its column space (residual {residual:.3e})")]
    SingularG { residual: f64 },

    #[error("Hessian is singular: {0}")]
    SingularHessian(String),

    #[error("spectrum has an eigenvalue within tolerance of zero ({eigenvalue:.3e})")]
    DegenerateSpectrum { eigenvalue: f64 },

    #[error("every probe sample fell outside the domain")]
    AllInfeasible,

    #[error("grid minimizer lies on the box boundary; enlarge the box")]
    BoxTooCoarse,

    #[error("no critical point of the canonical dual was found")]
    NoCriticalPoint,

    #[error("invalid search configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_len(what: &str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch {
            what: what.to_string(),
            expected,
            found,
        });
    }
    Ok(())
}
