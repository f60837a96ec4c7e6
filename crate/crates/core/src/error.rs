use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A parameter set violates one of its invariants.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// A thinning removes more than the standing volume.
    #[error(
        "infeasible thinning #{index} at age {age}: removes {removed} but only {standing} is standing"
    )]
    InfeasibleThinning {
        index: usize,
        age: f64,
        removed: f64,
        standing: f64,
    },

    /// A ratio whose denominator vanished.
    #[error("division guard: {0} is zero")]
    DivisionGuard(&'static str),

    /// The autoregression coefficient makes the closed forms singular.
    #[error("singular price process: rho = {0} (closed forms divide by ln rho)")]
    SingularParameter(f64),

    #[error("no break-even rotation in (0, {upper}] years")]
    NoBreakEven { upper: f64 },
}

pub(crate) fn require(cond: bool, name: &'static str, reason: impl Into<String>) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            reason: reason.into(),
        })
    }
}
