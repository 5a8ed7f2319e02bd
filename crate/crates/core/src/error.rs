use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// The integrand of the correction kernel has an `r^0` or `r^1` term, so
    /// the singular integral diverges at the origin.
    #[error("defect has a nonzero r^{power} coefficient ({coefficient:e}); kernel integral diverges at 0")]
    NonIntegrableDefect { power: usize, coefficient: f64 },

    #[error("w has a nonzero r^{power} coefficient ({coefficient:e}); w = r phi' cannot be inverted")]
    NonRecoverable { power: usize, coefficient: f64 },

    #[error("requested {requested} iterations, budget is {max}")]
    IterationBudgetExceeded { requested: usize, max: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("branches are indistinguishable (sup-norm difference {difference:e})")]
    AmbiguousClassification { difference: f64 },

    #[error("expected exactly two branches, found {count}")]
    NotTwoBranches { count: usize },

    #[error(
        "invalid bracket [{lo}, {hi}]: need >= 2 branches at lo (found {lo_count}) and none at hi (found {hi_count})"
    )]
    InvalidBracket {
        lo: f64,
        hi: f64,
        lo_count: usize,
        hi_count: usize,
    },

    #[error("integration blew up at r = {r} (|w| = {w:e})")]
    Overflow { r: f64, w: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
