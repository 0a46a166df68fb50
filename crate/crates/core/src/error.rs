use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid halfspace specification: {0}")]
    InvalidSpec(String),

    #[error("degenerate shape: {0}")]
    Degenerate(String),

    #[error("point is not interior: minimum slack {slack:e}")]
    NotInterior { slack: f64 },

    #[error("origin is not contained in the polytope (minimum slack {slack:e})")]
    OriginOutside { slack: f64 },

    #[error(
        "combinatorial budget exceeded: {subsets} subsets > {budget}; \
         enable random spot-checking to test a sample of subsets instead"
    )]
    BudgetExceeded { subsets: u128, budget: u128 },

    #[error("measure is concentrated in a closed hemisphere")]
    Hemisphere,

    #[error(
        "general position required for p=0: every n-subset of atom directions must be \
         linearly independent (hypothesis of the discrete existence theorem for p=0)"
    )]
    GeneralPosition,

    #[error("parameter out of range: {0}")]
    Parameter(String),

    #[error("inner solver did not converge after {iterations} iterations (residual {residual:e})")]
    InnerNonConvergence {
        iterations: usize,
        residual: f64,
        trace: Vec<f64>,
    },

    #[error("retry budget exhausted: {0}")]
    RetriesExhausted(String),

    #[error("linear program failed: {0}")]
    Lp(String),

    #[error("nonpositive achieved mass {0:e}")]
    NonpositiveMass(f64),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
