use thiserror::Error;

/// Every failure the library reports. Validation problems come first, numerical ones after.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("incidence matrix is not invertible (det = {det})")]
    NotInvertible { det: i128 },
    #[error("graph is not primitive: {0}")]
    NonPrimitive(String),
    #[error("spectral radius {rho} does not exceed 1")]
    NonExpanding { rho: f64 },
    #[error("spectral computation is ill-conditioned: {0}")]
    IllConditioned(String),
    #[error("word is not admissible at position {position}")]
    Inadmissible { position: usize },
    #[error("window [{lo}, {hi}] does not contain level {level}")]
    OutOfWindow { lo: i64, hi: i64, level: i64 },
    #[error("vector has a component outside the expanding subspace (residual {residual:e})")]
    NegativePowerOutsideEplus { residual: f64 },
    #[error("vector has a component outside the dual expanding subspace (residual {residual:e})")]
    NegativePowerOutsideEtplus { residual: f64 },
    #[error("vector length {got} does not match dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("orderings disagree: {0}")]
    OrderingMismatch(String),
    #[error("path is maximal: no successor exists")]
    MaxPathSignal,
    #[error("path is minimal: no predecessor exists")]
    MinPathSignal,
    #[error("flow left the sampled window after time {elapsed}")]
    HorizonExceeded { elapsed: f64 },
    #[error("refinement stalled at level {level}: {reason}")]
    RefinementStall { level: i64, reason: String },
    #[error("series diverges at step {step}: |u(n)| = {norm:e} exceeds the noise bound")]
    SeriesDiverges { step: usize, norm: f64 },
    #[error("observable is not defined on {0}")]
    Undefined(String),
    #[error("degenerate data: {0}")]
    Degenerate(String),
    #[error("cocycle degenerate: {0}")]
    CocycleDegenerate(String),
    #[error("Lyapunov exponents {index} and {next} are not separated: {detail}")]
    NoGap { index: usize, next: usize, detail: String },
    #[error("reference cylinder not revisited within {horizon} shifts")]
    NoReturns { horizon: i64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    /// True for errors caused by inputs rather than by numerical failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidGraph(_)
                | Error::NotInvertible { .. }
                | Error::NonPrimitive(_)
                | Error::NonExpanding { .. }
                | Error::Inadmissible { .. }
                | Error::OutOfWindow { .. }
                | Error::NegativePowerOutsideEplus { .. }
                | Error::NegativePowerOutsideEtplus { .. }
                | Error::DimensionMismatch { .. }
                | Error::OrderingMismatch(_)
                | Error::Undefined(_)
                | Error::NoGap { .. }
                | Error::InvalidArgument(_)
                | Error::Config(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
