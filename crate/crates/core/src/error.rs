use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("degenerate polynomial")]
    DegeneratePolynomial,
    #[error("invalid utility")]
    InvalidUtility,
    #[error("share fixed point did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("FOC singularity (J_phi or K_k vanishes)")]
    FocSingularity,
    #[error("no root in range")]
    NoRootInRange,
    #[error("newton diverged: {0}")]
    NewtonDiverged(String),
    #[error("closed forms need zero cross-side externalities")]
    CrossExternalities,
    #[error("vanishing denominator")]
    VanishingDenominator,
    #[error("missing argument: {0}")]
    MissingArgument(&'static str),
    #[error("threshold undefined here: {0}")]
    ThresholdUndefined(String),
}

pub type Result<T> = std::result::Result<T, Error>;
