use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid path parameter `{field}`: {value} (must be strictly positive)")]
    NonPositive { field: &'static str, value: f64 },

    #[error("receiver window must be at least 2 packets, got {0}")]
    ReceiverWindow(u32),

    #[error("drop probability must lie strictly between 0 and 1, got {0}")]
    Probability(f64),

    #[error("degenerate: distribution undefined at p=0")]
    ZeroDropProbability,

    #[error("path is saturated (r = {ratio:.3} < 1); use the saturated linear law")]
    SaturatedPath { ratio: f64 },

    #[error("path is not saturated (r = {ratio:.3} >= 1); use the unsaturated linear law")]
    UnsaturatedPath { ratio: f64 },

    #[error("saturated linear law side condition violated: {0}")]
    SideCondition(&'static str),

    #[error("degenerate window distribution: no probability mass at W = {0}")]
    DegenerateDistribution(u32),
}
