use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parts are not non-increasing at index {index}")]
    NotSorted { index: usize },
    #[error("sum(parts) + rho = {lhs} differs from len(parts) = {len}")]
    SumMismatch { lhs: i64, len: usize },
    #[error("negative part {value} at index {index}")]
    NegativePart { index: usize, value: i64 },
    #[error("rho must be positive")]
    ZeroRho,
    #[error("sigma^2 is zero")]
    ZeroSigma,
    #[error("infeasible degree sequence: {0}")]
    Infeasible(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("path is not a bridge from rho to 0")]
    NotABridge,
    #[error("path is not a first-passage excursion")]
    NotExcursion,
    #[error("index {index} out of range 0..={max}")]
    OutOfRange { index: usize, max: usize },
    #[error("bridge lengths do not match cycle lengths")]
    LengthMismatch,
    #[error("no exact sampler for this law")]
    UnsupportedLaw,
    #[error("rejection sampler exceeded {0} retries")]
    RetryLimit(u64),
    #[error("labelling is not good: {0}")]
    NotGoodLabelling(String),
    #[error("map is not bipartite")]
    NotBipartite,
    #[error("invalid map: {0}")]
    InvalidMap(String),
    #[error("space too large: {size} > {limit}")]
    SizeLimit { size: usize, limit: usize },
    #[error("not a pseudo-metric: {0}")]
    NotPseudoMetric(String),
    #[error("empty sample")]
    Empty,
    #[error("parse error: {0}")]
    Parse(String),
    #[error("round trip mismatch: {0}")]
    MismatchFound(String),
}
