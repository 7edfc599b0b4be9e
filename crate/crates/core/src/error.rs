use crate::types::Utilities;

/// Errors produced by the model, sampling, and bound machinery.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("ranking is empty")]
    EmptyRanking,
    #[error("item {0} appears more than once in ranking")]
    DuplicateItem(usize),
    #[error("item {0} is outside the universe")]
    ItemOutOfRange(usize),
    #[error("consideration set has fewer items than the ranking length")]
    ConsiderationSetTooSmall,
    #[error("observation {0} is missing a consideration set")]
    MissingConsiderationSet(usize),
    #[error("item {0} never appears in any consideration set")]
    ItemNeverConsidered(usize),
    #[error("gradient tolerance not reached within {iterations} iterations")]
    MaxIterationsExceeded {
        iterations: usize,
        /// Best utilities seen so far (lowest objective value).
        best: Utilities,
    },
    #[error("no consideration set of the required size has positive probability")]
    NormalizerZero,
    #[error("rejection sampling exceeded the attempt cap of {0}")]
    RejectionCapExceeded(usize),
    #[error("universe of {n} items exceeds the exact-enumeration limit of {limit}")]
    UniverseTooLargeForExact { n: usize, limit: usize },
    #[error("item {0} has non-positive utility; the binned estimator requires u > 0")]
    NonPositiveUtility(usize),
    #[error("target mass {c} is infeasible; need 0 < c <= {max}")]
    InfeasibleC { c: f64, max: f64 },
    #[error("alpha must be strictly greater than 1, got {0}")]
    AlphaNotGreaterThanOne(f64),
    #[error("discard probability bound is degenerate (q >= 1)")]
    BoundDegenerate,
    #[error("degenerate denominator in bound transfer")]
    DegenerateDenominator,
    #[error("cycle detected in flip graph")]
    CycleDetected,
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
