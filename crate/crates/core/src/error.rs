use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SsctError {
    /// An argument lies outside the domain of a function.
    #[error("domain error: {0}")]
    Domain(String),

    /// A detector configuration violates one of its invariants.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// A caller broke a documented precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    /// The exact recursion lost too much precision to be trusted.
    #[error(
        "numerical instability in the exact recursion at N = {failed_at} ({detail}); largest certified N = {certified}"
    )]
    Unstable { certified: usize, failed_at: usize, detail: String },

    /// Doubling the grid moved the result more than the tolerance.
    #[error("grid too coarse: {points} vs {refined} points differ by {drift:.3e} (tolerance {tolerance:.1e})")]
    GridRefinement { points: usize, refined: usize, drift: f64, tolerance: f64 },

    /// A stream ran out before the test reached a decision.
    #[error("stream exhausted after {0} samples without a decision")]
    StreamExhausted(usize),

    /// The non-truncated test hit its safety cap.
    #[error("sample cap of {0} reached without crossing a threshold")]
    SampleCap(usize),
}

pub type Result<T> = std::result::Result<T, SsctError>;
