use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("novelty needs at least {needed} neighbours, population offers {available}")]
    UndersizedPopulation { needed: usize, available: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("parameter vector has {found} values, layer shapes need {expected}")]
    ParamCount { expected: usize, found: usize },
    #[error("unknown domain `{0}` (expected one of: convex, hashed, deceptive)")]
    UnknownDomain(String),
    #[error("invalid genome string `{0}`: expected 16 characters of '0'/'1'")]
    InvalidGenome(String),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least {needed} samples, got {found}")]
    TooFewSamples { needed: usize, found: usize },
}
