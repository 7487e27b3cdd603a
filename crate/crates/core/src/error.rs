use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("index {index} out of range for length {length}")]
    IndexOutOfRange { index: usize, length: usize },
    #[error("constraint on {indices:?} contradicts earlier knowledge")]
    Contradiction { indices: alloc::vec::Vec<usize> },
    #[error("constraint of arity {0} cannot be represented pairwise")]
    UnsupportedArity(usize),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("key bits disagree with the attached knowledge")]
    InconsistentKey,
    #[error("measurement outcome has no announced detection")]
    MissingAnnouncement,
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("no shift in the low range places a known bit at index {index}")]
    NoQualifyingShift { index: usize },
    #[error("substring source ran dry after {produced} substrings")]
    SourceExhausted { produced: usize },
    #[error("attack did not finish within {queries} queries")]
    NonTermination { queries: usize },
}
