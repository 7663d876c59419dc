use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("cube dimension {0} exceeds the supported maximum of 63")]
    DimensionTooLarge(usize),

    #[error("degenerate request: {0}")]
    Degenerate(String),

    #[error("vertices are not comparable: {0} and {1}")]
    NotComparable(String, String),

    #[error("{0} does not divide the group order {1}")]
    BadSubgroupIndex(usize, usize),

    #[error("vertex {0} is not fixed by the subgroup")]
    NotFixed(String),

    #[error("invalid permutation: {0}")]
    BadPermutation(String),

    #[error("correspondence mismatch: {0}")]
    CorrespondenceMismatch(String),

    #[error("invalid functor: {0}")]
    InvalidFunctor(String),

    #[error("invalid action: {0}")]
    InvalidAction(String),

    #[error("invalid flow category: {0}")]
    InvalidFlowCategory(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("not a chain complex: {0}")]
    NotAComplex(String),

    #[error("integer overflow in exact arithmetic")]
    Overflow,

    #[error("periodicity check failed: {0}")]
    Periodicity(String),

    #[error("jmax {jmax} exceeds resolution length {length}")]
    ResolutionTooShort { jmax: usize, length: usize },

    #[error("no sign assignment: {0}")]
    NoSignAssignment(String),

    #[error("json: {0}")]
    Json(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_errors_convert() {
        let e: Error = serde_json::from_str::<u8>("x").unwrap_err().into();
        assert!(matches!(e, Error::Json(_)));
        assert_eq!(Error::BadSubgroupIndex(4, 6).to_string(), "4 does not divide the group order 6");
    }
}
