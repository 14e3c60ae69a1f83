use alloc::string::String;

use crate::corpus::SentimentLabel;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dataset '{0}' is empty")]
    EmptyDataset(String),

    #[error("text has no non-whitespace characters")]
    BlankText,

    #[error("duplicate sentence id '{0}'")]
    DuplicateId(String),

    #[error("label '{label}' is not part of the {scheme} scheme")]
    LabelOutsideScheme { label: &'static str, scheme: &'static str },

    #[error("label schemes differ: {left} vs {right}")]
    SchemeMismatch { left: &'static str, right: &'static str },

    #[error("class {class} has {count} sentence(s), need at least {required}")]
    ClassTooSmall {
        class: SentimentLabel,
        count: usize,
        required: usize,
    },

    #[error("no usable sentences for class {0}")]
    UnsatisfiableClass(SentimentLabel),

    #[error("duplicate entry '{0}'")]
    DuplicateEntry(String),

    #[error("invalid value for {name}: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("empty trigram sequence")]
    EmptySequence,

    #[error("trigram id {id} out of range for vocabulary of size {size}")]
    IdOutOfRange { id: u32, size: usize },

    #[error("shape mismatch in parameter block '{0}'")]
    ShapeMismatch(&'static str),

    #[error("non-finite value in '{0}'")]
    NonFinite(&'static str),

    #[error("training diverged at epoch {epoch}, batch {batch}: loss is not finite")]
    Diverged { epoch: usize, batch: usize },

    #[error("empty batch")]
    EmptyBatch,

    #[error("invalid pair label {0}, expected -1 or 1")]
    InvalidPairLabel(i64),
}

impl Error {
    /// True for errors caused by numerical failure rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NonFinite(_) | Error::Diverged { .. })
    }

    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            name,
            reason: reason.into(),
        }
    }
}
