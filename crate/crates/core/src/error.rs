use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error(
        "Hilbert space dimension {dim} exceeds the cap of {cap}; \
         reduce the truncation levels (current {levels:?}) or raise the cap"
    )]
    DimensionTooLarge { dim: usize, cap: usize, levels: [usize; 4] },

    #[error("occupation {value} of subsystem {subsystem} is outside its {levels} levels")]
    OccupationOutOfRange { subsystem: usize, value: usize, levels: usize },

    #[error("flat index {index} is outside a space of dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("propagated columns do not include the logical state {0:?}")]
    MissingColumn([usize; 4]),

    #[error("non-finite amplitude at t = {time} ns (step {step})")]
    NonFinite { time: f64, step: usize },

    #[error("empty checkpoint sequence")]
    EmptySequence,

    #[error("gate reconstruction of block {block} is ill-conditioned")]
    IllConditioned { block: usize },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
