use crate::runtime::PartyId;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("value {value} outside the fixed-point range (|v| < {bound})")]
    MagnitudeOverflow { value: f64, bound: f64 },

    #[error("replicated shares disagree on component {component}")]
    ShareConsistency { component: usize },

    #[error("shape mismatch: expected {expected:?}, got {actual:?}")]
    ShapeMismatch { expected: Vec<usize>, actual: Vec<usize> },

    #[error("{0} requires a non-empty input")]
    EmptyInput(&'static str),

    #[error("invalid party id {0}")]
    InvalidParty(usize),

    #[error("party {party}: timed out waiting for a message from party {peer} (protocol-order error)")]
    ProtocolOrder { party: PartyId, peer: PartyId },

    #[error("party {party}: channel to party {peer} closed")]
    ChannelClosed { party: PartyId, peer: PartyId },

    #[error("party {party}: expected {expected} bytes from party {peer}, got {actual}")]
    MessageLength {
        party: PartyId,
        peer: PartyId,
        expected: usize,
        actual: usize,
    },

    #[error("party {party}: network error with party {peer}: {source}")]
    Network {
        party: PartyId,
        peer: PartyId,
        #[source]
        source: std::io::Error,
    },

    #[error("party {0} panicked")]
    PartyPanicked(usize),

    #[error("config error: {0}")]
    Config(String),

    #[error("sequence length {len} exceeds max_seq_len {max}")]
    SequenceTooLong { len: usize, max: usize },

    #[error("model error: {0}")]
    Model(String),
}
