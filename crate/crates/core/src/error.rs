//! Error type shared by every module of the crate.

use thiserror::Error;

use crate::symbolic::Word;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("symbol {symbol} outside alphabet of size {alphabet}")]
    SymbolOutOfRange { symbol: u8, alphabet: usize },

    #[error("query of length {requested} exceeds certified window {certified}")]
    DepthExceeded { requested: usize, certified: usize },

    #[error("subshift is empty")]
    EmptySubshift,

    #[error("window [{start}, {end}) is outside the available orbit segment")]
    HorizonExceeded { start: i64, end: i64 },

    #[error("no return to the section within {max_returns} base shifts")]
    NotHit { max_returns: usize },

    #[error("roof value {value} is not a multiple of delta = {delta}")]
    IncommensurableRoof { value: String, delta: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("no marker word found (max word length {max_word_len}, depth {depth}){}", .witness.as_ref().map(|w| format!("; periodic witness ({w})^inf")).unwrap_or_default())]
    NoMarkerFound {
        max_word_len: usize,
        depth: usize,
        witness: Option<Word>,
    },

    #[error("marker unavailable: {0}")]
    MarkerUnavailable(String),

    #[error("infeasible schedule: {0}")]
    InfeasibleSchedule(String),

    #[error("precondition failed: {0}")]
    PreconditionFailed(String),

    #[error("capacity exceeded: {atoms} atoms share class (k={k}, l={l}) but only {capacity} code words exist")]
    CapacityExceeded {
        k: u64,
        l: u64,
        atoms: usize,
        capacity: u128,
    },

    #[error("index {index} out of range for code of size {count}")]
    IndexOutOfRange { index: u128, count: u128 },

    #[error("word violates code constraints: {0}")]
    ConstraintViolated(String),

    #[error("no marking subwords found in name of length {0}")]
    NoMarkersFound(usize),

    #[error("word {0} is not admissible")]
    Inadmissible(Word),

    #[error("quadratic fields differ: sqrt({0}) vs sqrt({1})")]
    FieldMismatch(u32, u32),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("parse error: {0}")]
    Parse(String),
}
