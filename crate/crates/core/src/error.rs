use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("row {state} of the transition matrix sums to {sum}, expected 1")]
    NonStochasticRow { state: String, sum: f64 },

    #[error("symbol {0:?} is never emitted")]
    UnusedSymbol(String),

    #[error("bad reference: {0}")]
    BadReference(String),

    #[error("negative probability {value} at {location}")]
    NegativeEntry { location: String, value: f64 },

    #[error("probability {value} at {location} exceeds 1")]
    EntryAboveOne { location: String, value: f64 },

    #[error("cannot parse model document: {0}")]
    Parse(String),

    #[error("unknown symbol {0:?}")]
    UnknownSymbol(String),

    #[error("model is not irreducible")]
    NotIrreducible,

    #[error("belief is the null distribution")]
    NullBelief,

    #[error("states {0} and {1} are not path-mergeable")]
    NotMergeable(usize, usize),

    #[error("topology is not path-mergeable")]
    NotPathMergeable,

    #[error("model is not flag-state: {0}")]
    NotFlagState(String),

    #[error("block length {n} shares a factor with the period {period}")]
    PeriodClash { n: usize, period: usize },

    #[error("enumeration budget of {cap} exceeded")]
    Budget { cap: usize },

    #[error("model is not unifilar: state {state} has several successors on symbol {symbol}")]
    NotUnifilar { state: String, symbol: String },

    #[error("need at least 3 points to fit a rate, got {0}")]
    InsufficientData(usize),

    #[error("distributions have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),

    #[error("total variation {0} exceeds 1/e")]
    EpsilonTooLarge(f64),

    #[error("flag search space has {0} assignments, above the cap")]
    SearchTooLarge(usize),

    #[error("state {0} has no outgoing edge")]
    DeadState(usize),

    #[error("drew {draws} topologies without reaching {target} irreducible ones")]
    RejectionBudgetExceeded { draws: u64, target: usize },

    #[error("{0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
