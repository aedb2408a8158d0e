use std::path::PathBuf;

use crate::itemset::ItemSet;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("bidder {bidder} does not exist (auction has {n} bidders)")]
    InvalidBidder { bidder: usize, n: usize },

    #[error("bidder {bidder} submitted illegal bid {bid}")]
    IllegalBid { bidder: usize, bid: ItemSet },

    #[error("auction did not terminate within {max_rounds} rounds")]
    RoundLimit { max_rounds: u32 },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("selection probability must be positive, got {0}")]
    NonPositiveProbability(f64),

    #[error("search budget exhausted before the first iteration completed")]
    BudgetTooSmall,

    #[error("cannot search from a terminal state")]
    TerminalRoot,

    #[error("strategy {strategy} failed: {reason}")]
    Strategy { strategy: String, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json { path: path.into(), source }
    }
}
