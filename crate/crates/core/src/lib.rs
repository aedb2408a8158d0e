//! Simultaneous ascending auctions (SAA) with budgets, exposure-aware
//! bidding agents, and an empirical-game evaluation harness.

pub mod auction;
pub mod bandit;
pub mod determinize;
pub mod error;
pub mod harness;
pub mod itemset;
pub mod prediction;
pub mod rng;
pub mod search;
pub mod valuation;

pub use auction::{AuctionState, GameConfig, Observation, Outcome, Strategy};
pub use error::{Error, Result};
pub use itemset::ItemSet;
pub use valuation::{BidderType, TypeDistribution, ValueFunction};
