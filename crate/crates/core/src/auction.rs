//! The auction engine: state, legal bids, round transitions and outcomes.
//!
//! Prices are kept in integer ticks of the bid increment, so price
//! arithmetic is exact; money values are `ticks as f64 * epsilon`.
//! Every round, each bidder may bid `P_j + ε` on items it is not currently
//! winning, subject to its eligibility and budget. An item receiving bids
//! goes up one tick and its temporary winner is drawn uniformly among the
//! new bidders. A round without any bid closes the auction.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::itemset::{ItemSet, MAX_ITEMS};
use crate::valuation::{BidderType, ValueFunction};

pub type BidderId = usize;

/// Largest bidder count the engine supports (winners are stored as `u8`).
pub const MAX_BIDDERS: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameConfig {
    pub n: usize,
    pub m: usize,
    pub epsilon: f64,
    /// Safety cap on rounds; defaults to the analytic termination bound.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_rounds: Option<u32>,
}

impl GameConfig {
    pub fn new(n: usize, m: usize, epsilon: f64) -> Result<Self> {
        let cfg = GameConfig { n, m, epsilon, max_rounds: None };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 || self.n > MAX_BIDDERS {
            return Err(Error::Parameter(format!("bidder count must be in 2..={MAX_BIDDERS}, got {}", self.n)));
        }
        if self.m < 1 || self.m > MAX_ITEMS {
            return Err(Error::Parameter(format!("item count must be in 1..={MAX_ITEMS}, got {}", self.m)));
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::Parameter(format!("bid increment must be positive, got {}", self.epsilon)));
        }
        Ok(())
    }

    /// `1 + ⌈Σ b_i / ε⌉`, or the configured cap when set.
    pub fn round_cap(&self, budgets: &[f64]) -> u32 {
        if let Some(cap) = self.max_rounds {
            return cap;
        }
        let total: f64 = budgets.iter().map(|b| b.max(0.0)).sum();
        let ticks = (total / self.epsilon).ceil();
        if ticks.is_finite() && ticks < (u32::MAX - 1) as f64 {
            1 + ticks as u32
        } else {
            u32::MAX
        }
    }

    #[inline]
    pub fn money(&self, ticks: u64) -> f64 {
        ticks as f64 * self.epsilon
    }

    pub fn all_items(&self) -> ItemSet {
        ItemSet::full(self.m)
    }
}

/// Public state of the auction, disclosed to every bidder after each round.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AuctionState {
    pub round: u32,
    /// Standing price of each item, in ticks of ε.
    pub prices: Vec<u32>,
    pub temp_winner: Vec<Option<u8>>,
    pub eligibility: Vec<u8>,
    pub terminal: bool,
    pub last_round_had_bids: bool,
}

/// Identity of a public state for tree transpositions: prices, temporary
/// winners, eligibilities and whether the auction is closed.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateKey(Box<[u8]>);

impl AuctionState {
    pub fn initial(config: &GameConfig) -> Self {
        AuctionState {
            round: 0,
            prices: vec![0; config.m],
            temp_winner: vec![None; config.m],
            eligibility: vec![config.m as u8; config.n],
            terminal: false,
            last_round_had_bids: false,
        }
    }

    pub fn m(&self) -> usize {
        self.prices.len()
    }

    pub fn n(&self) -> usize {
        self.eligibility.len()
    }

    /// Items the bidder is temporarily winning.
    pub fn held(&self, bidder: BidderId) -> ItemSet {
        let b = bidder as u8;
        self.temp_winner
            .iter()
            .enumerate()
            .filter(|(_, w)| **w == Some(b))
            .fold(ItemSet::EMPTY, |acc, (j, _)| acc.with(j))
    }

    /// Held set of every bidder in one pass.
    pub fn holdings(&self) -> Vec<ItemSet> {
        let mut held = vec![ItemSet::EMPTY; self.n()];
        for (j, w) in self.temp_winner.iter().enumerate() {
            if let Some(w) = w {
                held[*w as usize] = held[*w as usize].with(j);
            }
        }
        held
    }

    /// `Σ_{j∈set} P_j` in ticks.
    #[inline]
    pub fn price_ticks(&self, set: ItemSet) -> u64 {
        set.items().map(|j| self.prices[j] as u64).sum()
    }

    /// Committed spend of a bidder in ticks.
    pub fn committed_ticks(&self, bidder: BidderId) -> u64 {
        self.price_ticks(self.held(bidder))
    }

    pub fn prices_money(&self, epsilon: f64) -> Vec<f64> {
        self.prices.iter().map(|&t| t as f64 * epsilon).collect()
    }

    pub fn key(&self) -> StateKey {
        let m = self.m();
        let mut buf = Vec::with_capacity(4 * m + m + self.n() + 1);
        for p in &self.prices {
            buf.extend_from_slice(&p.to_le_bytes());
        }
        buf.extend(self.temp_winner.iter().map(|w| w.map_or(u8::MAX, |b| b)));
        buf.extend_from_slice(&self.eligibility);
        buf.push(self.terminal as u8);
        StateKey(buf.into_boxed_slice())
    }
}

/// Legality of one candidate bid, given the bidder's held set.
#[inline]
pub fn is_legal_bid(config: &GameConfig, state: &AuctionState, bidder: BidderId, held: ItemSet, budget: f64, bid: ItemSet) -> bool {
    if bid.is_empty() {
        return true;
    }
    if !bid.is_disjoint(held) || !bid.is_subset(config.all_items()) {
        return false;
    }
    if bid.len() + held.len() > state.eligibility[bidder] as usize {
        return false;
    }
    let ticks = state.price_ticks(bid) + bid.len() as u64 + state.price_ticks(held);
    config.money(ticks) <= budget
}

fn check_bidder(state: &AuctionState, bidder: BidderId) -> Result<()> {
    if bidder >= state.n() {
        return Err(Error::InvalidBidder { bidder, n: state.n() });
    }
    Ok(())
}

/// Every bid the bidder may legally submit, in increasing mask order
/// (so the empty bid comes first).
pub fn legal_actions(config: &GameConfig, state: &AuctionState, bidder: BidderId, budget: f64) -> Result<Vec<ItemSet>> {
    check_bidder(state, bidder)?;
    let held = state.held(bidder);
    let free = config.all_items().difference(held);
    Ok(free
        .subsets()
        .filter(|&x| is_legal_bid(config, state, bidder, held, budget, x))
        .collect())
}

/// Validates a joint bid and advances one round.
pub fn apply_round<R: Rng + ?Sized>(
    config: &GameConfig,
    state: &AuctionState,
    joint_bids: &[ItemSet],
    budgets: &[f64],
    rng: &mut R,
) -> Result<AuctionState> {
    if joint_bids.len() != state.n() || budgets.len() != state.n() {
        return Err(Error::Parameter(format!(
            "expected {} bids and budgets, got {} and {}",
            state.n(),
            joint_bids.len(),
            budgets.len()
        )));
    }
    if state.terminal {
        return Err(Error::Parameter("auction is already closed".into()));
    }
    let holdings = state.holdings();
    for (i, &bid) in joint_bids.iter().enumerate() {
        if !is_legal_bid(config, state, i, holdings[i], budgets[i], bid) {
            return Err(Error::IllegalBid { bidder: i, bid });
        }
    }
    Ok(advance(state, joint_bids, &holdings, rng))
}

/// Round transition without legality checks. `holdings` are the held sets
/// at the start of the round.
pub(crate) fn advance<R: Rng + ?Sized>(state: &AuctionState, joint_bids: &[ItemSet], holdings: &[ItemSet], rng: &mut R) -> AuctionState {
    let mut next = state.clone();
    if joint_bids.iter().all(|b| b.is_empty()) {
        next.terminal = true;
        next.last_round_had_bids = false;
        return next;
    }
    let mut bidders_on = [0u8; MAX_BIDDERS];
    for j in 0..state.m() {
        let mut k = 0;
        for (i, bid) in joint_bids.iter().enumerate() {
            if bid.contains(j) {
                bidders_on[k] = i as u8;
                k += 1;
            }
        }
        if k > 0 {
            next.prices[j] += 1;
            let winner = if k == 1 { bidders_on[0] } else { bidders_on[rng.gen_range(0..k)] };
            next.temp_winner[j] = Some(winner);
        }
    }
    for (i, bid) in joint_bids.iter().enumerate() {
        let participation = (bid.len() + holdings[i].len()) as u8;
        next.eligibility[i] = next.eligibility[i].min(participation);
    }
    next.round += 1;
    next.last_round_had_bids = true;
    next
}

/// Quasi-linear utility `v(X) - Σ_{j∈X} P_j`, with money prices.
pub fn utility(values: &ValueFunction, bundle: ItemSet, prices: &[f64]) -> f64 {
    values.value(bundle) - bundle.items().map(|j| prices[j]).sum::<f64>()
}

/// Risk-averse transform: losses are scaled by `1 + α`.
#[inline]
pub fn risk_averse_utility(sigma: f64, alpha: f64) -> f64 {
    if sigma < 0.0 {
        (1.0 + alpha) * sigma
    } else {
        sigma
    }
}

/// Result of a finished auction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub final_prices: Vec<f64>,
    pub allocation: Vec<ItemSet>,
    pub utilities: Vec<f64>,
    /// Money paid by each bidder for its allocation.
    pub spend: Vec<f64>,
    /// Rounds played, including the closing round.
    pub rounds: u32,
}

impl Outcome {
    /// Allocation and quasi-linear utilities of the standing state.
    pub fn from_state(config: &GameConfig, state: &AuctionState, types: &[BidderType]) -> Self {
        let allocation = state.holdings();
        let final_prices = state.prices_money(config.epsilon);
        let spend: Vec<f64> = allocation.iter().map(|&x| config.money(state.price_ticks(x))).collect();
        let utilities = allocation
            .iter()
            .zip(types)
            .zip(&spend)
            .map(|((&x, t), &s)| t.values.value(x) - s)
            .collect();
        Outcome { final_prices, allocation, utilities, spend, rounds: state.round + state.terminal as u32 }
    }
}

/// What a bidder learns after a round closes: the standing state before it
/// and the bids every bidder submitted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub prices_before: Vec<u32>,
    pub held_before: Vec<ItemSet>,
    pub bids: Vec<ItemSet>,
}

/// Everything a strategy may look at when choosing its bid.
pub struct Observation<'a> {
    pub config: &'a GameConfig,
    pub state: &'a AuctionState,
    pub bidder: BidderId,
    pub own_type: &'a BidderType,
    pub history: &'a [RoundRecord],
}

pub trait Strategy: Send {
    fn name(&self) -> &str;

    fn bid(&mut self, obs: &Observation<'_>) -> Result<ItemSet>;
}

impl<S: Strategy + ?Sized> Strategy for Box<S> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn bid(&mut self, obs: &Observation<'_>) -> Result<ItemSet> {
        (**self).bid(obs)
    }
}

/// Full trajectory of an auction: one state per round boundary.
#[derive(Clone, Debug, Default)]
pub struct Trace {
    pub states: Vec<AuctionState>,
    pub rounds: Vec<RoundRecord>,
}

/// Runs rounds until the auction closes. Bids are collected from every
/// strategy before any is applied; tie-breaks use `rng` only.
pub fn play_out<S: Strategy, R: Rng + ?Sized>(
    config: &GameConfig,
    types: &[BidderType],
    strategies: &mut [S],
    rng: &mut R,
) -> Result<Outcome> {
    play_out_traced(config, types, strategies, rng).map(|(o, _)| o)
}

pub fn play_out_traced<S: Strategy, R: Rng + ?Sized>(
    config: &GameConfig,
    types: &[BidderType],
    strategies: &mut [S],
    rng: &mut R,
) -> Result<(Outcome, Trace)> {
    config.validate()?;
    if types.len() != config.n || strategies.len() != config.n {
        return Err(Error::Parameter(format!(
            "need {} types and strategies, got {} and {}",
            config.n,
            types.len(),
            strategies.len()
        )));
    }
    let budgets: Vec<f64> = types.iter().map(|t| t.budget).collect();
    let cap = config.round_cap(&budgets);
    let mut state = AuctionState::initial(config);
    let mut trace = Trace { states: vec![state.clone()], rounds: Vec::new() };
    while !state.terminal {
        if state.round >= cap {
            return Err(Error::RoundLimit { max_rounds: cap });
        }
        let mut bids = Vec::with_capacity(config.n);
        for (i, strategy) in strategies.iter_mut().enumerate() {
            let obs = Observation { config, state: &state, bidder: i, own_type: &types[i], history: &trace.rounds };
            bids.push(strategy.bid(&obs)?);
        }
        let next = apply_round(config, &state, &bids, &budgets, rng)?;
        trace.rounds.push(RoundRecord { prices_before: state.prices.clone(), held_before: state.holdings(), bids });
        state = next;
        trace.states.push(state.clone());
    }
    Ok((Outcome::from_state(config, &state, types), trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn cfg(n: usize, m: usize) -> GameConfig {
        GameConfig::new(n, m, 1.0).unwrap()
    }

    struct Fixed(Vec<ItemSet>);

    impl Strategy for Fixed {
        fn name(&self) -> &str {
            "fixed"
        }
        fn bid(&mut self, obs: &Observation<'_>) -> Result<ItemSet> {
            let r = obs.state.round as usize;
            Ok(self.0.get(r).copied().unwrap_or_default())
        }
    }

    #[test]
    fn unconstrained_bidder_may_bid_on_every_subset() {
        let c = cfg(2, 4);
        let s = AuctionState::initial(&c);
        assert_eq!(legal_actions(&c, &s, 0, 4.0).unwrap().len(), 16);
    }

    #[test]
    fn bidder_winning_everything_can_only_pass() {
        let c = cfg(2, 3);
        let mut s = AuctionState::initial(&c);
        s.temp_winner = vec![Some(1); 3];
        s.prices = vec![1; 3];
        assert_eq!(legal_actions(&c, &s, 1, 100.0).unwrap(), vec![ItemSet::EMPTY]);
    }

    #[test]
    fn budget_one_allows_single_items() {
        let c = cfg(2, 3);
        let s = AuctionState::initial(&c);
        let got = legal_actions(&c, &s, 0, 1.0).unwrap();
        let want: Vec<_> = [0u32, 1, 2, 4].iter().map(|&m| ItemSet::from_mask(m)).collect();
        assert_eq!(got, want);
    }

    #[test]
    fn eligibility_and_held_prices_bind() {
        let c = cfg(2, 3);
        let mut s = AuctionState::initial(&c);
        s.prices = vec![3, 0, 0];
        s.temp_winner = vec![Some(0), None, None];
        s.eligibility = vec![2, 3];
        // Held item costs 3; one more item at price 1 fits a budget of 4,
        // two more would break eligibility.
        let got = legal_actions(&c, &s, 0, 4.0).unwrap();
        assert_eq!(got, vec![ItemSet::EMPTY, ItemSet::singleton(1), ItemSet::singleton(2)]);
        assert!(matches!(legal_actions(&c, &s, 5, 4.0), Err(Error::InvalidBidder { .. })));
    }

    #[test]
    fn empty_round_closes_the_auction() {
        let c = cfg(2, 2);
        let s = AuctionState::initial(&c);
        let mut rng = stream(0, &[]);
        let next = apply_round(&c, &s, &[ItemSet::EMPTY; 2], &[5.0, 5.0], &mut rng).unwrap();
        assert!(next.terminal);
        assert_eq!(next.prices, s.prices);
        assert_eq!(next.temp_winner, s.temp_winner);
        assert_eq!(next.eligibility, s.eligibility);
    }

    #[test]
    fn single_bid_raises_price_and_sets_winner() {
        let c = cfg(2, 2);
        let s = AuctionState::initial(&c);
        let mut rng = stream(0, &[]);
        let next = apply_round(&c, &s, &[ItemSet::singleton(1), ItemSet::EMPTY], &[5.0, 5.0], &mut rng).unwrap();
        assert_eq!(next.prices, vec![0, 1]);
        assert_eq!(next.temp_winner, vec![None, Some(0)]);
        assert_eq!(next.eligibility, vec![1, 0]);
        assert!(!next.terminal);
    }

    #[test]
    fn illegal_bid_names_the_bidder() {
        let c = cfg(2, 2);
        let s = AuctionState::initial(&c);
        let mut rng = stream(0, &[]);
        let err = apply_round(&c, &s, &[ItemSet::EMPTY, ItemSet::full(2)], &[5.0, 1.0], &mut rng).unwrap_err();
        assert!(matches!(err, Error::IllegalBid { bidder: 1, .. }));
    }

    #[test]
    fn tie_break_is_uniform() {
        let c = cfg(2, 2);
        let s = AuctionState::initial(&c);
        let mut rng = stream(11, &[]);
        let trials = 10_000;
        let mut zero_wins = 0;
        for _ in 0..trials {
            let next = apply_round(&c, &s, &[ItemSet::singleton(1); 2], &[5.0, 5.0], &mut rng).unwrap();
            if next.temp_winner[1] == Some(0) {
                zero_wins += 1;
            }
        }
        let freq = zero_wins as f64 / trials as f64;
        assert!((freq - 0.5).abs() <= 0.02, "{freq}");
    }

    #[test]
    fn utilities() {
        let v = ValueFunction::new(vec![0.0, 10.0, 3.0, 10.0]).unwrap();
        assert_eq!(utility(&v, ItemSet::EMPTY, &[1.0, 1.0]), 0.0);
        assert_eq!(utility(&v, ItemSet::singleton(0), &[4.0, 0.0]), 6.0);
        assert_eq!(utility(&v, ItemSet::singleton(1), &[0.0, 5.0]), -2.0);
        assert_eq!(risk_averse_utility(6.0, 0.8), 6.0);
        assert_eq!(risk_averse_utility(-2.0, 0.5), -3.0);
        assert_eq!(risk_averse_utility(0.0, 3.0), 0.0);
    }

    #[test]
    fn passive_bidders_close_after_one_round() {
        let c = cfg(3, 2);
        let types = vec![BidderType::new(ValueFunction::additive(&[3.0, 3.0]), 10.0); 3];
        let mut strategies: Vec<Box<dyn Strategy>> = (0..3).map(|_| Box::new(Fixed(vec![])) as Box<dyn Strategy>).collect();
        let out = play_out(&c, &types, &mut strategies, &mut stream(1, &[])).unwrap();
        assert_eq!(out.final_prices, vec![0.0, 0.0]);
        assert!(out.allocation.iter().all(|a| a.is_empty()));
        assert_eq!(out.utilities, vec![0.0; 3]);
        assert_eq!(out.rounds, 1);
    }

    #[test]
    fn round_cap_reports_non_termination() {
        let mut c = cfg(2, 2);
        c.max_rounds = Some(1);
        let types = vec![BidderType::new(ValueFunction::additive(&[3.0, 3.0]), 10.0); 2];
        let mut strategies: Vec<Box<dyn Strategy>> = vec![
            Box::new(Fixed(vec![ItemSet::singleton(0), ItemSet::EMPTY])),
            Box::new(Fixed(vec![])),
        ];
        let err = play_out(&c, &types, &mut strategies, &mut stream(1, &[])).unwrap_err();
        assert!(matches!(err, Error::RoundLimit { max_rounds: 1 }));
    }

    #[test]
    fn default_round_cap_is_the_termination_bound() {
        let c = cfg(2, 2);
        assert_eq!(c.round_cap(&[10.0, 5.5]), 1 + 16);
        assert!(GameConfig::new(1, 2, 1.0).is_err());
        assert!(GameConfig::new(2, 0, 1.0).is_err());
        assert!(GameConfig::new(2, 2, 0.0).is_err());
    }

    #[test]
    fn state_keys_ignore_round_number() {
        let c = cfg(2, 2);
        let a = AuctionState::initial(&c);
        let mut b = a.clone();
        b.round = 7;
        assert_eq!(a.key(), b.key());
        b.prices[0] = 1;
        assert_ne!(a.key(), b.key());
    }
}
