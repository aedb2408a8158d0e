//! Simultaneous-move MCTS with EXP3 selection and risk-averse rewards.
//!
//! One engine serves every decider. It searches over a list of
//! determinizations (complete-information games): with a single entry it is
//! plain SMS; with several it draws one per iteration and restricts each
//! opponent to the arms its drawn budget allows (single-tree
//! determinization). The searching player's own type is the same in every
//! determinization, so it always uses plain EXP3.
//!
//! Nodes are keyed by the public state (prices, temporary winners,
//! eligibilities), so transpositions share statistics, and different
//! tie-break outcomes of one joint bid lead to different nodes.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::auction::{advance, is_legal_bid, risk_averse_utility, AuctionState, BidderId, GameConfig, StateKey};
use crate::bandit::{
    availability_tick, exp3_params, exp3_update, final_policy, gibbs_into, record_exploration, sample_index, subset_exp3_into,
    InfoSetStats,
};
use crate::error::{Error, Result};
use crate::itemset::ItemSet;
use crate::prediction::{rank_legal_bids, simulate_pp_auction};
use crate::rng::{stream, tag, SimRng};
use crate::valuation::BidderType;

/// A complete-information game seen by the searcher, with its closing-price
/// prediction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Determinization {
    pub types: Vec<BidderType>,
    pub p_star: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchParams {
    /// Risk aversion α of every simulated bidder.
    pub alpha: f64,
    /// Maximum arms expanded per information set.
    pub n_act: usize,
}

/// Iteration and/or wall-clock limit; the search stops at whichever comes
/// first.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchBudget {
    pub iterations: Option<u64>,
    pub time: Option<Duration>,
}

impl SearchBudget {
    pub fn iterations(n: u64) -> Self {
        SearchBudget { iterations: Some(n), time: None }
    }

    pub fn time(limit: Duration) -> Self {
        SearchBudget { iterations: None, time: Some(limit) }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations.is_none() && self.time.is_none() {
            return Err(Error::Parameter("search budget needs an iteration or time limit".into()));
        }
        Ok(())
    }

    /// The share of one of `parts` equal slices (at least one iteration).
    pub fn split(&self, parts: usize) -> Self {
        let parts = parts.max(1);
        SearchBudget {
            iterations: self.iterations.map(|n| (n / parts as u64).max(1)),
            time: self.time.map(|t| t / parts as u32),
        }
    }
}

/// Probability of each arm of the searching player's root decision.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixedStrategy {
    pub arms: Vec<ItemSet>,
    pub probs: Vec<f64>,
}

impl MixedStrategy {
    pub fn pure(arm: ItemSet) -> Self {
        MixedStrategy { arms: vec![arm], probs: vec![1.0] }
    }

    pub fn prob(&self, arm: ItemSet) -> f64 {
        self.arms.iter().position(|&a| a == arm).map_or(0.0, |i| self.probs[i])
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ItemSet {
        self.arms[sample_index(&self.probs, rng.gen())]
    }

    /// The most likely arm (first one on ties).
    pub fn mode(&self) -> ItemSet {
        let mut best = 0;
        for i in 1..self.probs.len() {
            if self.probs[i] > self.probs[best] {
                best = i;
            }
        }
        self.arms[best]
    }
}

/// Result of one search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub policy: MixedStrategy,
    /// The searching player's statistics at the root.
    pub root: InfoSetStats,
    pub iterations: u64,
    pub nodes: usize,
}

/// One bidder's move at one node of an iteration's path.
#[derive(Clone, Debug, PartialEq)]
pub struct PathStep {
    pub state: AuctionState,
    pub bids: Vec<ItemSet>,
}

/// Selected path of one iteration, recorded when tracing is on.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub profile: usize,
    pub steps: Vec<PathStep>,
    pub rewards: Vec<f64>,
}

struct Node {
    stats: Vec<InfoSetStats>,
    /// PP ranking of legal bids per `(bidder, determinization)`, filled on
    /// first use.
    ranked: Vec<Option<Box<[ItemSet]>>>,
    visits: u64,
}

/// Per-node statistics exported for debugging.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NodeDump {
    pub prices: Vec<u32>,
    pub temp_winner: Vec<Option<u8>>,
    pub eligibility: Vec<u8>,
    pub terminal: bool,
    pub visits: u64,
    pub bidders: Vec<InfoSetStats>,
}

/// A search tree and the streams driving it.
pub struct Search<'a> {
    config: &'a GameConfig,
    root: AuctionState,
    player: BidderId,
    dets: &'a [Determinization],
    params: SearchParams,
    root_arms: Option<Vec<ItemSet>>,
    nodes: Vec<Node>,
    index: HashMap<StateKey, usize>,
    states: Vec<AuctionState>,
    search_rng: SimRng,
    chance_rng: SimRng,
    rollout_rng: SimRng,
    profile_rng: SimRng,
    trace: Option<Vec<IterationRecord>>,
    iterations: u64,
    // scratch
    path: Vec<(usize, BidderId, usize, f64)>,
    legal: Vec<bool>,
    probs: Vec<f64>,
    scores: Vec<f64>,
}

impl<'a> Search<'a> {
    /// Prepares a search from `root` for `player`. With `root_arms`, the
    /// player's root arms are exactly those bids, expanded in the given
    /// order.
    pub fn new(
        config: &'a GameConfig,
        root: &AuctionState,
        player: BidderId,
        dets: &'a [Determinization],
        params: SearchParams,
        root_arms: Option<Vec<ItemSet>>,
        seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        if dets.is_empty() {
            return Err(Error::Parameter("search needs at least one determinization".into()));
        }
        if params.n_act == 0 {
            return Err(Error::Parameter("N_act must be at least 1".into()));
        }
        if player >= config.n {
            return Err(Error::InvalidBidder { bidder: player, n: config.n });
        }
        if root.terminal {
            return Err(Error::TerminalRoot);
        }
        for d in dets {
            if d.types.len() != config.n || d.p_star.len() != config.m {
                return Err(Error::Parameter("determinization does not match the game size".into()));
            }
        }
        if let Some(arms) = &root_arms {
            let budget = dets[0].types[player].budget;
            let held = root.held(player);
            if arms.is_empty() || arms.iter().any(|&a| !is_legal_bid(config, root, player, held, budget, a)) {
                return Err(Error::Parameter("pinned root arms must be non-empty and legal".into()));
            }
        }
        Ok(Search {
            config,
            root: root.clone(),
            player,
            dets,
            params,
            root_arms,
            nodes: Vec::new(),
            index: HashMap::new(),
            states: Vec::new(),
            search_rng: stream(seed, &[tag::SEARCH]),
            chance_rng: stream(seed, &[tag::CHANCE]),
            rollout_rng: stream(seed, &[tag::ROLLOUT]),
            profile_rng: stream(seed, &[tag::PROFILES]),
            trace: None,
            iterations: 0,
            path: Vec::new(),
            legal: Vec::new(),
            probs: Vec::new(),
            scores: Vec::new(),
        })
    }

    /// Records every iteration's path (for inspection in tests).
    pub fn with_trace(mut self) -> Self {
        self.trace = Some(Vec::new());
        self
    }

    pub fn trace(&self) -> &[IterationRecord] {
        self.trace.as_deref().unwrap_or(&[])
    }

    pub fn iterations(&self) -> u64 {
        self.iterations
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Statistics of every bidder at the node of `state`, if it exists.
    pub fn node_stats(&self, state: &AuctionState) -> Option<&[InfoSetStats]> {
        self.index.get(&state.key()).map(|&i| self.nodes[i].stats.as_slice())
    }

    /// Times the node of `state` was traversed.
    pub fn node_visits(&self, state: &AuctionState) -> u64 {
        self.index.get(&state.key()).map_or(0, |&i| self.nodes[i].visits)
    }

    /// Runs iterations until the budget is exhausted.
    pub fn run(&mut self, budget: &SearchBudget) -> Result<SearchResult> {
        budget.validate()?;
        let start = Instant::now();
        let mut done = 0u64;
        loop {
            if budget.iterations.is_some_and(|n| done >= n) {
                break;
            }
            if budget.time.is_some_and(|t| start.elapsed() >= t) {
                break;
            }
            self.iterate()?;
            done += 1;
        }
        if self.iterations == 0 {
            return Err(Error::BudgetTooSmall);
        }
        Ok(self.result())
    }

    /// Final mixed strategy and root statistics of the searching player.
    pub fn result(&self) -> SearchResult {
        let root = self.nodes[0].stats[self.player].clone();
        let probs = final_policy(&root);
        SearchResult {
            policy: MixedStrategy { arms: root.arms.iter().map(|a| a.arm).collect(), probs },
            root,
            iterations: self.iterations,
            nodes: self.nodes.len(),
        }
    }

    /// Every node's statistics, sorted by state key bytes.
    pub fn dump(&self) -> Vec<NodeDump> {
        let mut keyed: Vec<(&StateKey, usize)> = self.index.iter().map(|(k, &i)| (k, i)).collect();
        keyed.sort();
        keyed
            .into_iter()
            .map(|(_, i)| {
                let s = &self.states[i];
                NodeDump {
                    prices: s.prices.clone(),
                    temp_winner: s.temp_winner.clone(),
                    eligibility: s.eligibility.clone(),
                    terminal: s.terminal,
                    visits: self.nodes[i].visits,
                    bidders: self.nodes[i].stats.clone(),
                }
            })
            .collect()
    }

    fn node_for(&mut self, state: &AuctionState) -> (usize, bool) {
        let key = state.key();
        if let Some(&i) = self.index.get(&key) {
            return (i, false);
        }
        let i = self.nodes.len();
        self.nodes.push(Node {
            stats: vec![InfoSetStats::new(); self.config.n],
            ranked: vec![None; self.config.n * self.dets.len()],
            visits: 0,
        });
        self.states.push(state.clone());
        self.index.insert(key, i);
        (i, true)
    }

    /// Candidate arms of `bidder` at node `idx` under determinization `l`,
    /// best first.
    fn candidates(&mut self, idx: usize, state: &AuctionState, bidder: BidderId, l: usize) -> &[ItemSet] {
        let slot = bidder * self.dets.len() + l;
        if self.nodes[idx].ranked[slot].is_none() {
            let list: Box<[ItemSet]> = match (&self.root_arms, idx == 0 && bidder == self.player) {
                (Some(arms), true) => arms.clone().into_boxed_slice(),
                _ => {
                    let det = &self.dets[l];
                    let ty = &det.types[bidder];
                    rank_legal_bids(self.config, state, bidder, state.held(bidder), ty.values.values(), ty.budget, &det.p_star)
                        .into_iter()
                        .map(|r| r.bid)
                        .collect()
                }
            };
            self.nodes[idx].ranked[slot] = Some(list);
        }
        self.nodes[idx].ranked[slot].as_deref().unwrap()
    }

    fn cap(&self, idx: usize, bidder: BidderId) -> usize {
        match (&self.root_arms, idx == 0 && bidder == self.player) {
            (Some(arms), true) => arms.len(),
            _ => self.params.n_act,
        }
    }

    /// Next arm to expand, if capacity and an unexpanded legal arm remain.
    /// The last free slot is reserved for the empty bid.
    fn expansion(&mut self, idx: usize, state: &AuctionState, bidder: BidderId, l: usize) -> Option<ItemSet> {
        let cap = self.cap(idx, bidder);
        let expanded = self.nodes[idx].stats[bidder].arms.len();
        if expanded >= cap {
            return None;
        }
        let pinned = self.root_arms.is_some() && idx == 0 && bidder == self.player;
        let has_pass = self.nodes[idx].stats[bidder].position(ItemSet::EMPTY).is_some();
        if !pinned && expanded + 1 == cap && !has_pass {
            return Some(ItemSet::EMPTY);
        }
        let ranked = self.candidates(idx, state, bidder, l).to_vec();
        let stats = &self.nodes[idx].stats[bidder];
        ranked.into_iter().find(|&a| stats.position(a).is_none())
    }

    /// Chooses `bidder`'s arm at node `idx`: expands when possible, else
    /// draws from the EXP3 policy over arms legal under `l`. Returns the
    /// arm index and its selection probability.
    fn act(&mut self, idx: usize, state: &AuctionState, bidder: BidderId, l: usize) -> (usize, f64) {
        let budget = self.dets[l].types[bidder].budget;
        let held = state.held(bidder);
        let mut legal = std::mem::take(&mut self.legal);
        legal.clear();
        legal.extend(
            self.nodes[idx].stats[bidder]
                .arms
                .iter()
                .map(|a| is_legal_bid(self.config, state, bidder, held, budget, a.arm)),
        );
        let chosen = if let Some(arm) = self.expansion(idx, state, bidder, l) {
            let stats = &mut self.nodes[idx].stats[bidder];
            availability_tick(stats, &legal);
            let i = stats.expand(arm);
            (i, 1.0)
        } else {
            let stats = &mut self.nodes[idx].stats[bidder];
            let gamma = if bidder == self.player {
                let (gamma, eta) = exp3_params(stats.arms.len(), stats.visits);
                self.scores.clear();
                self.scores.extend(stats.arms.iter().map(|a| a.s));
                gibbs_into(&self.scores, None, gamma, eta, &mut self.probs);
                gamma
            } else {
                subset_exp3_into(stats, &legal, &mut self.scores, &mut self.probs)
            };
            record_exploration(stats, &legal, gamma);
            let i = sample_index(&self.probs, self.search_rng.gen());
            availability_tick(stats, &legal);
            (i, self.probs[i])
        };
        self.legal = legal;
        chosen
    }

    /// One selection / expansion / rollout / backpropagation pass.
    pub fn iterate(&mut self) -> Result<()> {
        let l = if self.dets.len() == 1 { 0 } else { self.profile_rng.gen_range(0..self.dets.len()) };
        let mut state = self.root.clone();
        let mut path = std::mem::take(&mut self.path);
        path.clear();
        let mut steps = Vec::new();
        let mut bids = vec![ItemSet::EMPTY; self.config.n];
        while !state.terminal {
            let (idx, created) = self.node_for(&state);
            self.nodes[idx].visits += 1;
            for i in 0..self.config.n {
                let (arm, prob) = self.act(idx, &state, i, l);
                bids[i] = self.nodes[idx].stats[i].arms[arm].arm;
                path.push((idx, i, arm, prob));
            }
            if self.trace.is_some() {
                steps.push(PathStep { state: state.clone(), bids: bids.clone() });
            }
            let holdings = state.holdings();
            state = advance(&state, &bids, &holdings, &mut self.chance_rng);
            if created {
                break;
            }
        }
        let det = &self.dets[l];
        let rewards = rollout(self.config, &state, &det.types, &det.p_star, self.params.alpha, &mut self.rollout_rng);
        for &(idx, bidder, arm, prob) in &path {
            exp3_update(&mut self.nodes[idx].stats[bidder], arm, rewards[bidder], prob)?;
        }
        self.path = path;
        if let Some(trace) = &mut self.trace {
            trace.push(IterationRecord { profile: l, steps, rewards });
        }
        self.iterations += 1;
        Ok(())
    }
}

/// Plays the auction out from `state`: each bidder draws its own noisy
/// prediction `max(0, p* + U[-ε, ε]^m)` once, then bids PP with it until
/// the auction closes. Returns every bidder's risk-averse utility.
pub fn rollout<R: Rng + ?Sized>(
    config: &GameConfig,
    state: &AuctionState,
    types: &[BidderType],
    p_star: &[f64],
    alpha: f64,
    rng: &mut R,
) -> Vec<f64> {
    let end = if state.terminal {
        state.clone()
    } else {
        let noisy: Vec<Vec<f64>> = (0..config.n)
            .map(|_| {
                p_star
                    .iter()
                    .map(|&p| (p + config.epsilon * (2.0 * rng.gen::<f64>() - 1.0)).max(0.0))
                    .collect()
            })
            .collect();
        let preds: Vec<&[f64]> = noisy.iter().map(|p| p.as_slice()).collect();
        simulate_pp_auction(config, state, types, &preds, rng)
    };
    let holdings = end.holdings();
    (0..config.n)
        .map(|i| {
            let paid = config.money(end.price_ticks(holdings[i]));
            let sigma = types[i].values.value(holdings[i]) - paid;
            risk_averse_utility(sigma, alpha)
        })
        .collect()
}

/// Complete-information SMS: one determinization, root arms chosen by PP
/// ranking.
pub fn run_sms(
    config: &GameConfig,
    root: &AuctionState,
    player: BidderId,
    det: &Determinization,
    params: &SearchParams,
    budget: &SearchBudget,
    seed: u64,
) -> Result<SearchResult> {
    let dets = std::slice::from_ref(det);
    Search::new(config, root, player, dets, params.clone(), None, seed)?.run(budget)
}
