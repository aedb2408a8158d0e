//! Incomplete-information bidders built on the search engine: expectation
//! determinization, separate trees with voting (DSMS), a single tree over
//! sampled profile combinations (SDSMS), and the cheating CSMS oracle.
//! Opponent budget beliefs are narrowed from disclosed bids.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::auction::{legal_actions, AuctionState, BidderId, GameConfig, Observation, RoundRecord, Strategy};
use crate::bandit::{adjusted_visits, final_policy, sample_index};
use crate::error::{Error, Result};
use crate::itemset::ItemSet;
use crate::prediction::{rank_legal_bids, self_confirming_point_prices, top_k_with_pass, SelfConfirmingParams, SelfConfirmingResult};
use crate::rng::{derive_seed, stream, tag};
use crate::search::{Determinization, MixedStrategy, Search, SearchBudget, SearchParams};
use crate::valuation::{enumerate_profile_combinations, make_profile, BidderType, BudgetDistribution, Moments, TypeDistribution};

/// Expectation type of a bidder: mean values (monotone-repaired) and mean
/// budget. Identical to the δ = 0 profile.
pub fn expectation_type(moments: &Moments) -> BidderType {
    make_profile(moments, 0.0).realized
}

/// Outcome of one root decision.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub bid: ItemSet,
    /// Root mixed strategy. For DSMS with several trees this is the mean of
    /// the per-tree final policies over `A_0`.
    pub policy: MixedStrategy,
    /// Determinizations searched (after removing duplicates).
    pub games: usize,
    pub iterations: u64,
    /// DSMS vote count per arm of `A_0`.
    pub votes: Option<Vec<u32>>,
}

fn forced_pass(config: &GameConfig, state: &AuctionState, player: BidderId, budget: f64) -> Result<Option<Decision>> {
    let legal = legal_actions(config, state, player, budget)?;
    Ok((legal == [ItemSet::EMPTY]).then(|| Decision {
        bid: ItemSet::EMPTY,
        policy: MixedStrategy::pure(ItemSet::EMPTY),
        games: 0,
        iterations: 0,
        votes: None,
    }))
}

fn tree_seed(seed: u64, tree: usize) -> u64 {
    derive_seed(seed, &[tag::TREE, tree as u64])
}

/// SMS on one complete-information game, then a draw from the final
/// policy. Serves both the expectation bidder and CSMS; they differ only in
/// the game they are handed.
pub fn sms_decide(
    config: &GameConfig,
    state: &AuctionState,
    player: BidderId,
    det: &Determinization,
    params: &SearchParams,
    budget: &SearchBudget,
    seed: u64,
) -> Result<Decision> {
    if let Some(d) = forced_pass(config, state, player, det.types[player].budget)? {
        return Ok(d);
    }
    let dets = std::slice::from_ref(det);
    let result = Search::new(config, state, player, dets, params.clone(), None, tree_seed(seed, 0))?.run(budget)?;
    let mut rng = stream(seed, &[tag::STRATEGY]);
    let bid = result.policy.sample(&mut rng);
    Ok(Decision { bid, policy: result.policy, games: 1, iterations: result.iterations, votes: None })
}

/// Root arm set shared by all DSMS trees: PP ranking of the player's legal
/// bids under the mean prediction, top `N_act` with ∅ kept.
pub fn dsms_root_actions(config: &GameConfig, state: &AuctionState, player: BidderId, dets: &[Determinization], n_act: usize) -> Vec<ItemSet> {
    let mut mean = vec![0.0; config.m];
    for d in dets {
        for (acc, p) in mean.iter_mut().zip(&d.p_star) {
            *acc += p;
        }
    }
    for acc in &mut mean {
        *acc /= dets.len() as f64;
    }
    let own = &dets[0].types[player];
    let ranked = rank_legal_bids(config, state, player, state.held(player), own.values.values(), own.budget, &mean);
    top_k_with_pass(ranked.into_iter().map(|r| r.bid), n_act)
}

/// Majority vote; ties go to the larger total (exploration-adjusted) visit
/// count, then to the smaller arm.
pub fn tally_votes(arms: &[ItemSet], votes: &[u32], visits: &[f64]) -> ItemSet {
    let mut best = 0;
    for i in 1..arms.len() {
        let better = votes[i] > votes[best]
            || (votes[i] == votes[best]
                && (visits[i] > visits[best] || (visits[i] == visits[best] && arms[i] < arms[best])));
        if better {
            best = i;
        }
    }
    arms[best]
}

/// Separate-tree determinization: one search per game with `A_0` pinned at
/// the root, one vote drawn from each tree's final policy, majority wins.
/// Every tree runs for `per_tree`.
pub fn dsms_decide(
    config: &GameConfig,
    state: &AuctionState,
    player: BidderId,
    dets: &[Determinization],
    params: &SearchParams,
    per_tree: &SearchBudget,
    seed: u64,
) -> Result<Decision> {
    if dets.is_empty() {
        return Err(Error::Parameter("DSMS needs at least one determinization".into()));
    }
    if let Some(d) = forced_pass(config, state, player, dets[0].types[player].budget)? {
        return Ok(d);
    }
    let arms = dsms_root_actions(config, state, player, dets, params.n_act);
    let mut rng = stream(seed, &[tag::STRATEGY]);
    let mut votes = vec![0u32; arms.len()];
    let mut visits = vec![0.0; arms.len()];
    let mut mean_policy = vec![0.0; arms.len()];
    let mut single = None;
    let mut iterations = 0;
    for (l, det) in dets.iter().enumerate() {
        let one = std::slice::from_ref(det);
        let result = Search::new(config, state, player, one, params.clone(), Some(arms.clone()), tree_seed(seed, l))?.run(per_tree)?;
        iterations += result.iterations;
        // Root arms of a pinned tree may be a prefix of A_0 if the budget
        // ran out before all were expanded.
        let adjusted = adjusted_visits(&result.root);
        let policy = final_policy(&result.root);
        let pick = sample_index(&policy, rng.gen());
        for (k, stats) in result.root.arms.iter().enumerate() {
            let slot = arms.iter().position(|&a| a == stats.arm).expect("pinned arm");
            visits[slot] += adjusted[k];
            mean_policy[slot] += policy[k] / dets.len() as f64;
            if k == pick {
                votes[slot] += 1;
            }
        }
        if dets.len() == 1 {
            single = Some(result.policy);
        }
    }
    let bid = tally_votes(&arms, &votes, &visits);
    let policy = single.unwrap_or(MixedStrategy { arms: arms.clone(), probs: mean_policy });
    Ok(Decision { bid, policy, games: dets.len(), iterations, votes: Some(votes) })
}

/// Single-tree determinization: one search drawing a game uniformly per
/// iteration.
pub fn sdsms_decide(
    config: &GameConfig,
    state: &AuctionState,
    player: BidderId,
    dets: &[Determinization],
    params: &SearchParams,
    budget: &SearchBudget,
    seed: u64,
) -> Result<Decision> {
    if dets.is_empty() {
        return Err(Error::Parameter("SDSMS needs at least one determinization".into()));
    }
    if let Some(d) = forced_pass(config, state, player, dets[0].types[player].budget)? {
        return Ok(d);
    }
    let result = Search::new(config, state, player, dets, params.clone(), None, tree_seed(seed, 0))?.run(budget)?;
    let mut rng = stream(seed, &[tag::STRATEGY]);
    let bid = result.policy.sample(&mut rng);
    Ok(Decision { bid, policy: result.policy, games: dets.len(), iterations: result.iterations, votes: None })
}

/// Running per-bidder bid exposure from disclosed rounds.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BidExposureTracker {
    pub exposure: Vec<f64>,
    seen: usize,
}

impl BidExposureTracker {
    pub fn new(n: usize) -> Self {
        BidExposureTracker { exposure: vec![0.0; n], seen: 0 }
    }

    /// Exposure of one round: the new bids at `P + ε` plus the standing
    /// prices of items held going into the round.
    pub fn round_exposure(config: &GameConfig, record: &RoundRecord, bidder: BidderId) -> f64 {
        let bids = record.bids[bidder].items().map(|j| record.prices_before[j] as u64 + 1).sum::<u64>();
        let held = record.held_before[bidder].items().map(|j| record.prices_before[j] as u64).sum::<u64>();
        config.money(bids + held)
    }

    pub fn update(&mut self, config: &GameConfig, record: &RoundRecord) {
        for (i, e) in self.exposure.iter_mut().enumerate() {
            *e = e.max(Self::round_exposure(config, record, i));
        }
        self.seen += 1;
    }

    /// Feeds every record of `history` not seen yet.
    pub fn catch_up(&mut self, config: &GameConfig, history: &[RoundRecord]) {
        let start = self.seen.min(history.len());
        for record in &history[start..] {
            self.update(config, record);
        }
    }
}

/// A budget belief after observing exposure `b_hat`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetInference {
    pub dist: BudgetDistribution,
    /// The observation lies above the prior support; the belief collapsed
    /// to the upper bound.
    pub contradicted: bool,
}

/// Conditions a uniform budget law on `b ≥ b_hat`: the support becomes
/// `[max(lower, b_hat), upper]`.
pub fn infer_budget(dist: &BudgetDistribution, b_hat: f64) -> Result<BudgetInference> {
    if !(b_hat >= 0.0) || !b_hat.is_finite() {
        return Err(Error::Parameter(format!("observed exposure must be finite and non-negative, got {b_hat}")));
    }
    if b_hat <= dist.lower {
        return Ok(BudgetInference { dist: *dist, contradicted: false });
    }
    if b_hat > dist.upper {
        return Ok(BudgetInference { dist: BudgetDistribution { lower: dist.upper, upper: dist.upper }, contradicted: true });
    }
    Ok(BudgetInference { dist: BudgetDistribution { lower: b_hat, upper: dist.upper }, contradicted: false })
}

/// Profiles of every combination with budgets recomputed from the current
/// beliefs. Value profiles depend only on value moments and are unchanged.
/// Returns one type vector per combination, the player's own type in its
/// seat.
pub fn refresh_profiles(
    player: BidderId,
    own: &BidderType,
    moments: &[Moments],
    beliefs: &[BudgetDistribution],
    combos: &[Vec<f64>],
) -> Vec<Vec<BidderType>> {
    combos
        .iter()
        .map(|deltas| {
            let mut d = deltas.iter();
            (0..moments.len())
                .map(|i| {
                    if i == player {
                        own.clone()
                    } else {
                        make_profile(&moments[i].with_budget(&beliefs[i]), *d.next().expect("one delta per opponent")).realized
                    }
                })
                .collect()
        })
        .collect()
}

/// Expectation game: opponents at their expectation types under the
/// current budget beliefs.
pub fn expectation_game(player: BidderId, own: &BidderType, moments: &[Moments], beliefs: &[BudgetDistribution]) -> Vec<BidderType> {
    refresh_profiles(player, own, moments, beliefs, &[vec![0.0; moments.len() - 1]]).remove(0)
}

/// The publicly known part of an instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PublicInfo {
    pub config: GameConfig,
    pub dists: Vec<TypeDistribution>,
    pub moments: Vec<Moments>,
}

/// Which determinization scheme a search bidder uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decider {
    /// Opponents at their expectation types.
    Expect,
    /// Separate trees per profile combination, majority vote.
    Dsms,
    /// One tree, a profile combination drawn per iteration.
    Sdsms,
    /// Complete information (sees the true types).
    Csms,
}

impl Decider {
    pub fn name(self) -> &'static str {
        match self {
            Decider::Expect => "sms_expect",
            Decider::Dsms => "dsms",
            Decider::Sdsms => "sdsms",
            Decider::Csms => "csms",
        }
    }
}

/// The games a decider plans over before any observation, with duplicates
/// removed, and the map from profile combination to game.
#[derive(Clone, Debug, PartialEq)]
pub struct GamePlan {
    pub combos: Vec<Vec<f64>>,
    pub game_of_combo: Vec<usize>,
    pub games: Vec<Vec<BidderType>>,
}

/// Builds the initial game list of `decider` for `player`. `oracle` must
/// hold the true types for CSMS.
pub fn plan_games(
    decider: Decider,
    player: BidderId,
    own: &BidderType,
    public: &PublicInfo,
    deltas: &[f64],
    oracle: Option<&[BidderType]>,
) -> Result<GamePlan> {
    let beliefs: Vec<BudgetDistribution> = public.dists.iter().map(|d| d.budget).collect();
    let combos: Vec<Vec<f64>> = match decider {
        Decider::Csms => {
            let types = oracle.ok_or_else(|| Error::Strategy { strategy: "csms".into(), reason: "needs the true types".into() })?;
            return Ok(GamePlan { combos: vec![vec![]], game_of_combo: vec![0], games: vec![types.to_vec()] });
        }
        Decider::Expect => vec![vec![0.0; public.config.n - 1]],
        Decider::Dsms | Decider::Sdsms => {
            enumerate_profile_combinations(deltas, public.config.n - 1)?.into_iter().map(|c| c.deltas).collect()
        }
    };
    let all = refresh_profiles(player, own, &public.moments, &beliefs, &combos);
    let mut games: Vec<Vec<BidderType>> = Vec::new();
    let mut game_of_combo = Vec::with_capacity(all.len());
    for g in all {
        match games.iter().position(|x| *x == g) {
            Some(k) => game_of_combo.push(k),
            None => {
                game_of_combo.push(games.len());
                games.push(g);
            }
        }
    }
    Ok(GamePlan { combos, game_of_combo, games })
}

/// Self-confirming prediction of every planned game; game `k` uses the
/// seed `(pstar_seed, k)`.
pub fn plan_predictions(config: &GameConfig, plan: &GamePlan, sc: &SelfConfirmingParams, pstar_seed: u64) -> Result<Vec<SelfConfirmingResult>> {
    plan.games
        .iter()
        .enumerate()
        .map(|(k, g)| self_confirming_point_prices(config, g, sc, derive_seed(pstar_seed, &[k as u64])))
        .collect()
}

/// Settings of a search bidder.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchBidderConfig {
    pub decider: Decider,
    pub params: SearchParams,
    /// Per decision. DSMS splits it evenly across its trees unless
    /// `budget_per_tree` is set.
    pub budget: SearchBudget,
    #[serde(default)]
    pub budget_per_tree: bool,
    pub deltas: Vec<f64>,
    pub prediction: SelfConfirmingParams,
    /// Narrow opponent budget beliefs from disclosed bids.
    pub infer_budgets: bool,
}

/// One logged decision.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub round: u32,
    pub decision: Decision,
    pub beliefs: Vec<BudgetDistribution>,
}

/// A search-based bidder playing one seat of one auction.
pub struct SearchBidder {
    cfg: SearchBidderConfig,
    public: Arc<PublicInfo>,
    oracle: Option<Vec<BidderType>>,
    seed: u64,
    pstar_seed: u64,
    plan: Option<GamePlan>,
    predictions: Option<Vec<Vec<f64>>>,
    tracker: BidExposureTracker,
    beliefs: Vec<BudgetDistribution>,
    decisions: u64,
    log: Vec<DecisionRecord>,
}

impl SearchBidder {
    /// `seed` drives the searches; `pstar_seed` the closing-price
    /// predictions (shared by deciders so that identical games get
    /// identical predictions).
    pub fn new(cfg: SearchBidderConfig, public: Arc<PublicInfo>, seed: u64, pstar_seed: u64) -> Self {
        let beliefs = public.dists.iter().map(|d| d.budget).collect();
        let n = public.config.n;
        SearchBidder {
            cfg,
            public,
            oracle: None,
            seed,
            pstar_seed,
            plan: None,
            predictions: None,
            tracker: BidExposureTracker::new(n),
            beliefs,
            decisions: 0,
            log: Vec::new(),
        }
    }

    /// Grants CSMS its view of the true types.
    pub fn with_oracle(mut self, types: Vec<BidderType>) -> Self {
        self.oracle = Some(types);
        self
    }

    /// Uses precomputed predictions (one per planned game) instead of
    /// computing them at the first decision.
    pub fn with_predictions(mut self, predictions: Vec<Vec<f64>>) -> Self {
        self.predictions = Some(predictions);
        self
    }

    pub fn log(&self) -> &[DecisionRecord] {
        &self.log
    }

    pub fn beliefs(&self) -> &[BudgetDistribution] {
        &self.beliefs
    }

    /// Current determinizations: one per combination, budgets refreshed
    /// from beliefs, predictions pinned, duplicates removed.
    fn determinizations(&self, player: BidderId, own: &BidderType) -> Vec<Determinization> {
        let plan = self.plan.as_ref().expect("planned");
        let preds = self.predictions.as_ref().expect("predicted");
        let games = match self.cfg.decider {
            Decider::Csms => plan.games.clone(),
            _ => refresh_profiles(player, own, &self.public.moments, &self.beliefs, &plan.combos),
        };
        let mut dets: Vec<Determinization> = Vec::new();
        for (c, types) in games.into_iter().enumerate() {
            let det = Determinization { types, p_star: preds[plan.game_of_combo[c]].clone() };
            if !dets.contains(&det) {
                dets.push(det);
            }
        }
        dets
    }

    /// Decides the bid at the observed state.
    pub fn decide(&mut self, obs: &Observation<'_>) -> Result<Decision> {
        let config = obs.config;
        if self.plan.is_none() {
            let plan = plan_games(self.cfg.decider, obs.bidder, obs.own_type, &self.public, &self.cfg.deltas, self.oracle.as_deref())?;
            if self.predictions.as_ref().is_some_and(|p| p.len() != plan.games.len()) {
                return Err(Error::Strategy {
                    strategy: self.cfg.decider.name().into(),
                    reason: "prediction count does not match the planned games".into(),
                });
            }
            if self.predictions.is_none() {
                let res = plan_predictions(config, &plan, &self.cfg.prediction, self.pstar_seed)?;
                self.predictions = Some(res.into_iter().map(|r| r.prediction.0).collect());
            }
            self.plan = Some(plan);
        }
        if self.cfg.infer_budgets {
            self.tracker.catch_up(config, obs.history);
            for (i, belief) in self.beliefs.iter_mut().enumerate() {
                if i != obs.bidder {
                    *belief = infer_budget(belief, self.tracker.exposure[i])?.dist;
                }
            }
        }
        let dets = self.determinizations(obs.bidder, obs.own_type);
        let seed = derive_seed(self.seed, &[self.decisions]);
        self.decisions += 1;
        let p = &self.cfg.params;
        let b = &self.cfg.budget;
        let decision = match self.cfg.decider {
            Decider::Expect | Decider::Csms => sms_decide(config, obs.state, obs.bidder, &dets[0], p, b, seed)?,
            Decider::Dsms => {
                let per_tree = if self.cfg.budget_per_tree { *b } else { b.split(dets.len()) };
                dsms_decide(config, obs.state, obs.bidder, &dets, p, &per_tree, seed)?
            }
            Decider::Sdsms => sdsms_decide(config, obs.state, obs.bidder, &dets, p, b, seed)?,
        };
        self.log.push(DecisionRecord { round: obs.state.round, decision: decision.clone(), beliefs: self.beliefs.clone() });
        Ok(decision)
    }
}

impl Strategy for SearchBidder {
    fn name(&self) -> &str {
        self.cfg.decider.name()
    }

    fn bid(&mut self, obs: &Observation<'_>) -> Result<ItemSet> {
        Ok(self.decide(obs)?.bid)
    }
}
