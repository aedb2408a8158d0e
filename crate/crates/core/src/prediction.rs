//! Perceived-price bidding: point-price prediction (PP), straightforward
//! bidding, self-confirming closing-price prediction, and the EPE / EDPE /
//! SCPD baselines.
//!
//! A PP bidder treats a prediction `p` as the closing price of every item it
//! does not hold (never less than the next legal bid `P_j + ε`) and the
//! standing price of items it already holds, then bids toward the bundle
//! with the highest predicted surplus.
//!
//! Bundle costs are always summed in increasing item order; every caller
//! (including the brute-force oracle in the tests) sees the same floats, so
//! tie-breaks agree exactly.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::auction::{advance, AuctionState, BidderId, GameConfig, Observation, Strategy};
use crate::error::{Error, Result};
use crate::itemset::ItemSet;
use crate::rng::{derive_seed, stream, SimRng};
use crate::valuation::{make_profile, BidderType, Moments, TypeDistribution};

/// Predicted closing price of each item, in money.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PricePrediction(pub Vec<f64>);

impl PricePrediction {
    pub fn zeros(m: usize) -> Self {
        PricePrediction(vec![0.0; m])
    }

    /// Component-wise mean of several predictions.
    pub fn average(preds: &[PricePrediction]) -> Self {
        let m = preds.first().map_or(0, |p| p.0.len());
        let mut acc = vec![0.0; m];
        for p in preds {
            for (a, x) in acc.iter_mut().zip(&p.0) {
                *a += x;
            }
        }
        PricePrediction(acc.into_iter().map(|a| a / preds.len() as f64).collect())
    }
}

impl std::ops::Deref for PricePrediction {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Perceived price of every item for one bidder: standing price on held
/// items, `max(p_j, P_j + ε)` elsewhere.
pub fn perceived_prices(config: &GameConfig, state: &AuctionState, bidder: BidderId, p: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; config.m];
    perceived_into(config, state, state.held(bidder), p, &mut out);
    out
}

#[inline]
pub(crate) fn perceived_into(config: &GameConfig, state: &AuctionState, held: ItemSet, p: &[f64], out: &mut [f64]) {
    for j in 0..config.m {
        let standing = config.money(state.prices[j] as u64);
        out[j] = if held.contains(j) { standing } else { p[j].max(config.money(state.prices[j] as u64 + 1)) };
    }
}

/// Fills `cost[z] = Σ_{j∈z} perceived_j`, summed in increasing item order.
#[inline]
pub(crate) fn bundle_costs(perceived: &[f64], cost: &mut Vec<f64>) {
    let sets = 1usize << perceived.len();
    cost.clear();
    cost.resize(sets, 0.0);
    for z in 1..sets {
        let hb = 31 - (z as u32).leading_zeros() as usize;
        cost[z] = cost[z & !(1 << hb)] + perceived[hb];
    }
}

/// Candidate order: higher surplus, then lower cost, then smaller mask.
#[inline]
fn better(u: f64, c: f64, z: u32, best_u: f64, best_c: f64, best_z: u32) -> bool {
    u > best_u || (u == best_u && (c < best_c || (c == best_c && z < best_z)))
}

/// PP decision over precomputed bundle costs. Bundles keep every held item,
/// respect eligibility, and must be affordable at perceived prices; keeping
/// the held set is always allowed.
pub(crate) fn pp_choose(values: &[f64], budget: f64, held: ItemSet, eligibility: usize, m: usize, cost: &[f64]) -> ItemSet {
    let free = ItemSet::full(m).difference(held);
    let base = held.mask();
    let mut best_z = base;
    let mut best_c = cost[base as usize];
    let mut best_u = values[base as usize] - best_c;
    let room = eligibility.saturating_sub(held.len());
    for x in free.subsets().skip(1) {
        if x.len() > room {
            continue;
        }
        let z = base | x.mask();
        let c = cost[z as usize];
        if c > budget {
            continue;
        }
        let u = values[z as usize] - c;
        if better(u, c, z, best_u, best_c, best_z) {
            best_u = u;
            best_c = c;
            best_z = z;
        }
    }
    ItemSet::from_mask(best_z).difference(held)
}

/// PP bid for `bidder` under prediction `p`: the new items of the bundle
/// maximizing `v(Z) - Σ_{j∈Z} perceived_j`.
pub fn pp_bid(config: &GameConfig, state: &AuctionState, bidder: BidderId, ty: &BidderType, p: &[f64]) -> ItemSet {
    let held = state.held(bidder);
    let mut perceived = vec![0.0; config.m];
    perceived_into(config, state, held, p, &mut perceived);
    let mut cost = Vec::new();
    bundle_costs(&perceived, &mut cost);
    pp_choose(ty.values.values(), ty.budget, held, state.eligibility[bidder] as usize, config.m, &cost)
}

/// One legal bid with its predicted bundle surplus and cost.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RankedBid {
    pub bid: ItemSet,
    pub utility: f64,
    pub cost: f64,
}

/// Every legal bid under `budget`, ordered best first by predicted
/// bundle surplus (same tie rules as [`pp_bid`]).
pub(crate) fn rank_legal_bids(
    config: &GameConfig,
    state: &AuctionState,
    bidder: BidderId,
    held: ItemSet,
    values: &[f64],
    budget: f64,
    p: &[f64],
) -> Vec<RankedBid> {
    let mut perceived = vec![0.0; config.m];
    perceived_into(config, state, held, p, &mut perceived);
    let mut cost = Vec::new();
    bundle_costs(&perceived, &mut cost);
    let free = config.all_items().difference(held);
    let mut ranked: Vec<RankedBid> = free
        .subsets()
        .filter(|&x| crate::auction::is_legal_bid(config, state, bidder, held, budget, x))
        .map(|x| {
            let z = x.union(held).index();
            RankedBid { bid: x, utility: values[z] - cost[z], cost: cost[z] }
        })
        .collect();
    ranked.sort_by(|a, b| {
        b.utility
            .total_cmp(&a.utility)
            .then(a.cost.total_cmp(&b.cost))
            .then(a.bid.cmp(&b.bid))
    });
    ranked
}

/// Truncates a ranking to `k` entries while keeping the empty bid.
pub(crate) fn top_k_with_pass(ranked: impl IntoIterator<Item = ItemSet>, k: usize) -> Vec<ItemSet> {
    let k = k.max(1);
    let mut out: Vec<ItemSet> = ranked.into_iter().take(k).collect();
    if !out.contains(&ItemSet::EMPTY) {
        if out.len() == k {
            out.pop();
        }
        out.push(ItemSet::EMPTY);
    }
    out
}

/// The `k` legal bids with the highest predicted surplus; the empty bid is
/// always part of the result.
pub fn pp_rank_actions(config: &GameConfig, state: &AuctionState, bidder: BidderId, ty: &BidderType, p: &[f64], k: usize) -> Vec<ItemSet> {
    let ranked = rank_legal_bids(config, state, bidder, state.held(bidder), ty.values.values(), ty.budget, p);
    top_k_with_pass(ranked.into_iter().map(|r| r.bid), k)
}

/// Straightforward bidding: PP with a null prediction.
pub fn sb_bid(config: &GameConfig, state: &AuctionState, bidder: BidderId, ty: &BidderType) -> ItemSet {
    pp_bid(config, state, bidder, ty, &vec![0.0; config.m])
}

/// Runs one auction in which bidder `i` plays PP with `predictions[i]`.
/// Returns the closing state.
pub(crate) fn simulate_pp_auction<R: Rng + ?Sized>(
    config: &GameConfig,
    state: &AuctionState,
    types: &[BidderType],
    predictions: &[&[f64]],
    rng: &mut R,
) -> AuctionState {
    let budgets: Vec<f64> = types.iter().map(|t| t.budget).collect();
    let cap = config.round_cap(&budgets);
    let mut state = state.clone();
    let mut perceived = vec![0.0; config.m];
    let mut cost = Vec::with_capacity(1 << config.m);
    let mut bids = vec![ItemSet::EMPTY; config.n];
    while !state.terminal && state.round < cap {
        let holdings = state.holdings();
        for i in 0..config.n {
            perceived_into(config, &state, holdings[i], predictions[i], &mut perceived);
            bundle_costs(&perceived, &mut cost);
            bids[i] = pp_choose(types[i].values.values(), types[i].budget, holdings[i], state.eligibility[i] as usize, config.m, &cost);
        }
        state = advance(&state, &bids, &holdings, rng);
    }
    state
}

/// Tuning of the damped self-confirming iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelfConfirmingParams {
    /// Simulated auctions per iteration (K).
    pub sims_per_iter: usize,
    /// Damping λ in `p ← (1-λ)p + λ·mean`.
    pub damping: f64,
    /// Stop once no component moves by more than this (money).
    pub tol: f64,
    pub max_iters: usize,
}

impl SelfConfirmingParams {
    /// K = 30, λ = 0.5, tol = ε/2, 50 iterations.
    pub fn defaults(epsilon: f64) -> Self {
        SelfConfirmingParams { sims_per_iter: 30, damping: 0.5, tol: epsilon / 2.0, max_iters: 50 }
    }

    fn validate(&self) -> Result<()> {
        if self.sims_per_iter == 0 || !(self.damping > 0.0 && self.damping <= 1.0) || !(self.tol >= 0.0) {
            return Err(Error::Parameter(format!("invalid self-confirming parameters {self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelfConfirmingResult {
    pub prediction: PricePrediction,
    pub iterations: usize,
    pub converged: bool,
}

/// Damped fixed-point iteration on closing prices: every bidder plays PP
/// with the current prediction in `K` simulated auctions, and the
/// prediction moves toward the mean closing prices. Simulation `s` of
/// iteration `t` uses the substream `(seed, t, s)`.
pub fn self_confirming_point_prices(
    config: &GameConfig,
    types: &[BidderType],
    params: &SelfConfirmingParams,
    seed: u64,
) -> Result<SelfConfirmingResult> {
    params.validate()?;
    let root = AuctionState::initial(config);
    let mut p = vec![0.0; config.m];
    let mut converged = false;
    let mut iterations = 0;
    for it in 0..params.max_iters {
        let mut mean = vec![0.0; config.m];
        let preds: Vec<&[f64]> = vec![&p; config.n];
        for s in 0..params.sims_per_iter {
            let mut rng = stream(seed, &[it as u64, s as u64]);
            let closing = simulate_pp_auction(config, &root, types, &preds, &mut rng);
            for (acc, &t) in mean.iter_mut().zip(&closing.prices) {
                *acc += config.money(t as u64);
            }
        }
        let mut change: f64 = 0.0;
        for (pj, acc) in p.iter_mut().zip(&mean) {
            let target = acc / params.sims_per_iter as f64;
            let next = (1.0 - params.damping) * *pj + params.damping * target;
            change = change.max((next - *pj).abs());
            *pj = next;
        }
        iterations = it + 1;
        if change <= params.tol {
            converged = true;
            break;
        }
    }
    Ok(SelfConfirmingResult { prediction: PricePrediction(p), iterations, converged })
}

/// Expectation types of every bidder (mean values and budgets, repaired).
pub fn expectation_types(moments: &[Moments]) -> Vec<BidderType> {
    moments.iter().map(|m| make_profile(m, 0.0).realized).collect()
}

/// Expected price equilibrium: the self-confirming point prediction of the
/// game in which every bidder has its expectation type.
pub fn epe_prices(config: &GameConfig, moments: &[Moments], params: &SelfConfirmingParams, seed: u64) -> Result<SelfConfirmingResult> {
    self_confirming_point_prices(config, &expectation_types(moments), params, seed)
}

/// Expected-demand price equilibrium by tatonnement: every item whose
/// expected demand at the opening state exceeds one unit goes up by ε,
/// until no item is over-demanded or `max_iters` is reached.
pub fn edpe_prices(
    config: &GameConfig,
    dists: &[TypeDistribution],
    type_samples: usize,
    max_iters: usize,
    seed: u64,
) -> Result<SelfConfirmingResult> {
    if type_samples == 0 {
        return Err(Error::Parameter("EDPE needs at least one type sample".into()));
    }
    let samples: Vec<Vec<BidderType>> = dists
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let mut vrng = stream(seed, &[i as u64, crate::rng::tag::VALUES]);
            let mut brng = stream(seed, &[i as u64, crate::rng::tag::BUDGETS]);
            (0..type_samples).map(|_| d.sample(&mut vrng, &mut brng)).collect()
        })
        .collect();
    let root = AuctionState::initial(config);
    let mut p = vec![0.0; config.m];
    let mut perceived = vec![0.0; config.m];
    let mut cost = Vec::new();
    for it in 0..max_iters {
        perceived_into(config, &root, ItemSet::EMPTY, &p, &mut perceived);
        bundle_costs(&perceived, &mut cost);
        let mut demand = vec![0.0; config.m];
        for bidder_samples in &samples {
            for ty in bidder_samples {
                let bundle = pp_choose(ty.values.values(), ty.budget, ItemSet::EMPTY, config.m, config.m, &cost);
                for j in bundle.items() {
                    demand[j] += 1.0 / type_samples as f64;
                }
            }
        }
        let mut moved = false;
        for (pj, d) in p.iter_mut().zip(&demand) {
            if *d > 1.0 + 1e-12 {
                *pj += config.epsilon;
                moved = true;
            }
        }
        if !moved {
            return Ok(SelfConfirmingResult { prediction: PricePrediction(p), iterations: it + 1, converged: true });
        }
    }
    Ok(SelfConfirmingResult { prediction: PricePrediction(p), iterations: max_iters, converged: false })
}

/// Per-item empirical closing-price law.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriceDistribution {
    /// For each item, `(price, weight)` pairs with weights summing to 1.
    pub items: Vec<Vec<(f64, f64)>>,
}

impl PriceDistribution {
    pub fn point_mass(p: &[f64]) -> Self {
        PriceDistribution { items: p.iter().map(|&x| vec![(x, 1.0)]).collect() }
    }

    /// Builds the law from equally weighted closing-price vectors.
    pub fn from_samples(m: usize, samples: &[Vec<f64>]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Parameter("price distribution needs at least one sample".into()));
        }
        let w = 1.0 / samples.len() as f64;
        let mut items = Vec::with_capacity(m);
        for j in 0..m {
            let mut prices: Vec<f64> = samples.iter().map(|s| s[j]).collect();
            prices.sort_by(f64::total_cmp);
            let mut law: Vec<(f64, f64)> = Vec::new();
            for x in prices {
                match law.last_mut() {
                    Some((last, weight)) if *last == x => *weight += w,
                    _ => law.push((x, w)),
                }
            }
            items.push(law);
        }
        Ok(PriceDistribution { items })
    }

    pub fn sample_item<R: Rng + ?Sized>(&self, item: usize, rng: &mut R) -> f64 {
        let law = &self.items[item];
        if law.len() == 1 {
            return law[0].0;
        }
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for &(x, w) in law {
            acc += w;
            if u < acc {
                return x;
            }
        }
        law[law.len() - 1].0
    }
}

/// SCPD construction: start from the EPE point prediction, then record the
/// closing prices of `samples` auctions in which types are drawn from the
/// public distributions and everyone plays PP at that prediction.
pub fn scpd_distribution(
    config: &GameConfig,
    dists: &[TypeDistribution],
    point: &[f64],
    samples: usize,
    seed: u64,
) -> Result<PriceDistribution> {
    let root = AuctionState::initial(config);
    let preds: Vec<&[f64]> = vec![point; config.n];
    let mut closing = Vec::with_capacity(samples);
    for s in 0..samples {
        let types: Vec<BidderType> = dists
            .iter()
            .enumerate()
            .map(|(i, d)| {
                d.sample(
                    &mut stream(seed, &[s as u64, i as u64, crate::rng::tag::VALUES]),
                    &mut stream(seed, &[s as u64, i as u64, crate::rng::tag::BUDGETS]),
                )
            })
            .collect();
        let mut rng = stream(seed, &[s as u64, crate::rng::tag::ENGINE]);
        let end = simulate_pp_auction(config, &root, &types, &preds, &mut rng);
        closing.push(end.prices_money(config.epsilon));
    }
    PriceDistribution::from_samples(config.m, &closing)
}

/// Distribution-based PP: the mean perceived price of each item over
/// `samples` draws from `dist` replaces the point prediction. Surplus is
/// linear in prices, so this equals averaging bundle surpluses over draws.
pub fn scpd_bid<R: Rng + ?Sized>(
    config: &GameConfig,
    state: &AuctionState,
    bidder: BidderId,
    ty: &BidderType,
    dist: &PriceDistribution,
    samples: usize,
    rng: &mut R,
) -> ItemSet {
    let held = state.held(bidder);
    let samples = samples.max(1);
    let mut perceived = vec![0.0; config.m];
    for (j, out) in perceived.iter_mut().enumerate() {
        if held.contains(j) {
            *out = config.money(state.prices[j] as u64);
            continue;
        }
        let floor = config.money(state.prices[j] as u64 + 1);
        let mut mean = 0.0;
        for k in 1..=samples {
            let x = dist.sample_item(j, rng).max(floor);
            mean += (x - mean) / k as f64;
        }
        *out = mean;
    }
    let mut cost = Vec::new();
    bundle_costs(&perceived, &mut cost);
    pp_choose(ty.values.values(), ty.budget, held, state.eligibility[bidder] as usize, config.m, &cost)
}

/// PP with a fixed prediction (SB when the prediction is zero).
pub struct PointPriceBidder {
    name: String,
    prediction: Vec<f64>,
}

impl PointPriceBidder {
    pub fn new(name: impl Into<String>, prediction: PricePrediction) -> Self {
        PointPriceBidder { name: name.into(), prediction: prediction.0 }
    }

    pub fn straightforward(m: usize) -> Self {
        Self::new("sb", PricePrediction::zeros(m))
    }
}

impl Strategy for PointPriceBidder {
    fn name(&self) -> &str {
        &self.name
    }

    fn bid(&mut self, obs: &Observation<'_>) -> Result<ItemSet> {
        Ok(pp_bid(obs.config, obs.state, obs.bidder, obs.own_type, &self.prediction))
    }
}

/// PP against a price distribution (SCPD).
pub struct DistributionBidder {
    dist: PriceDistribution,
    samples: usize,
    rng: SimRng,
}

impl DistributionBidder {
    pub fn new(dist: PriceDistribution, samples: usize, seed: u64) -> Self {
        DistributionBidder { dist, samples, rng: stream(seed, &[]) }
    }
}

impl Strategy for DistributionBidder {
    fn name(&self) -> &str {
        "scpd"
    }

    fn bid(&mut self, obs: &Observation<'_>) -> Result<ItemSet> {
        Ok(scpd_bid(obs.config, obs.state, obs.bidder, obs.own_type, &self.dist, self.samples, &mut self.rng))
    }
}

/// Never bids.
pub struct Passive;

impl Strategy for Passive {
    fn name(&self) -> &str {
        "null"
    }

    fn bid(&mut self, _obs: &Observation<'_>) -> Result<ItemSet> {
        Ok(ItemSet::EMPTY)
    }
}

/// Seed of the self-confirming computation for a given owner and slot.
pub fn prediction_seed(master: u64, owner: u64, slot: u64) -> u64 {
    derive_seed(master, &[crate::rng::tag::PREDICTION, owner, slot])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::auction::{is_legal_bid, legal_actions};
    use crate::valuation::ValueFunction;

    fn cfg(n: usize, m: usize) -> GameConfig {
        GameConfig::new(n, m, 1.0).unwrap()
    }

    fn ty(values: Vec<f64>, budget: f64) -> BidderType {
        BidderType::new(ValueFunction::new(values).unwrap(), budget)
    }

    #[test]
    fn perceived_price_rules() {
        let c = cfg(2, 3);
        let mut s = AuctionState::initial(&c);
        assert_eq!(perceived_prices(&c, &s, 0, &[0.0; 3]), vec![1.0; 3]);
        s.prices = vec![4, 9, 0];
        s.temp_winner = vec![Some(0), Some(1), None];
        assert_eq!(perceived_prices(&c, &s, 0, &[8.0, 7.0, 0.5]), vec![4.0, 10.0, 1.0]);
    }

    #[test]
    fn pp_enumeration_example() {
        // v({0}) = 5, v({1}) = 1, v({0,1}) = 6 at perceived prices (2, 3).
        let c = cfg(2, 2);
        let s = AuctionState::initial(&c);
        let t = ty(vec![0.0, 5.0, 1.0, 6.0], 100.0);
        assert_eq!(pp_bid(&c, &s, 0, &t, &[2.0, 3.0]), ItemSet::singleton(0));
        let ranked = pp_rank_actions(&c, &s, 0, &t, &[2.0, 3.0], 3);
        assert_eq!(ranked, vec![ItemSet::singleton(0), ItemSet::full(2), ItemSet::EMPTY]);
        assert_eq!(pp_rank_actions(&c, &s, 0, &t, &[2.0, 3.0], 1), vec![ItemSet::EMPTY]);
        let all = pp_rank_actions(&c, &s, 0, &t, &[2.0, 3.0], 10);
        assert_eq!(all.len(), 4);
        assert!(all.contains(&ItemSet::EMPTY));
    }

    #[test]
    fn pp_degenerate_cases() {
        let c = cfg(2, 2);
        let s = AuctionState::initial(&c);
        assert_eq!(pp_bid(&c, &s, 0, &ty(vec![0.0; 4], 10.0), &[0.0, 0.0]), ItemSet::EMPTY);
        assert_eq!(pp_bid(&c, &s, 0, &ty(vec![0.0, 5.0, 5.0, 9.0], 0.5), &[0.0, 0.0]), ItemSet::EMPTY);
    }

    #[test]
    fn straightforward_bidding() {
        let c = cfg(2, 2);
        let mut s = AuctionState::initial(&c);
        let t = ty(vec![0.0, 4.0, 4.0, 8.0], 100.0);
        assert_eq!(sb_bid(&c, &s, 0, &t), ItemSet::full(2));
        s.prices = vec![2, 5];
        s.temp_winner = vec![Some(1), Some(1)];
        assert_eq!(sb_bid(&c, &s, 0, &t), ItemSet::singleton(0));
        let low = ty(vec![0.0, 0.5, 0.5, 1.0], 100.0);
        assert_eq!(sb_bid(&c, &AuctionState::initial(&c), 0, &low), ItemSet::EMPTY);
    }

    #[test]
    fn zero_surplus_ties_prefer_passing() {
        // Item 0 at perceived 4 with value 4: surplus 0 ties with passing,
        // and the cheaper bundle wins.
        let c = cfg(2, 2);
        let mut s = AuctionState::initial(&c);
        s.prices = vec![3, 5];
        s.temp_winner = vec![Some(1), Some(1)];
        assert_eq!(sb_bid(&c, &s, 0, &ty(vec![0.0, 4.0, 4.0, 8.0], 100.0)), ItemSet::EMPTY);
    }

    #[test]
    fn ranking_respects_budget_legality() {
        let c = cfg(2, 3);
        let s = AuctionState::initial(&c);
        let t = ty(ValueFunction::additive(&[5.0, 5.0, 5.0]).values().to_vec(), 2.0);
        let ranked = pp_rank_actions(&c, &s, 0, &t, &[0.0; 3], 20);
        let legal = legal_actions(&c, &s, 0, 2.0).unwrap();
        assert_eq!(ranked.len(), legal.len());
        assert!(ranked.iter().all(|b| is_legal_bid(&c, &s, 0, ItemSet::EMPTY, 2.0, *b)));
    }

    #[test]
    fn self_confirming_zero_values() {
        let c = cfg(2, 2);
        let types = vec![ty(vec![0.0; 4], 10.0); 2];
        let res = self_confirming_point_prices(&c, &types, &SelfConfirmingParams::defaults(1.0), 3).unwrap();
        assert_eq!(res.prediction.0, vec![0.0, 0.0]);
        assert!(res.converged);
    }

    #[test]
    fn self_confirming_lone_bidder_pays_one_increment() {
        // Bidder 1 values nothing, so bidder 0 faces no competition and
        // closes each demanded item at ε.
        let c = cfg(2, 2);
        let types = vec![ty(vec![0.0, 5.0, 0.0, 5.0], 10.0), ty(vec![0.0; 4], 10.0)];
        let params = SelfConfirmingParams { tol: 1e-3, ..SelfConfirmingParams::defaults(1.0) };
        let res = self_confirming_point_prices(&c, &types, &params, 3).unwrap();
        assert!(res.converged);
        assert!((res.prediction[0] - 1.0).abs() <= 2e-3, "{:?}", res.prediction);
        assert_eq!(res.prediction[1], 0.0);
    }

    #[test]
    fn self_confirming_english_ladder() {
        let c = cfg(2, 1);
        let types = vec![ty(vec![0.0, 10.0], f64::INFINITY); 2];
        // The default stop rule (step ≤ ε/2) can halt short of the fixed
        // point; with a tight tolerance the damped iterates approach the
        // ladder price 9 from below.
        let params = SelfConfirmingParams { tol: 1e-3, max_iters: 200, ..SelfConfirmingParams::defaults(1.0) };
        let res = self_confirming_point_prices(&c, &types, &params, 5).unwrap();
        assert!((9.0 - 1e-2..=11.0).contains(&res.prediction[0]), "{:?}", res.prediction);
    }

    #[test]
    fn self_confirming_is_reproducible() {
        let c = cfg(3, 2);
        let types = vec![ty(vec![0.0, 4.0, 3.0, 9.0], 6.0), ty(vec![0.0, 3.0, 4.0, 8.0], 7.0), ty(vec![0.0, 4.0, 4.0, 8.0], 5.0)];
        let p = SelfConfirmingParams::defaults(1.0);
        let a = self_confirming_point_prices(&c, &types, &p, 9).unwrap();
        let b = self_confirming_point_prices(&c, &types, &p, 9).unwrap();
        assert_eq!(a, b);
    }

    fn point_law(values: Vec<f64>, budget: f64) -> TypeDistribution {
        use crate::valuation::{BudgetDistribution, ComplementarityDistribution};
        // η_v = 1 with anchors chosen as the surplus of `values`.
        let m = values.len().trailing_zeros() as usize;
        let mut anchors = vec![0.0; values.len()];
        for x in ItemSet::all(m).skip(1) {
            let best = x.items().map(|j| values[x.without(j).index()]).fold(0.0, f64::max);
            anchors[x.index()] = values[x.index()] - best;
        }
        TypeDistribution {
            values: ComplementarityDistribution::from_anchors(m, 1.0, 5.0, anchors).unwrap(),
            budget: BudgetDistribution::new(budget, budget).unwrap(),
        }
    }

    #[test]
    fn edpe_examples() {
        let c = cfg(2, 1);
        let zero = vec![point_law(vec![0.0, 0.0], 20.0); 2];
        assert_eq!(edpe_prices(&c, &zero, 4, 100, 1).unwrap().prediction.0, vec![0.0]);
        let lone = vec![point_law(vec![0.0, 10.0], 20.0), point_law(vec![0.0, 0.0], 20.0)];
        assert_eq!(edpe_prices(&c, &lone, 4, 100, 1).unwrap().prediction.0, vec![0.0]);
        let pair = vec![point_law(vec![0.0, 10.0], 20.0); 2];
        let res = edpe_prices(&c, &pair, 4, 100, 1).unwrap();
        assert!(res.converged);
        assert!((res.prediction[0] - 10.0).abs() <= 1.0, "{:?}", res.prediction);
    }

    #[test]
    fn epe_zero_values() {
        let c = cfg(2, 1);
        let mom = Moments { value_mean: vec![0.0, 0.0], value_var: vec![0.0, 0.0], budget_mean: 10.0, budget_var: 0.0 };
        let res = epe_prices(&c, &[mom.clone(), mom], &SelfConfirmingParams::defaults(1.0), 1).unwrap();
        assert_eq!(res.prediction.0, vec![0.0]);
    }

    #[test]
    fn scpd_point_mass_matches_pp() {
        let c = cfg(2, 3);
        let mut s = AuctionState::initial(&c);
        s.prices = vec![2, 0, 1];
        s.temp_winner = vec![Some(1), None, Some(0)];
        let t = ty(vec![0.0, 3.0, 4.0, 8.0, 2.0, 6.0, 7.0, 12.0], 9.0);
        let p = [3.5, 2.25, 0.0];
        let mut rng = stream(1, &[]);
        let d = PriceDistribution::point_mass(&p);
        assert_eq!(scpd_bid(&c, &s, 0, &t, &d, 16, &mut rng), pp_bid(&c, &s, 0, &t, &p));
        let zero = ty(vec![0.0; 8], 9.0);
        assert_eq!(scpd_bid(&c, &s, 0, &zero, &d, 16, &mut rng), ItemSet::EMPTY);
    }

    #[test]
    fn scpd_two_point_law() {
        // One item worth 5; closing price is 2 or 7 with equal weight, so
        // the mean perceived price is 4.5 (< 5): bid. With 3 or 8 it is
        // 5.5 (> 5): pass.
        let c = cfg(2, 1);
        let s = AuctionState::initial(&c);
        let t = ty(vec![0.0, 5.0], 20.0);
        let mut rng = stream(2, &[]);
        let bid = PriceDistribution::from_samples(1, &[vec![2.0], vec![7.0]]).unwrap();
        let pass = PriceDistribution::from_samples(1, &[vec![3.0], vec![8.0]]).unwrap();
        assert_eq!(bid.items[0], vec![(2.0, 0.5), (7.0, 0.5)]);
        assert_eq!(scpd_bid(&c, &s, 0, &t, &bid, 4000, &mut rng), ItemSet::singleton(0));
        assert_eq!(scpd_bid(&c, &s, 0, &t, &pass, 4000, &mut rng), ItemSet::EMPTY);
    }

    #[test]
    fn top_k_keeps_pass() {
        let a = ItemSet::singleton(0);
        let b = ItemSet::singleton(1);
        assert_eq!(top_k_with_pass([a, b, ItemSet::EMPTY], 2), vec![a, ItemSet::EMPTY]);
        assert_eq!(top_k_with_pass([ItemSet::EMPTY, a, b], 2), vec![ItemSet::EMPTY, a]);
        assert_eq!(top_k_with_pass([a], 5), vec![a, ItemSet::EMPTY]);
    }
}
