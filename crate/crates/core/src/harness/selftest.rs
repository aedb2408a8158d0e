//! Quick invariant checks runnable from the command line.

use rand::Rng;

use crate::auction::{apply_round, legal_actions, AuctionState, GameConfig};
use crate::bandit::{exp3_params, exp3_policy, subset_exp3_policy, ArmStats, InfoSetStats};
use crate::determinize::infer_budget;
use crate::error::Result;
use crate::itemset::ItemSet;
use crate::rng::{stream, SimRng};
use crate::valuation::{enumerate_profile_combinations, BudgetDistribution, ComplementarityDistribution};

pub struct CheckResult {
    pub name: &'static str,
    pub failure: Option<String>,
}

type Check = fn(&mut SimRng) -> Result<Option<String>>;

const CHECKS: [(&str, Check); 5] = [
    ("engine invariants", engine),
    ("free disposal", free_disposal),
    ("exp3 distributions", exp3),
    ("budget inference", inference),
    ("profile combinations", combinations),
];

pub fn run_selftest(seed: u64) -> Vec<CheckResult> {
    CHECKS
        .iter()
        .enumerate()
        .map(|(k, &(name, check))| {
            let failure = match check(&mut stream(seed, &[k as u64])) {
                Ok(f) => f,
                Err(e) => Some(e.to_string()),
            };
            CheckResult { name, failure }
        })
        .collect()
}

fn engine(rng: &mut SimRng) -> Result<Option<String>> {
    for trial in 0..300 {
        let config = GameConfig::new(rng.gen_range(2..=4), rng.gen_range(1..=4), 1.0)?;
        let budgets: Vec<f64> = (0..config.n).map(|_| rng.gen_range(0..=12) as f64).collect();
        let cap = config.round_cap(&budgets);
        let mut state = AuctionState::initial(&config);
        while !state.terminal {
            if state.round > cap {
                return Ok(Some(format!("trial {trial}: no termination within {cap} rounds")));
            }
            let mut bids = Vec::with_capacity(config.n);
            for i in 0..config.n {
                let legal = legal_actions(&config, &state, i, budgets[i])?;
                bids.push(legal[rng.gen_range(0..legal.len())]);
            }
            let next = apply_round(&config, &state, &bids, &budgets, rng)?;
            if next.prices.iter().zip(&state.prices).any(|(a, b)| a < b)
                || next.eligibility.iter().zip(&state.eligibility).any(|(a, b)| a > b)
            {
                return Ok(Some(format!("trial {trial}: prices fell or eligibility rose")));
            }
            state = next;
        }
        let held = state.holdings();
        for i in 0..config.n {
            if config.money(state.price_ticks(held[i])) > budgets[i] {
                return Ok(Some(format!("trial {trial}: bidder {i} overspent")));
            }
            if held.iter().enumerate().any(|(k, h)| k != i && !h.is_disjoint(held[i])) {
                return Ok(Some(format!("trial {trial}: allocation not disjoint")));
            }
        }
    }
    Ok(None)
}

fn free_disposal(rng: &mut SimRng) -> Result<Option<String>> {
    for eta in [0.0, 0.5, 0.8, 1.0] {
        let dist = ComplementarityDistribution::generate(4, eta, 5.0, rng)?;
        for _ in 0..500 {
            if !dist.draw_value_function(rng).satisfies_free_disposal() {
                return Ok(Some(format!("monotonicity violated at eta {eta}")));
            }
        }
    }
    Ok(None)
}

fn exp3(rng: &mut SimRng) -> Result<Option<String>> {
    for _ in 0..500 {
        let k = rng.gen_range(1..=12);
        let mut stats = InfoSetStats::new();
        for a in 0..k {
            let mut arm = ArmStats::new(ItemSet::from_items([a]));
            arm.s = rng.gen_range(-50.0..50.0);
            arm.n = rng.gen_range(0..20);
            arm.avail = arm.n + rng.gen_range(1..20);
            stats.arms.push(arm);
        }
        stats.visits = stats.arms.iter().map(|a| a.n).sum();
        let (gamma, eta) = exp3_params(k, stats.visits);
        let s: Vec<f64> = stats.arms.iter().map(|a| a.s).collect();
        let plain = exp3_policy(&s, gamma, eta);
        let mut legal: Vec<bool> = (0..k).map(|_| rng.gen_bool(0.7)).collect();
        let forced = rng.gen_range(0..k);
        legal[forced] = true;
        let (subset, _) = subset_exp3_policy(&stats, &legal);
        if (plain.iter().sum::<f64>() - 1.0).abs() > 1e-12 || plain.iter().any(|&p| p < gamma / k as f64 - 1e-12) {
            return Ok(Some("plain policy is not a distribution with the exploration floor".into()));
        }
        if (subset.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Ok(Some("subset policy does not sum to one".into()));
        }
    }
    Ok(None)
}

fn inference(rng: &mut SimRng) -> Result<Option<String>> {
    for _ in 0..500 {
        let lower = rng.gen_range(0.0..30.0);
        let dist = BudgetDistribution::new(lower, lower + rng.gen_range(0.0..20.0))?;
        let b_hat = rng.gen_range(0.0..60.0);
        let once = infer_budget(&dist, b_hat)?;
        let twice = infer_budget(&once.dist, b_hat)?;
        if once.dist != twice.dist || once.dist.lower < dist.lower.min(dist.upper) || once.dist.upper != dist.upper {
            return Ok(Some(format!("inference from {dist:?} at {b_hat} is not idempotent")));
        }
    }
    Ok(None)
}

fn combinations(_rng: &mut SimRng) -> Result<Option<String>> {
    let deltas = [-1.0, 0.0, 1.0];
    let three = enumerate_profile_combinations(&deltas, 3)?.len();
    let two = enumerate_profile_combinations(&deltas, 2)?.len();
    Ok((three != 27 || two != 9).then(|| format!("expected 27 and 9 combinations, got {three} and {two}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selftest_passes() {
        for r in run_selftest(3) {
            assert!(r.failure.is_none(), "{}: {:?}", r.name, r.failure);
        }
    }
}
