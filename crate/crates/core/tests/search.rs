mod common;

use std::time::{Duration, Instant};

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use saa::auction::{is_legal_bid, AuctionState, GameConfig};
use saa::search::{Determinization, NodeDump, Search, SearchBudget, SearchParams};
use saa::valuation::ValueFunction;
use saa::{BidderType, ItemSet};

fn random_det(config: &GameConfig, seed: u64) -> Determinization {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let types = (0..config.n).map(|i| common::random_type(config.m, 0.5, 4.0 + 3.0 * i as f64, &mut rng)).collect();
    Determinization { types, p_star: vec![1.0; config.m] }
}

fn params() -> SearchParams {
    SearchParams { alpha: 0.3, n_act: 6 }
}

fn state_of(node: &NodeDump) -> AuctionState {
    AuctionState {
        round: 0,
        prices: node.prices.clone(),
        temp_winner: node.temp_winner.clone(),
        eligibility: node.eligibility.clone(),
        terminal: node.terminal,
        last_round_had_bids: true,
    }
}

fn dump_json(search: &Search) -> String {
    serde_json::to_string(&search.dump()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn tree_statistics_are_sound(m in 1usize..=3, iters in 50u64..400, seed in any::<u64>()) {
        let config = GameConfig::new(3, m, 1.0).unwrap();
        let det = random_det(&config, seed);
        let dets = [det];
        let root = AuctionState::initial(&config);
        let mut search = Search::new(&config, &root, 1, &dets, params(), None, seed).unwrap();
        let result = search.run(&SearchBudget::iterations(iters)).unwrap();
        prop_assert_eq!(result.iterations, iters);
        prop_assert!((result.policy.probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert_eq!(search.node_visits(&root), iters);
        for node in search.dump() {
            let state = state_of(&node);
            prop_assert!(!node.terminal);
            for (i, stats) in node.bidders.iter().enumerate() {
                prop_assert_eq!(stats.visits, node.visits);
                prop_assert_eq!(stats.arms.iter().map(|a| a.n).sum::<u64>(), node.visits);
                prop_assert!(stats.arms.len() <= params().n_act);
                let held = state.held(i);
                for arm in &stats.arms {
                    prop_assert!(is_legal_bid(&config, &state, i, held, dets[0].types[i].budget, arm.arm));
                }
            }
        }
    }

    #[test]
    fn search_is_reproducible_and_resumable(seed in any::<u64>()) {
        let config = GameConfig::new(2, 2, 1.0).unwrap();
        let dets = [random_det(&config, seed)];
        let root = AuctionState::initial(&config);
        let make = || Search::new(&config, &root, 0, &dets, params(), None, seed).unwrap();
        let mut once = make();
        let full = once.run(&SearchBudget::iterations(300)).unwrap();
        let mut again = make();
        prop_assert_eq!(&again.run(&SearchBudget::iterations(300)).unwrap(), &full);
        prop_assert_eq!(dump_json(&again), dump_json(&once));
        let mut split = make();
        split.run(&SearchBudget::iterations(120)).unwrap();
        let resumed = split.run(&SearchBudget::iterations(180)).unwrap();
        prop_assert_eq!(resumed, full);
        prop_assert_eq!(dump_json(&split), dump_json(&once));
    }
}

#[test]
fn time_budget_returns_a_policy() {
    let config = GameConfig::new(3, 5, 1.0).unwrap();
    let dets = [random_det(&config, 4)];
    let root = AuctionState::initial(&config);
    let mut search = Search::new(&config, &root, 0, &dets, SearchParams { alpha: 0.0, n_act: 20 }, None, 4).unwrap();
    let start = Instant::now();
    let result = search.run(&SearchBudget::time(Duration::from_millis(50))).unwrap();
    assert!(result.iterations >= 1);
    assert!(start.elapsed() < Duration::from_secs(2));
    assert!((result.policy.probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    let before = result.iterations;
    let more = search.run(&SearchBudget::time(Duration::from_millis(50))).unwrap();
    assert!(more.iterations > before);
}

#[test]
fn tie_breaks_split_evenly_inside_the_tree() {
    let config = GameConfig::new(2, 1, 1.0).unwrap();
    let ty = BidderType::new(ValueFunction::additive(&[10.0]), 1.0);
    let dets = [Determinization { types: vec![ty.clone(), ty], p_star: vec![0.0] }];
    let root = AuctionState::initial(&config);
    let mut search = Search::new(&config, &root, 0, &dets, SearchParams { alpha: 0.0, n_act: 4 }, None, 8).unwrap().with_trace();
    search.run(&SearchBudget::iterations(4000)).unwrap();
    let mut wins = [0u32; 2];
    for record in search.trace() {
        if record.steps.len() >= 2 && record.steps[0].bids.iter().all(|&b| b == ItemSet::singleton(0)) {
            wins[record.steps[1].state.temp_winner[0].unwrap() as usize] += 1;
        }
    }
    let total = (wins[0] + wins[1]) as f64;
    assert!(total > 1000.0, "{wins:?}");
    let sigma = (total * 0.25).sqrt();
    assert!((wins[0] as f64 - total / 2.0).abs() <= 3.5 * sigma, "{wins:?}");
}
