#![allow(dead_code)]

use rand::Rng;
use saa::auction::{apply_round, legal_actions, AuctionState, GameConfig};
use saa::valuation::ComplementarityDistribution;
use saa::{BidderType, ItemSet};

pub fn random_type<R: Rng>(m: usize, eta: f64, budget: f64, rng: &mut R) -> BidderType {
    let dist = ComplementarityDistribution::generate(m, eta, 5.0, rng).unwrap();
    BidderType::new(dist.draw_value_function(rng), budget)
}

/// A state reached by up to `rounds` rounds of uniformly random legal bids.
pub fn random_state<R: Rng>(config: &GameConfig, budgets: &[f64], rounds: u32, rng: &mut R) -> AuctionState {
    let mut state = AuctionState::initial(config);
    for _ in 0..rounds {
        let bids: Vec<ItemSet> = (0..config.n)
            .map(|i| {
                let legal = legal_actions(config, &state, i, budgets[i]).unwrap();
                legal[rng.gen_range(0..legal.len())]
            })
            .collect();
        let next = apply_round(config, &state, &bids, budgets, rng).unwrap();
        if next.terminal {
            break;
        }
        state = next;
    }
    state
}
