use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use saa::bandit::{exp3_params, exp3_policy, exp3_update, infoset_policy, sample_index, subset_exp3_policy, ArmStats, InfoSetStats};
use saa::ItemSet;

fn stats_from(scores: &[f64], visits: u64) -> InfoSetStats {
    let arms = scores
        .iter()
        .enumerate()
        .map(|(a, &s)| {
            let mut arm = ArmStats::new(ItemSet::singleton(a));
            arm.s = s;
            arm.n = 1;
            arm.avail = visits;
            arm
        })
        .collect();
    InfoSetStats { arms, visits }
}

proptest! {
    #[test]
    fn policy_is_a_distribution_with_floor(scores in prop::collection::vec(-100.0f64..100.0, 1..16), pulls in 0u64..100_000) {
        let k = scores.len();
        let (gamma, eta) = exp3_params(k, pulls);
        prop_assert!((0.0..=1.0).contains(&gamma));
        let p = exp3_policy(&scores, gamma, eta);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for &x in &p {
            prop_assert!(x >= gamma / k as f64 - 1e-15);
        }
    }

    #[test]
    fn policy_ignores_common_shifts(scores in prop::collection::vec(-50.0f64..50.0, 1..12), shift in -1e6f64..1e6, pulls in 1u64..5000) {
        let (gamma, eta) = exp3_params(scores.len(), pulls);
        let shifted: Vec<f64> = scores.iter().map(|s| s + shift).collect();
        let a = exp3_policy(&scores, gamma, eta);
        let b = exp3_policy(&shifted, gamma, eta);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn subset_policy_matches_plain_when_everything_is_legal(scores in prop::collection::vec(-20.0f64..20.0, 1..12), visits in 1u64..500) {
        let stats = stats_from(&scores, visits);
        let (plain, g1) = infoset_policy(&stats);
        let (subset, g2) = subset_exp3_policy(&stats, &vec![true; scores.len()]);
        prop_assert_eq!(g1, g2);
        for (x, y) in plain.iter().zip(&subset) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn subset_policy_excludes_illegal_arms(scores in prop::collection::vec(-20.0f64..20.0, 2..12), legal in prop::collection::vec(any::<bool>(), 12), forced in 0usize..12, visits in 1u64..500) {
        let k = scores.len();
        let mut legal = legal[..k].to_vec();
        legal[forced % k] = true;
        let stats = stats_from(&scores, visits);
        let (p, gamma) = subset_exp3_policy(&stats, &legal);
        let live = legal.iter().filter(|&&l| l).count();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for (x, &l) in p.iter().zip(&legal) {
            if l {
                prop_assert!(*x >= gamma / live as f64 - 1e-15);
            } else {
                prop_assert_eq!(*x, 0.0);
            }
        }
    }
}

#[test]
fn two_armed_bandit_favours_the_better_arm() {
    let means = [0.3, 0.7];
    let pulls = 10_000;
    let seeds = 20;
    let mut share = 0.0;
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut stats = InfoSetStats::new();
        stats.expand(ItemSet::singleton(0));
        stats.expand(ItemSet::singleton(1));
        let mut better = 0;
        for _ in 0..pulls {
            let (p, _) = infoset_policy(&stats);
            let arm = sample_index(&p, rng.gen());
            let reward = if rng.gen_bool(means[arm]) { 1.0 } else { 0.0 };
            exp3_update(&mut stats, arm, reward, p[arm]).unwrap();
            better += usize::from(arm == 1);
        }
        share += better as f64 / pulls as f64;
    }
    let share = share / seeds as f64;
    assert!(share > 0.6, "better arm share {share}");
}
