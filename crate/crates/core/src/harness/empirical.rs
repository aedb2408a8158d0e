//! Two-strategy symmetric empirical games and their equilibrium checks.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::config::StrategyId;
use super::matchup::{CellRecord, Composition};
use super::stats::{estimate, paired_greater, Estimate, OneSided};

/// Expected utilities of one composition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompositionPayoff {
    pub count_a: usize,
    /// Per-seat utility of A, if A is seated.
    pub utility_a: Option<Estimate>,
    pub utility_b: Option<Estimate>,
}

/// Can a single seat profitably deviate from a symmetric profile?
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviationCheck {
    /// Strategy everyone plays in the profile.
    pub profile: StrategyId,
    pub deviation: StrategyId,
    /// Deviator's gain over an incumbent seat, paired by instance.
    pub test: OneSided,
    pub instances: usize,
    /// No significantly profitable deviation.
    pub is_equilibrium: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalGame {
    pub a: StrategyId,
    pub b: StrategyId,
    pub n: usize,
    pub payoffs: Vec<CompositionPayoff>,
    pub all_a: Option<DeviationCheck>,
    pub all_b: Option<DeviationCheck>,
}

/// Mean utility of `strategy` per instance in the composition `label`.
fn per_instance(records: &[CellRecord], label: &str, strategy: StrategyId) -> BTreeMap<u32, f64> {
    let mut acc: BTreeMap<u32, (f64, usize)> = BTreeMap::new();
    for r in records.iter().filter(|r| r.composition == label && r.strategy == strategy) {
        let e = acc.entry(r.instance_id).or_insert((0.0, 0));
        e.0 += r.utility;
        e.1 += 1;
    }
    acc.into_iter().map(|(k, (s, c))| (k, s / c as f64)).collect()
}

/// Tests whether `deviator` seated in `dev_label` earns more than
/// `incumbent` in the symmetric `base_label`, on the instances both share.
pub fn deviation_gain(
    records: &[CellRecord],
    base_label: &str,
    incumbent: StrategyId,
    dev_label: &str,
    deviator: StrategyId,
) -> Option<(OneSided, usize)> {
    let base = per_instance(records, base_label, incumbent);
    let dev = per_instance(records, dev_label, deviator);
    let (x, y): (Vec<f64>, Vec<f64>) = dev.iter().filter_map(|(k, &d)| base.get(k).map(|&b| (d, b))).unzip();
    if x.is_empty() {
        return None;
    }
    Some((paired_greater(&x, &y), x.len()))
}

pub fn empirical_game(a: StrategyId, b: StrategyId, n: usize, records: &[CellRecord]) -> EmpiricalGame {
    let label = |k: usize| Composition::pair(a, b, n, k).label();
    let payoffs = (0..=n)
        .map(|k| {
            let est = |s: StrategyId| {
                let v: Vec<f64> = per_instance(records, &label(k), s).into_values().collect();
                (!v.is_empty()).then(|| estimate(&v))
            };
            CompositionPayoff {
                count_a: k,
                utility_a: if k > 0 { est(a) } else { None },
                utility_b: if k < n { est(b) } else { None },
            }
        })
        .collect();
    let check = |profile: StrategyId, deviation: StrategyId, base: usize, dev: usize| {
        deviation_gain(records, &label(base), profile, &label(dev), deviation).map(|(test, instances)| DeviationCheck {
            profile,
            deviation,
            test,
            instances,
            is_equilibrium: !test.significant,
        })
    };
    EmpiricalGame { a, b, n, payoffs, all_a: check(a, b, n, n - 1), all_b: check(b, a, 0, 1) }
}
