//! The five performance indicators and per-matchup reports.

use serde::{Deserialize, Serialize};

use super::config::StrategyId;
use super::matchup::{CellRecord, Composition, SkippedCell};
use super::stats::{estimate, Z95};

/// Indicators of one strategy over a set of uses (seat plays).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Indicators {
    pub strategy: StrategyId,
    pub uses: usize,
    pub expected_utility: f64,
    pub utility_half_width: f64,
    /// Total loss divided by uses.
    pub expected_exposure: f64,
    pub exposure_frequency: f64,
    pub exposure_frequency_half_width: f64,
    /// `None` when the strategy never won an item.
    pub avg_price_per_item: Option<f64>,
    /// Uses without any item won, left out of the price indicator.
    pub uses_without_items: usize,
    pub items_won_ratio: f64,
}

/// Indicators of `strategy` over its records; `None` without any use.
pub fn indicators(records: &[&CellRecord], strategy: StrategyId, m: usize) -> Option<Indicators> {
    let own: Vec<&CellRecord> = records.iter().copied().filter(|r| r.strategy == strategy).collect();
    if own.is_empty() {
        return None;
    }
    let uses = own.len() as f64;
    let utilities: Vec<f64> = own.iter().map(|r| r.utility).collect();
    let u = estimate(&utilities);
    let losses: f64 = own.iter().map(|r| (-r.utility).max(0.0)).sum();
    let exposed = own.iter().filter(|r| r.utility < 0.0).count() as f64;
    let freq = exposed / uses;
    let items: u32 = own.iter().map(|r| r.items_won).sum();
    let paid: f64 = own.iter().filter(|r| r.items_won > 0).map(|r| r.spend).sum();
    Some(Indicators {
        strategy,
        uses: own.len(),
        expected_utility: u.mean,
        utility_half_width: u.half_width,
        expected_exposure: losses / uses,
        exposure_frequency: freq,
        exposure_frequency_half_width: Z95 * (freq * (1.0 - freq) / uses).sqrt(),
        avg_price_per_item: (items > 0).then(|| paid / items as f64),
        uses_without_items: own.iter().filter(|r| r.items_won == 0).count(),
        items_won_ratio: own.iter().map(|r| r.items_won as f64 / m as f64).sum::<f64>() / uses,
    })
}

/// Unweighted average of the same strategy's indicators over several
/// compositions. Half-widths are combined as for a mean of independent
/// estimates.
pub fn average(parts: &[Indicators]) -> Option<Indicators> {
    let first = parts.first()?;
    let k = parts.len() as f64;
    let avg = |f: fn(&Indicators) -> f64| parts.iter().map(f).sum::<f64>() / k;
    let hw = |f: fn(&Indicators) -> f64| parts.iter().map(|p| f(p) * f(p)).sum::<f64>().sqrt() / k;
    let prices: Vec<f64> = parts.iter().filter_map(|p| p.avg_price_per_item).collect();
    Some(Indicators {
        strategy: first.strategy,
        uses: parts.iter().map(|p| p.uses).sum(),
        expected_utility: avg(|p| p.expected_utility),
        utility_half_width: hw(|p| p.utility_half_width),
        expected_exposure: avg(|p| p.expected_exposure),
        exposure_frequency: avg(|p| p.exposure_frequency),
        exposure_frequency_half_width: hw(|p| p.exposure_frequency_half_width),
        avg_price_per_item: (!prices.is_empty()).then(|| prices.iter().sum::<f64>() / prices.len() as f64),
        uses_without_items: parts.iter().map(|p| p.uses_without_items).sum(),
        items_won_ratio: avg(|p| p.items_won_ratio),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompositionReport {
    pub composition: String,
    pub count_a: usize,
    /// Cells played to completion.
    pub used: usize,
    pub skipped: usize,
    pub strategies: Vec<Indicators>,
    /// Average fraction of the items allocated to anyone.
    pub allocated_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerformanceReport {
    pub a: StrategyId,
    pub b: StrategyId,
    pub m: usize,
    pub compositions: Vec<CompositionReport>,
    /// Indicators of A and B averaged over the mixed compositions.
    pub mixed: Vec<Indicators>,
    pub played: usize,
    pub skipped: usize,
    pub used: usize,
}

/// Builds the report of the pair `(a, b)` from its results.
pub fn report(a: StrategyId, b: StrategyId, n: usize, m: usize, records: &[CellRecord], skipped: &[SkippedCell]) -> PerformanceReport {
    let mut compositions = Vec::new();
    let counts: Vec<usize> = if a == b { vec![n] } else { (0..=n).collect() };
    for count_a in counts {
        let comp = Composition::pair(a, b, n, count_a);
        let label = comp.label();
        let rows: Vec<&CellRecord> = records.iter().filter(|r| r.composition == label).collect();
        let skip = skipped.iter().filter(|s| s.composition == label).count();
        if rows.is_empty() && skip == 0 {
            continue;
        }
        let mut instances: Vec<u32> = rows.iter().map(|r| r.instance_id).collect();
        instances.sort_unstable();
        instances.dedup();
        let strategies = [a, b].iter().filter_map(|&s| indicators(&rows, s, m)).collect::<Vec<_>>();
        let strategies = if a == b { strategies.into_iter().take(1).collect() } else { strategies };
        let allocated: f64 = rows.iter().map(|r| r.items_won as f64).sum::<f64>() / (m as f64 * instances.len().max(1) as f64);
        compositions.push(CompositionReport {
            composition: label,
            count_a,
            used: instances.len(),
            skipped: skip,
            strategies,
            allocated_ratio: allocated,
        });
    }
    let mixed_of = |s: StrategyId| {
        let parts: Vec<Indicators> = compositions
            .iter()
            .filter(|c| c.count_a > 0 && c.count_a < n)
            .filter_map(|c| c.strategies.iter().find(|i| i.strategy == s).cloned())
            .collect();
        average(&parts)
    };
    let mixed = if a == b { Vec::new() } else { [a, b].into_iter().filter_map(mixed_of).collect() };
    let used: usize = compositions.iter().map(|c| c.used).sum();
    let skipped_count: usize = compositions.iter().map(|c| c.skipped).sum();
    PerformanceReport { a, b, m, compositions, mixed, played: used + skipped_count, skipped: skipped_count, used }
}
