//! EXP3 and its subset-armed variant, as used for selection at every
//! information set of the search tree.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::itemset::ItemSet;

/// Statistics of one expanded arm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArmStats {
    pub arm: ItemSet,
    /// Importance-weighted sum of risk-averse rewards.
    pub s: f64,
    /// Times the arm was played (updated).
    pub n: u64,
    /// Times the arm was available (legal) at the end of a selection step.
    pub avail: u64,
    /// Accumulated exploration mass `Σ γ_t / K_t` over draws where the arm
    /// was selectable.
    pub explore: f64,
}

impl ArmStats {
    pub fn new(arm: ItemSet) -> Self {
        ArmStats { arm, s: 0.0, n: 0, avail: 1, explore: 0.0 }
    }
}

/// Statistics of one bidder at one information set.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InfoSetStats {
    pub arms: Vec<ArmStats>,
    /// Total updates at this information set (`n_I`).
    pub visits: u64,
}

impl InfoSetStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn position(&self, arm: ItemSet) -> Option<usize> {
        self.arms.iter().position(|a| a.arm == arm)
    }

    /// Adds an arm. Its availability starts at `visits + 1`, which is 1 on
    /// a fresh information set and keeps `N ≡ n_I` for arms that are always
    /// legal once their first update lands.
    pub fn expand(&mut self, arm: ItemSet) -> usize {
        let mut stats = ArmStats::new(arm);
        stats.avail = self.visits + 1;
        self.arms.push(stats);
        self.arms.len() - 1
    }
}

/// `γ = min(1, √(K ln K / ((e-1)·max(1, pulls))))` and `η = γ / K`.
pub fn exp3_params(k: usize, total_pulls: u64) -> (f64, f64) {
    assert!(k >= 1, "EXP3 needs at least one arm");
    let kf = k as f64;
    let denom = (std::f64::consts::E - 1.0) * total_pulls.max(1) as f64;
    let gamma = (kf * kf.ln() / denom).sqrt().min(1.0);
    (gamma, gamma / kf)
}

/// Gibbs mixture `γ/K + (1-γ)·softmax(η·score)` over the entries with
/// `mask[x]` set; masked-out entries get 0. Written in max-shifted form.
pub(crate) fn gibbs_into(scores: &[f64], mask: Option<&[bool]>, gamma: f64, eta: f64, out: &mut Vec<f64>) {
    let on = |x: usize| mask.is_none_or(|m| m[x]);
    let k = (0..scores.len()).filter(|&x| on(x)).count();
    out.clear();
    out.resize(scores.len(), 0.0);
    if k == 0 {
        return;
    }
    let top = (0..scores.len()).filter(|&x| on(x)).map(|x| scores[x]).fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for x in 0..scores.len() {
        if on(x) {
            out[x] = (eta * (scores[x] - top)).exp();
            total += out[x];
        }
    }
    let floor = gamma / k as f64;
    for x in 0..scores.len() {
        if on(x) {
            out[x] = floor + (1.0 - gamma) * out[x] / total;
        }
    }
}

/// Plain EXP3 selection probabilities for scores `s`.
pub fn exp3_policy(s: &[f64], gamma: f64, eta: f64) -> Vec<f64> {
    assert!(!s.is_empty(), "EXP3 needs at least one arm");
    let mut out = Vec::with_capacity(s.len());
    gibbs_into(s, None, gamma, eta, &mut out);
    out
}

/// Plain EXP3 at an information set, with `γ, η` from its visit count.
/// Returns the probabilities and `γ`.
pub fn infoset_policy(stats: &InfoSetStats) -> (Vec<f64>, f64) {
    let (gamma, eta) = exp3_params(stats.arms.len(), stats.visits);
    let s: Vec<f64> = stats.arms.iter().map(|a| a.s).collect();
    (exp3_policy(&s, gamma, eta), gamma)
}

/// Subset-armed EXP3: only arms with `legal[x]` compete, each scored by
/// `(n_I / N_x)·s_x`; `γ, η` use the legal count and `n_I`. Illegal arms
/// get probability 0. Returns the probabilities and `γ`.
pub fn subset_exp3_policy(stats: &InfoSetStats, legal: &[bool]) -> (Vec<f64>, f64) {
    let mut out = Vec::with_capacity(stats.arms.len());
    let gamma = subset_exp3_into(stats, legal, &mut Vec::new(), &mut out);
    (out, gamma)
}

pub(crate) fn subset_exp3_into(stats: &InfoSetStats, legal: &[bool], scores: &mut Vec<f64>, out: &mut Vec<f64>) -> f64 {
    let k = legal.iter().filter(|&&l| l).count();
    assert!(k >= 1, "subset EXP3 needs at least one legal arm");
    let (gamma, eta) = exp3_params(k, stats.visits);
    let n_i = stats.visits as f64;
    scores.clear();
    scores.extend(stats.arms.iter().map(|a| n_i / a.avail as f64 * a.s));
    gibbs_into(scores, Some(legal), gamma, eta, out);
    gamma
}

/// Backpropagation update for the arm at `index`: the first update sets
/// `s ← V`, later ones add `V / P`.
pub fn exp3_update(stats: &mut InfoSetStats, index: usize, reward: f64, played_prob: f64) -> Result<()> {
    let arm = &mut stats.arms[index];
    if arm.n == 0 {
        arm.s = reward;
    } else {
        if !(played_prob > 0.0) {
            return Err(Error::NonPositiveProbability(played_prob));
        }
        arm.s += reward / played_prob;
    }
    arm.n += 1;
    stats.visits += 1;
    Ok(())
}

/// `N_x ← N_x + 1` for every arm legal under the drawn profile.
pub fn availability_tick(stats: &mut InfoSetStats, legal: &[bool]) {
    for (arm, &l) in stats.arms.iter_mut().zip(legal) {
        if l {
            arm.avail += 1;
        }
    }
}

/// Adds the uniform floor `γ / K` of one draw to every selectable arm.
pub fn record_exploration(stats: &mut InfoSetStats, legal: &[bool], gamma: f64) {
    let k = legal.iter().filter(|&&l| l).count().max(1);
    let share = gamma / k as f64;
    for (arm, &l) in stats.arms.iter_mut().zip(legal) {
        if l {
            arm.explore += share;
        }
    }
}

/// Visit frequencies with exploration visits withdrawn:
/// `n'_x = max(0, n_x - E_x)` normalized; raw counts if every `n'` is 0.
pub fn final_policy(stats: &InfoSetStats) -> Vec<f64> {
    let adjusted: Vec<f64> = adjusted_visits(stats);
    let total: f64 = adjusted.iter().sum();
    if total > 0.0 {
        return adjusted.iter().map(|x| x / total).collect();
    }
    let raw: u64 = stats.arms.iter().map(|a| a.n).sum();
    if raw == 0 {
        let k = stats.arms.len() as f64;
        return vec![1.0 / k; stats.arms.len()];
    }
    stats.arms.iter().map(|a| a.n as f64 / raw as f64).collect()
}

/// `max(0, n_x - E_x)` per arm.
pub fn adjusted_visits(stats: &InfoSetStats) -> Vec<f64> {
    stats.arms.iter().map(|a| (a.n as f64 - a.explore).max(0.0)).collect()
}

/// Index drawn from `probs` with the uniform variate `u ∈ [0, 1)`.
pub fn sample_index(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stats(s: &[f64], n: &[u64], avail: &[u64], visits: u64) -> InfoSetStats {
        InfoSetStats {
            arms: s
                .iter()
                .enumerate()
                .map(|(i, &s)| ArmStats { arm: ItemSet::from_mask(i as u32), s, n: n[i], avail: avail[i], explore: 0.0 })
                .collect(),
            visits,
        }
    }

    #[test]
    fn params() {
        assert_eq!(exp3_params(1, 10), (0.0, 0.0));
        assert_eq!(exp3_params(5, 1).0, 1.0);
        let (g, e) = exp3_params(4, 1000);
        assert!((g - 0.0568).abs() < 1e-4, "{g}");
        assert_eq!(e, g / 4.0);
    }

    #[test]
    fn policy_examples() {
        assert_eq!(exp3_policy(&[2.0, 2.0, 2.0, 2.0], 0.3, 0.1), vec![0.25; 4]);
        assert_eq!(exp3_policy(&[7.0], 0.0, 0.0), vec![1.0]);
        let p = exp3_policy(&[0.0, 10.0], 0.1, 0.05);
        let a = 0.05 + 0.9 / (1.0 + 0.5f64.exp());
        let b = 0.05 + 0.9 / (1.0 + (-0.5f64).exp());
        assert!((p[0] - a).abs() < 1e-12 && (p[1] - b).abs() < 1e-12);
        assert!((p[0] - 0.3898).abs() < 1e-4);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn subset_example() {
        // s = (4, 4), N = (2, 4), n_I = 4: scaled scores (8, 4).
        let st = stats(&[4.0, 4.0], &[2, 2], &[2, 4], 4);
        let (p, gamma) = subset_exp3_policy(&st, &[true, true]);
        let g = (2.0 * 2f64.ln() / ((std::f64::consts::E - 1.0) * 4.0)).sqrt();
        assert!((gamma - g).abs() < 1e-15 && (g - 0.4491).abs() < 1e-4);
        let eta = g / 2.0;
        let p0 = g / 2.0 + (1.0 - g) / (1.0 + (eta * (4.0 - 8.0)).exp());
        assert!((p[0] - p0).abs() < 1e-12);
        assert!((p[0] + p[1] - 1.0).abs() < 1e-12);
        let (one, _) = subset_exp3_policy(&st, &[false, true]);
        assert_eq!(one, vec![0.0, 1.0]);
    }

    #[test]
    fn subset_reduces_to_plain() {
        let st = stats(&[3.5, -2.0, 11.25], &[4, 3, 5], &[12, 12, 12], 12);
        let (sub, _) = subset_exp3_policy(&st, &[true; 3]);
        let (plain, _) = infoset_policy(&st);
        assert_eq!(sub, plain);
    }

    #[test]
    fn update_rules() {
        let mut st = InfoSetStats::new();
        st.expand(ItemSet::EMPTY);
        exp3_update(&mut st, 0, 3.0, 0.2).unwrap();
        assert_eq!((st.arms[0].s, st.arms[0].n, st.visits), (3.0, 1, 1));
        exp3_update(&mut st, 0, 2.0, 0.5).unwrap();
        assert_eq!((st.arms[0].s, st.arms[0].n), (7.0, 2));
        exp3_update(&mut st, 0, 0.0, 0.5).unwrap();
        assert_eq!((st.arms[0].s, st.arms[0].n), (7.0, 3));
        assert!(exp3_update(&mut st, 0, 1.0, 0.0).is_err());
    }

    #[test]
    fn availability_schedule() {
        let mut st = InfoSetStats::new();
        st.expand(ItemSet::EMPTY);
        st.expand(ItemSet::singleton(0));
        for t in 0..10 {
            availability_tick(&mut st, &[true, t % 2 == 0]);
        }
        assert_eq!(st.arms[0].avail, 11);
        assert_eq!(st.arms[1].avail, 6);
    }

    #[test]
    fn final_policy_examples() {
        let mut st = stats(&[0.0], &[7], &[1], 7);
        assert_eq!(final_policy(&st), vec![1.0]);
        st = stats(&[0.0, 0.0], &[100, 100], &[1, 1], 200);
        st.arms.iter_mut().for_each(|a| a.explore = 50.0);
        assert_eq!(final_policy(&st), vec![0.5, 0.5]);
        st = stats(&[0.0, 0.0], &[90, 10], &[1, 1], 100);
        st.arms.iter_mut().for_each(|a| a.explore = 30.0);
        assert_eq!(final_policy(&st), vec![1.0, 0.0]);
        st.arms.iter_mut().for_each(|a| a.explore = 200.0);
        assert_eq!(final_policy(&st), vec![0.9, 0.1]);
    }

    #[test]
    fn sampling() {
        assert_eq!(sample_index(&[0.25, 0.75], 0.1), 0);
        assert_eq!(sample_index(&[0.25, 0.75], 0.3), 1);
        assert_eq!(sample_index(&[0.5, 0.5, 0.0], 0.999_999_999_999_999_9), 1);
    }
}
