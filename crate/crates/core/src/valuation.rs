//! Bidder types: value functions, budgets, and the distributions they are
//! drawn from, plus the δ-profiles used to determinize opponents.
//!
//! Value functions are built from a *complementarity distribution*: one
//! uniform law per item set whose draw is the surplus obtained when
//! completing the best proper subset. Budgets are uniform on an interval
//! whose width shrinks with the certainty level.

use num_bigint::BigUint;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::itemset::{ItemSet, MAX_ITEMS};

/// Value of every subset of the items, indexed by bitmask.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValueFunction {
    values: Vec<f64>,
}

impl ValueFunction {
    /// Wraps a table of `2^m` values. The table must be normalised,
    /// finite, non-negative and monotone.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let vf = ValueFunction { values };
        vf.validate()?;
        Ok(vf)
    }

    pub(crate) fn from_raw(values: Vec<f64>) -> Self {
        ValueFunction { values }
    }

    pub fn zero(m: usize) -> Self {
        ValueFunction { values: vec![0.0; 1 << m] }
    }

    /// Additive values: `v(X) = Σ_{j∈X} item_values[j]`.
    pub fn additive(item_values: &[f64]) -> Self {
        let m = item_values.len();
        let values = ItemSet::all(m)
            .map(|x| x.items().map(|j| item_values[j]).sum())
            .collect();
        ValueFunction { values }
    }

    fn validate(&self) -> Result<()> {
        let len = self.values.len();
        if !len.is_power_of_two() || len.trailing_zeros() as usize > MAX_ITEMS {
            return Err(Error::Parameter(format!("value table length {len} is not 2^m with m <= {MAX_ITEMS}")));
        }
        if self.values[0] != 0.0 {
            return Err(Error::Parameter("value of the empty set must be 0".into()));
        }
        if self.values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Parameter("values must be finite and non-negative".into()));
        }
        if !self.satisfies_free_disposal() {
            return Err(Error::Parameter("value function violates free disposal".into()));
        }
        Ok(())
    }

    pub fn m(&self) -> usize {
        self.values.len().trailing_zeros() as usize
    }

    #[inline]
    pub fn value(&self, set: ItemSet) -> f64 {
        self.values[set.index()]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Checks `X ⊂ Y ⇒ v(X) ≤ v(Y)`. Comparing each set with its
    /// one-item-smaller subsets is enough, by transitivity.
    pub fn satisfies_free_disposal(&self) -> bool {
        ItemSet::all(self.m()).all(|x| x.items().all(|j| self.value(x.without(j)) <= self.value(x)))
    }

    /// Monotone repair: `v(X) ← max(v(X), max_j v(X\{j}))`, visiting sets
    /// in increasing mask order so every subset is final before its
    /// supersets. Negative entries are clamped to zero first.
    pub fn repair_monotone(&mut self) {
        self.values[0] = 0.0;
        for idx in 1..self.values.len() {
            let x = ItemSet::from_mask(idx as u32);
            let mut best = self.values[idx].max(0.0);
            for j in x.items() {
                best = best.max(self.values[x.without(j).index()]);
            }
            self.values[idx] = best;
        }
    }
}

/// A private type: value function and budget.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BidderType {
    pub values: ValueFunction,
    pub budget: f64,
}

impl BidderType {
    pub fn new(values: ValueFunction, budget: f64) -> Self {
        BidderType { values, budget }
    }
}

fn check_certainty(name: &str, eta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::Parameter(format!("{name} must lie in [0, 1], got {eta}")));
    }
    Ok(())
}

/// `lo + (hi - lo) * u`: exact at both ends of a degenerate interval.
#[inline]
fn uniform<R: Rng + ?Sized>(lo: f64, width: f64, rng: &mut R) -> f64 {
    lo + width * rng.gen::<f64>()
}

/// Per-set uniform laws `U([c_X, c_X + w_X])` of complementarity surplus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplementarityDistribution {
    pub m: usize,
    pub eta_v: f64,
    pub v_max: f64,
    /// Interval anchors `c_X`, indexed by bitmask; entry 0 is unused (0).
    pub anchors: Vec<f64>,
}

impl ComplementarityDistribution {
    /// Draws the anchors: `c_X ~ U([0, η_v V])` for singletons and
    /// `U([0, 2 η_v V])` for larger sets.
    pub fn generate<R: Rng + ?Sized>(m: usize, eta_v: f64, v_max: f64, rng: &mut R) -> Result<Self> {
        check_certainty("eta_v", eta_v)?;
        if !(v_max > 0.0) || !v_max.is_finite() {
            return Err(Error::Parameter(format!("V must be positive, got {v_max}")));
        }
        if m == 0 || m > MAX_ITEMS {
            return Err(Error::Parameter(format!("item count must be in 1..={MAX_ITEMS}, got {m}")));
        }
        let anchors = ItemSet::all(m)
            .map(|x| match x.len() {
                0 => 0.0,
                1 => uniform(0.0, eta_v * v_max, rng),
                _ => uniform(0.0, 2.0 * eta_v * v_max, rng),
            })
            .collect();
        Ok(ComplementarityDistribution { m, eta_v, v_max, anchors })
    }

    /// Rebuilds a distribution from stored anchors.
    pub fn from_anchors(m: usize, eta_v: f64, v_max: f64, anchors: Vec<f64>) -> Result<Self> {
        check_certainty("eta_v", eta_v)?;
        if anchors.len() != 1 << m {
            return Err(Error::Parameter(format!("expected {} anchors, got {}", 1usize << m, anchors.len())));
        }
        Ok(ComplementarityDistribution { m, eta_v, v_max, anchors })
    }

    /// Width `w_X` of the interval for a set of the given cardinality.
    pub fn width(&self, cardinality: usize) -> f64 {
        match cardinality {
            0 => 0.0,
            1 => (1.0 - self.eta_v) * self.v_max,
            _ => 2.0 * (1.0 - self.eta_v) * self.v_max,
        }
    }

    pub fn interval(&self, set: ItemSet) -> (f64, f64) {
        let lo = self.anchors[set.index()];
        (lo, lo + self.width(set.len()))
    }

    /// Draws one surplus vector `C` and builds
    /// `v(X) = max_{j∈X} v(X\{j}) + C_X` by increasing mask order.
    pub fn draw_value_function<R: Rng + ?Sized>(&self, rng: &mut R) -> ValueFunction {
        let surplus: Vec<f64> = ItemSet::all(self.m)
            .map(|x| if x.is_empty() { 0.0 } else { uniform(self.anchors[x.index()], self.width(x.len()), rng) })
            .collect();
        build_from_surplus(&surplus)
    }
}

/// The free-disposal recursion over a surplus vector indexed by mask.
pub fn build_from_surplus(surplus: &[f64]) -> ValueFunction {
    let mut values = vec![0.0; surplus.len()];
    for idx in 1..surplus.len() {
        let x = ItemSet::from_mask(idx as u32);
        let best = x.items().map(|j| values[x.without(j).index()]).fold(0.0, f64::max);
        values[idx] = best + surplus[idx];
    }
    ValueFunction { values }
}

/// Uniform budget law `U([lower, upper])`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetDistribution {
    pub lower: f64,
    pub upper: f64,
}

impl BudgetDistribution {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower <= upper) || !lower.is_finite() || !upper.is_finite() {
            return Err(Error::Parameter(format!("invalid budget support [{lower}, {upper}]")));
        }
        Ok(BudgetDistribution { lower, upper })
    }

    /// `d = (1-η_b)(b_max-b_min)`, `B ~ U([b_min, b_max-d])`, law `U([B, B+d])`.
    pub fn generate<R: Rng + ?Sized>(eta_b: f64, b_min: f64, b_max: f64, rng: &mut R) -> Result<Self> {
        check_certainty("eta_b", eta_b)?;
        if !(b_min < b_max) || !b_min.is_finite() || !b_max.is_finite() || b_min < 0.0 {
            return Err(Error::Parameter(format!("need 0 <= b_min < b_max, got [{b_min}, {b_max}]")));
        }
        let width = (1.0 - eta_b) * (b_max - b_min);
        let anchor = uniform(b_min, (b_max - width) - b_min, rng);
        Ok(BudgetDistribution { lower: anchor, upper: anchor + width })
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        uniform(self.lower, self.width(), rng)
    }

    pub fn mean(&self) -> f64 {
        (self.lower + self.upper) / 2.0
    }

    pub fn variance(&self) -> f64 {
        let w = self.width();
        w * w / 12.0
    }

    pub fn is_point_mass(&self) -> bool {
        self.lower == self.upper
    }
}

/// The public law over one bidder's private type (values and budget are
/// independent).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TypeDistribution {
    pub values: ComplementarityDistribution,
    pub budget: BudgetDistribution,
}

impl TypeDistribution {
    /// Draws a type. Values and budget come from separate streams so that
    /// reseeding one never perturbs the other.
    pub fn sample<R1: Rng + ?Sized, R2: Rng + ?Sized>(&self, value_rng: &mut R1, budget_rng: &mut R2) -> BidderType {
        BidderType { values: self.values.draw_value_function(value_rng), budget: self.budget.draw(budget_rng) }
    }

    pub fn m(&self) -> usize {
        self.values.m
    }
}

/// Per-set mean and variance of the value law, plus budget moments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub value_mean: Vec<f64>,
    pub value_var: Vec<f64>,
    pub budget_mean: f64,
    pub budget_var: f64,
}

impl Moments {
    /// Replaces the budget moments with the closed form for `budget`.
    pub fn with_budget(&self, budget: &BudgetDistribution) -> Moments {
        Moments { budget_mean: budget.mean(), budget_var: budget.variance(), ..self.clone() }
    }
}

/// Default number of value draws used for moment estimation.
pub const DEFAULT_MOMENT_SAMPLES: usize = 20_000;

/// Monte-Carlo value moments (Welford updates, so a point-mass law yields
/// its value and a zero variance exactly) and closed-form budget moments.
pub fn estimate_moments<R: Rng + ?Sized>(dist: &TypeDistribution, n_samples: usize, rng: &mut R) -> Result<Moments> {
    if n_samples < 2 {
        return Err(Error::Parameter(format!("need at least 2 samples, got {n_samples}")));
    }
    let sets = 1usize << dist.m();
    let mut mean = vec![0.0; sets];
    let mut m2 = vec![0.0; sets];
    for k in 1..=n_samples {
        let v = dist.values.draw_value_function(rng);
        for idx in 0..sets {
            let x = v.values[idx];
            let delta = x - mean[idx];
            mean[idx] += delta / k as f64;
            m2[idx] += delta * (x - mean[idx]);
        }
    }
    let value_var = m2.into_iter().map(|s| s / (n_samples - 1) as f64).collect();
    Ok(Moments { value_mean: mean, value_var, budget_mean: dist.budget.mean(), budget_var: dist.budget.variance() })
}

/// A determinized type at `mean + δ·stdev`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub delta: f64,
    pub realized: BidderType,
}

/// Builds the δ-profile from moments. Setwise `mean + δ·stdev` may break
/// monotonicity (for negative δ), so the value table is repaired.
pub fn make_profile(moments: &Moments, delta: f64) -> Profile {
    let raw: Vec<f64> = moments
        .value_mean
        .iter()
        .zip(&moments.value_var)
        .map(|(mu, var)| mu + delta * var.max(0.0).sqrt())
        .collect();
    let mut values = ValueFunction::from_raw(raw);
    values.repair_monotone();
    let budget = (moments.budget_mean + delta * moments.budget_var.max(0.0).sqrt()).max(0.0);
    Profile { delta, realized: BidderType { values, budget } }
}

/// One δ per opponent (in seat order, skipping the concerned player).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileCombination {
    pub deltas: Vec<f64>,
}

/// Cartesian product of `deltas` over the opponents, first opponent varying
/// slowest.
pub fn enumerate_profile_combinations(deltas: &[f64], opponent_count: usize) -> Result<Vec<ProfileCombination>> {
    if deltas.is_empty() {
        return Err(Error::Parameter("delta set must be non-empty".into()));
    }
    let mut combos = vec![Vec::with_capacity(opponent_count)];
    for _ in 0..opponent_count {
        combos = combos
            .into_iter()
            .flat_map(|prefix| {
                deltas.iter().map(move |&d| {
                    let mut c = prefix.clone();
                    c.push(d);
                    c
                })
            })
            .collect();
    }
    Ok(combos.into_iter().map(|deltas| ProfileCombination { deltas }).collect())
}

/// Lower bound on the number of information sets with unlimited budgets and
/// no activity rule: `Σ_i |supp(T_i)| · (R·n + 1)^m`.
pub fn infoset_count_bound(n: u64, m: u32, rounds: u64, support_sizes: &[u64]) -> Result<BigUint> {
    if n == 0 || m == 0 || rounds == 0 || support_sizes.is_empty() || support_sizes.contains(&0) {
        return Err(Error::Parameter("all arguments must be positive".into()));
    }
    let base = BigUint::from(rounds) * BigUint::from(n) + 1u32;
    let per_type = base.pow(m);
    let supports: BigUint = support_sizes.iter().map(|&s| BigUint::from(s)).sum();
    Ok(supports * per_type)
}
