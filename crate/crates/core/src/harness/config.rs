//! Experiment configuration, strategy identifiers and the shipped presets.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::auction::GameConfig;
use crate::determinize::Decider;
use crate::error::{Error, Result};
use crate::prediction::SelfConfirmingParams;
use crate::search::SearchBudget;
use crate::valuation::DEFAULT_MOMENT_SAMPLES;

/// Every strategy the harness can seat.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyId {
    /// Never bids.
    Null,
    Sb,
    Epe,
    Edpe,
    Scpd,
    SmsExpect,
    Dsms,
    Sdsms,
    Csms,
}

impl StrategyId {
    pub const ALL: [StrategyId; 9] = [
        StrategyId::Null,
        StrategyId::Sb,
        StrategyId::Epe,
        StrategyId::Edpe,
        StrategyId::Scpd,
        StrategyId::SmsExpect,
        StrategyId::Dsms,
        StrategyId::Sdsms,
        StrategyId::Csms,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StrategyId::Null => "null",
            StrategyId::Sb => "sb",
            StrategyId::Epe => "epe",
            StrategyId::Edpe => "edpe",
            StrategyId::Scpd => "scpd",
            StrategyId::SmsExpect => "sms_expect",
            StrategyId::Dsms => "dsms",
            StrategyId::Sdsms => "sdsms",
            StrategyId::Csms => "csms",
        }
    }

    /// The search decider behind this strategy, if it is search-based.
    pub fn decider(self) -> Option<Decider> {
        match self {
            StrategyId::SmsExpect => Some(Decider::Expect),
            StrategyId::Dsms => Some(Decider::Dsms),
            StrategyId::Sdsms => Some(Decider::Sdsms),
            StrategyId::Csms => Some(Decider::Csms),
            _ => None,
        }
    }
}

impl fmt::Display for StrategyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StrategyId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StrategyId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown strategy {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchSettings {
    /// Iterations per decision.
    pub iterations: Option<u64>,
    /// Seconds per decision.
    pub time_secs: Option<f64>,
    pub n_act: usize,
    pub n_act_dsms: usize,
    pub deltas: Vec<f64>,
    pub infer_budgets: bool,
    /// Give every DSMS tree the full decision budget instead of an equal
    /// share of it.
    #[serde(default)]
    pub dsms_budget_per_tree: bool,
}

impl SearchSettings {
    pub fn budget(&self) -> Result<SearchBudget> {
        let time = match self.time_secs {
            Some(t) if !(t > 0.0) || !t.is_finite() => {
                return Err(Error::Config(format!("search time must be positive, got {t}")));
            }
            t => t.map(Duration::from_secs_f64),
        };
        let budget = SearchBudget { iterations: self.iterations, time };
        budget.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(budget)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineSettings {
    /// Type samples per bidder for the expected-demand tatonnement.
    pub edpe_type_samples: usize,
    pub edpe_max_iters: usize,
    /// Simulated auctions recorded for the closing-price distribution.
    pub scpd_samples: usize,
    /// Price draws per decision of the distribution bidder.
    pub scpd_draws: usize,
}

impl Default for BaselineSettings {
    fn default() -> Self {
        BaselineSettings { edpe_type_samples: 200, edpe_max_iters: 200, scpd_samples: 200, scpd_draws: 16 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n: usize,
    pub m: usize,
    pub epsilon: f64,
    pub eta_v: f64,
    pub eta_b: f64,
    pub v_max: f64,
    pub b_min: f64,
    pub b_max: f64,
    pub instances: u32,
    pub seed: u64,
    pub moment_samples: usize,
    pub search: SearchSettings,
    /// Risk aversion per search strategy.
    pub alpha: BTreeMap<StrategyId, f64>,
    pub prediction: SelfConfirmingParams,
    #[serde(default)]
    pub baselines: BaselineSettings,
}

#[derive(Deserialize)]
struct PresetTable {
    n_act: usize,
    n_act_dsms: usize,
    deltas: Vec<f64>,
    levels: Vec<PresetLevel>,
}

#[derive(Deserialize)]
struct PresetLevel {
    eta: f64,
    alpha: BTreeMap<StrategyId, f64>,
}

const TABLE: &str = include_str!("../../presets/alpha.json");

fn table() -> PresetTable {
    serde_json::from_str(TABLE).expect("bundled preset table is valid JSON")
}

/// Certainty levels with shipped α presets.
pub fn preset_levels() -> Vec<f64> {
    table().levels.iter().map(|l| l.eta).collect()
}

impl ExperimentConfig {
    /// Desk-scale configuration at certainty `η_v = η_b = eta`: three
    /// bidders, five items, `V = 5`, budgets in `[10, 40]`, 300 instances,
    /// 2,000 iterations per decision. α comes from the preset of that level;
    /// other levels use the nearest preset.
    pub fn preset(eta: f64) -> Self {
        let t = table();
        let level = t
            .levels
            .iter()
            .min_by(|a, b| (a.eta - eta).abs().total_cmp(&(b.eta - eta).abs()))
            .expect("preset table has levels");
        ExperimentConfig {
            n: 3,
            m: 5,
            epsilon: 1.0,
            eta_v: eta,
            eta_b: eta,
            v_max: 5.0,
            b_min: 10.0,
            b_max: 40.0,
            instances: 300,
            seed: 0,
            moment_samples: DEFAULT_MOMENT_SAMPLES,
            search: SearchSettings {
                iterations: Some(2000),
                time_secs: None,
                n_act: t.n_act,
                n_act_dsms: t.n_act_dsms,
                deltas: t.deltas,
                infer_budgets: true,
                dsms_budget_per_tree: false,
            },
            alpha: level.alpha.clone(),
            prediction: SelfConfirmingParams::defaults(1.0),
            baselines: BaselineSettings::default(),
        }
    }

    pub fn game(&self) -> Result<GameConfig> {
        GameConfig::new(self.n, self.m, self.epsilon).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.game()?;
        for (name, eta) in [("eta_v", self.eta_v), ("eta_b", self.eta_b)] {
            if !(0.0..=1.0).contains(&eta) {
                return Err(Error::Config(format!("{name} must lie in [0, 1], got {eta}")));
            }
        }
        if self.instances == 0 {
            return Err(Error::Config("instance count must be at least 1".into()));
        }
        if !(0.0 <= self.b_min && self.b_min < self.b_max) || !(self.v_max >= 0.0) {
            return Err(Error::Config("need 0 <= b_min < b_max and v_max >= 0".into()));
        }
        if self.moment_samples < 2 {
            return Err(Error::Config("moment_samples must be at least 2".into()));
        }
        if self.search.n_act == 0 || self.search.n_act_dsms == 0 || self.search.deltas.is_empty() {
            return Err(Error::Config("N_act must be positive and the delta set non-empty".into()));
        }
        self.search.budget()?;
        Ok(())
    }

    /// α of a search strategy.
    pub fn alpha_of(&self, id: StrategyId) -> Result<f64> {
        self.alpha.get(&id).copied().ok_or_else(|| Error::Config(format!("no alpha configured for {id}")))
    }

    pub fn n_act_of(&self, id: StrategyId) -> usize {
        if id == StrategyId::Dsms {
            self.search.n_act_dsms
        } else {
            self.search.n_act
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bad = |e: &dyn std::fmt::Display| Error::Config(format!("{}: {e}", path.display()));
        let text = std::fs::read_to_string(path).map_err(|e| bad(&e))?;
        let cfg: ExperimentConfig = serde_json::from_str(&text).map_err(|e| bad(&e))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("config serializes");
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_match_table() {
        let c = ExperimentConfig::preset(0.5);
        assert_eq!(c.alpha_of(StrategyId::Sdsms).unwrap(), 0.5);
        assert_eq!(c.alpha_of(StrategyId::Dsms).unwrap(), 0.2);
        assert_eq!(ExperimentConfig::preset(0.0).alpha_of(StrategyId::SmsExpect).unwrap(), 0.2);
        assert_eq!(ExperimentConfig::preset(0.8).alpha_of(StrategyId::Sdsms).unwrap(), 0.0);
        assert_eq!(c.n_act_of(StrategyId::Dsms), 10);
        assert_eq!(c.n_act_of(StrategyId::Sdsms), 20);
        assert_eq!(preset_levels(), vec![0.0, 0.5, 0.8]);
        c.validate().unwrap();
    }

    #[test]
    fn strategy_names_round_trip() {
        for id in StrategyId::ALL {
            assert_eq!(id.as_str().parse::<StrategyId>().unwrap(), id);
        }
        assert!("bogus".parse::<StrategyId>().is_err());
    }

    #[test]
    fn json_round_trip() {
        let c = ExperimentConfig::preset(0.8);
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<ExperimentConfig>(&text).unwrap(), c);
    }
}
