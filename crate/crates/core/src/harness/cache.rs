//! Offline closing-price predictions per instance: the shared baseline
//! predictions and, per seat, the predictions every search decider plans
//! with.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::instance::{list_files, read_json, write_json, Instance};
use crate::determinize::{plan_games, plan_predictions, Decider};
use crate::error::{Error, Result};
use crate::prediction::{edpe_prices, epe_prices, scpd_distribution, PriceDistribution};
use crate::rng::{derive_seed, tag};

const EPE_SLOT: u64 = u64::MAX;
const EDPE_SLOT: u64 = u64::MAX - 1;
const SCPD_SLOT: u64 = u64::MAX - 2;

/// Seed of the closing-price predictions of one seat. It does not depend
/// on the decider or the composition, so identical planned games get
/// identical predictions wherever they appear.
pub fn pstar_seed(master: u64, instance: u32, seat: usize) -> u64 {
    derive_seed(master, &[tag::PREDICTION, instance as u64, seat as u64])
}

fn baseline_seed(master: u64, instance: u32, slot: u64) -> u64 {
    derive_seed(master, &[tag::PREDICTION, instance as u64, slot])
}

/// Baseline predictions, computed from the public distributions and
/// shared by all seats.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselinePredictions {
    pub epe: Vec<f64>,
    pub epe_converged: bool,
    pub edpe: Vec<f64>,
    pub edpe_converged: bool,
    pub scpd: PriceDistribution,
}

/// Planned-game predictions of one seat, one vector per planned game.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeatPredictions {
    pub expect: Vec<Vec<f64>>,
    pub profiles: Vec<Vec<f64>>,
    pub oracle: Vec<Vec<f64>>,
}

impl SeatPredictions {
    pub fn for_decider(&self, decider: Decider) -> &[Vec<f64>] {
        match decider {
            Decider::Expect => &self.expect,
            Decider::Dsms | Decider::Sdsms => &self.profiles,
            Decider::Csms => &self.oracle,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstancePredictions {
    pub instance_id: u32,
    pub baselines: BaselinePredictions,
    pub seats: Vec<SeatPredictions>,
}

impl InstancePredictions {
    pub fn file_name(id: u32) -> String {
        format!("predictions_{id:05}.json")
    }

    pub fn save(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(Self::file_name(self.instance_id));
        write_json(&path, self)?;
        Ok(path)
    }
}

pub fn baseline_predictions(cfg: &ExperimentConfig, inst: &Instance) -> Result<BaselinePredictions> {
    let config = &inst.config;
    let epe = epe_prices(config, &inst.moments, &cfg.prediction, baseline_seed(cfg.seed, inst.id, EPE_SLOT))?;
    let b = &cfg.baselines;
    let edpe = edpe_prices(config, &inst.dists, b.edpe_type_samples, b.edpe_max_iters, baseline_seed(cfg.seed, inst.id, EDPE_SLOT))?;
    let scpd = scpd_distribution(config, &inst.dists, &epe.prediction, b.scpd_samples, baseline_seed(cfg.seed, inst.id, SCPD_SLOT))?;
    Ok(BaselinePredictions {
        epe: epe.prediction.0,
        epe_converged: epe.converged,
        edpe: edpe.prediction.0,
        edpe_converged: edpe.converged,
        scpd,
    })
}

/// Predictions `decider` plans with in `seat`, before any observation.
pub fn decider_predictions(cfg: &ExperimentConfig, inst: &Instance, seat: usize, decider: Decider) -> Result<Vec<Vec<f64>>> {
    let public = inst.public();
    let plan = plan_games(decider, seat, &inst.types[seat], &public, &cfg.search.deltas, Some(&inst.types))?;
    let res = plan_predictions(&inst.config, &plan, &cfg.prediction, pstar_seed(cfg.seed, inst.id, seat))?;
    Ok(res.into_iter().map(|r| r.prediction.0).collect())
}

pub fn seat_predictions(cfg: &ExperimentConfig, inst: &Instance, seat: usize) -> Result<SeatPredictions> {
    Ok(SeatPredictions {
        expect: decider_predictions(cfg, inst, seat, Decider::Expect)?,
        profiles: decider_predictions(cfg, inst, seat, Decider::Sdsms)?,
        oracle: decider_predictions(cfg, inst, seat, Decider::Csms)?,
    })
}

pub fn instance_predictions(cfg: &ExperimentConfig, inst: &Instance) -> Result<InstancePredictions> {
    Ok(InstancePredictions {
        instance_id: inst.id,
        baselines: baseline_predictions(cfg, inst)?,
        seats: (0..inst.config.n).map(|s| seat_predictions(cfg, inst, s)).collect::<Result<_>>()?,
    })
}

/// Computes and writes the predictions of every instance.
pub fn write_predictions(cfg: &ExperimentConfig, instances: &[Instance], dir: &Path) -> Result<Vec<PathBuf>> {
    use rayon::prelude::*;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let preds: Vec<InstancePredictions> = instances.par_iter().map(|inst| instance_predictions(cfg, inst)).collect::<Result<_>>()?;
    preds.iter().map(|p| p.save(dir)).collect()
}

/// Loads the cache for `instances`, or `None` when the directory holds no
/// prediction files. A cache that covers only some instances is an error.
pub fn load_predictions(dir: &Path, instances: &[Instance]) -> Result<Option<Vec<InstancePredictions>>> {
    if !dir.is_dir() || list_files(dir, "predictions_", ".json")?.is_empty() {
        return Ok(None);
    }
    let preds = instances
        .iter()
        .map(|inst| {
            let path = dir.join(InstancePredictions::file_name(inst.id));
            if !path.is_file() {
                return Err(Error::Config(format!("prediction cache has no entry for instance {}", inst.id)));
            }
            let p: InstancePredictions = read_json(&path)?;
            if p.seats.len() != inst.config.n {
                return Err(Error::Config(format!("{}: expected {} seats", path.display(), inst.config.n)));
            }
            Ok(p)
        })
        .collect::<Result<_>>()?;
    Ok(Some(preds))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::instance::generate_instance;

    #[test]
    fn certainty_makes_every_plan_one_identical_game() {
        let mut cfg = ExperimentConfig::preset(1.0);
        cfg.eta_v = 1.0;
        cfg.eta_b = 1.0;
        cfg.m = 3;
        cfg.moment_samples = 50;
        let inst = generate_instance(&cfg, 0).unwrap();
        let s = seat_predictions(&cfg, &inst, 1).unwrap();
        assert_eq!(s.profiles.len(), 1);
        assert_eq!(s.expect, s.profiles);
        assert_eq!(s.expect, s.oracle);
    }
}
