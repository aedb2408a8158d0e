//! Auction instances: public type distributions, their moments, and the
//! privately drawn true types.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::auction::GameConfig;
use crate::determinize::PublicInfo;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream, tag};
use crate::valuation::{
    estimate_moments, BidderType, BudgetDistribution, ComplementarityDistribution, Moments, TypeDistribution,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub id: u32,
    pub config: GameConfig,
    pub eta_v: f64,
    pub eta_b: f64,
    pub v_max: f64,
    pub b_min: f64,
    pub b_max: f64,
    pub dists: Vec<TypeDistribution>,
    pub moments: Vec<Moments>,
    pub moment_samples: usize,
    /// True types, one per bidder.
    pub types: Vec<BidderType>,
}

impl Instance {
    pub fn public(&self) -> PublicInfo {
        PublicInfo { config: self.config.clone(), dists: self.dists.clone(), moments: self.moments.clone() }
    }

    pub fn file_name(id: u32) -> String {
        format!("instance_{id:05}.json")
    }

    pub fn save(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(Self::file_name(self.id));
        write_json(&path, self)?;
        Ok(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        read_json(path)
    }
}

/// Instance `id` of the experiment. Each bidder draws from its own
/// substreams of `(seed, id)`, so instances are independent of each other
/// and of generation order.
pub fn generate_instance(cfg: &ExperimentConfig, id: u32) -> Result<Instance> {
    let config = cfg.game()?;
    let root = derive_seed(cfg.seed, &[tag::INSTANCE, id as u64]);
    let mut dists = Vec::with_capacity(cfg.n);
    let mut moments = Vec::with_capacity(cfg.n);
    let mut types = Vec::with_capacity(cfg.n);
    for i in 0..cfg.n as u64 {
        let values = ComplementarityDistribution::generate(cfg.m, cfg.eta_v, cfg.v_max, &mut stream(root, &[i, tag::ANCHORS]))?;
        let budget = BudgetDistribution::generate(cfg.eta_b, cfg.b_min, cfg.b_max, &mut stream(root, &[i, tag::BUDGETS]))?;
        let dist = TypeDistribution { values, budget };
        moments.push(estimate_moments(&dist, cfg.moment_samples, &mut stream(root, &[i, tag::MOMENTS]))?);
        types.push(dist.sample(
            &mut stream(root, &[i, tag::TRUE_TYPE, tag::VALUES]),
            &mut stream(root, &[i, tag::TRUE_TYPE, tag::BUDGETS]),
        ));
        dists.push(dist);
    }
    Ok(Instance {
        id,
        config,
        eta_v: cfg.eta_v,
        eta_b: cfg.eta_b,
        v_max: cfg.v_max,
        b_min: cfg.b_min,
        b_max: cfg.b_max,
        dists,
        moments,
        moment_samples: cfg.moment_samples,
        types,
    })
}

/// Writes instances `0..cfg.instances` into `dir`.
pub fn generate_instances(cfg: &ExperimentConfig, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let instances: Vec<Instance> = {
        use rayon::prelude::*;
        (0..cfg.instances).into_par_iter().map(|id| generate_instance(cfg, id)).collect::<Result<_>>()?
    };
    instances.iter().map(|inst| inst.save(dir)).collect()
}

/// Loads every `instance_*.json` in `dir`, ordered by id.
pub fn load_instances(dir: &Path) -> Result<Vec<Instance>> {
    let mut paths = list_files(dir, "instance_", ".json")?;
    paths.sort();
    let mut out: Vec<Instance> = paths.iter().map(|p| Instance::load(p)).collect::<Result<_>>()?;
    out.sort_by_key(|i| i.id);
    if out.is_empty() {
        return Err(Error::Config(format!("no instance files in {}", dir.display())));
    }
    Ok(out)
}

pub(crate) fn list_files(dir: &Path, prefix: &str, suffix: &str) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        if name.starts_with(prefix) && name.ends_with(suffix) {
            out.push(path);
        }
    }
    Ok(out)
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::json(path, e))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub(crate) fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(eta: f64) -> ExperimentConfig {
        let mut c = ExperimentConfig::preset(eta);
        c.m = 3;
        c.moment_samples = 200;
        c.instances = 2;
        c.seed = 7;
        c
    }

    #[test]
    fn generation_is_reproducible_and_independent_per_id() {
        let c = small(0.5);
        let a = generate_instance(&c, 1).unwrap();
        assert_eq!(a, generate_instance(&c, 1).unwrap());
        assert_ne!(a.types, generate_instance(&c, 0).unwrap().types);
        for t in &a.types {
            assert!(t.values.satisfies_free_disposal());
        }
    }

    #[test]
    fn full_certainty_collapses_supports() {
        let inst = generate_instance(&small(1.0), 0).unwrap();
        for (d, (t, mo)) in inst.dists.iter().zip(inst.types.iter().zip(&inst.moments)) {
            assert!(d.budget.is_point_mass());
            assert_eq!(t.budget, d.budget.lower);
            assert!(mo.value_var.iter().all(|&v| v == 0.0));
            assert_eq!(t.values.values(), &mo.value_mean[..]);
        }
    }

    #[test]
    fn files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let c = small(0.5);
        let paths = generate_instances(&c, dir.path()).unwrap();
        assert_eq!(paths.len(), 2);
        let loaded = load_instances(dir.path()).unwrap();
        assert_eq!(loaded[1], generate_instance(&c, 1).unwrap());
    }
}
