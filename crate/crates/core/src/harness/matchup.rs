//! Playing instances under strategy compositions.

use std::borrow::Cow;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::cache::{baseline_predictions, decider_predictions, pstar_seed, BaselinePredictions, InstancePredictions};
use super::config::{ExperimentConfig, StrategyId};
use super::instance::Instance;
use crate::auction::{play_out, Observation, Strategy};
use crate::determinize::{DecisionRecord, SearchBidder, SearchBidderConfig};
use crate::error::{Error, Result};
use crate::itemset::ItemSet;
use crate::prediction::{DistributionBidder, Passive, PointPriceBidder, PricePrediction};
use crate::rng::{derive_seed, stream, tag};
use crate::search::SearchParams;

/// Strategies per seat. `id` feeds the cell seeds, so compositions that
/// should share tie-breaks and searches share an id.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Composition {
    pub id: u32,
    pub seats: Vec<StrategyId>,
}

impl Composition {
    pub fn label(&self) -> String {
        self.seats.iter().map(|s| s.as_str()).collect::<Vec<_>>().join("/")
    }

    /// `count_a` seats of `a` followed by `b`; the id is `count_a`.
    pub fn pair(a: StrategyId, b: StrategyId, n: usize, count_a: usize) -> Self {
        assert!(count_a <= n);
        let seats = (0..n).map(|s| if s < count_a { a } else { b }).collect();
        Composition { id: count_a as u32, seats }
    }

    pub fn count(&self, id: StrategyId) -> usize {
        self.seats.iter().filter(|&&s| s == id).count()
    }
}

/// Every composition of the pair, `#A = 0..=n`, or only `counts` when given.
/// Self-play `a == b` has the single composition `#A = n`.
pub fn pair_compositions(a: StrategyId, b: StrategyId, n: usize, counts: Option<&[usize]>) -> Result<Vec<Composition>> {
    let counts: Vec<usize> = counts.map(|c| c.to_vec()).unwrap_or_else(|| (0..=n).collect());
    let mut out = Vec::new();
    for k in counts {
        if k > n {
            return Err(Error::Config(format!("composition count {k} exceeds the {n} seats")));
        }
        let c = Composition::pair(a, b, n, if a == b { n } else { k });
        if !out.contains(&c) {
            out.push(c);
        }
    }
    Ok(out)
}

/// One row of the results table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub instance_id: u32,
    pub composition: String,
    pub seat: usize,
    pub strategy: StrategyId,
    pub utility: f64,
    pub exposed: bool,
    pub items_won: u32,
    pub spend: f64,
    pub rounds: u32,
}

/// A cell that could not be played.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkippedCell {
    pub instance_id: u32,
    pub composition: String,
    pub reason: String,
}

/// One search decision, for the JSON-lines decision log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionLogLine {
    pub instance_id: u32,
    pub composition: String,
    pub seat: usize,
    pub strategy: StrategyId,
    #[serde(flatten)]
    pub record: DecisionRecord,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MatchupRun {
    pub records: Vec<CellRecord>,
    pub skipped: Vec<SkippedCell>,
    pub decisions: Vec<DecisionLogLine>,
    /// Cells attempted: played plus skipped.
    pub cells: usize,
}

enum Seat {
    Search(SearchBidder),
    Other(Box<dyn Strategy>),
}

impl Strategy for Seat {
    fn name(&self) -> &str {
        match self {
            Seat::Search(s) => s.name(),
            Seat::Other(s) => s.name(),
        }
    }

    fn bid(&mut self, obs: &Observation<'_>) -> Result<ItemSet> {
        match self {
            Seat::Search(s) => s.bid(obs),
            Seat::Other(s) => s.bid(obs),
        }
    }
}

pub fn seat_seed(master: u64, instance: u32, composition: u32, seat: usize) -> u64 {
    derive_seed(master, &[tag::STRATEGY, instance as u64, composition as u64, seat as u64])
}

pub fn engine_seed(master: u64, instance: u32, composition: u32) -> u64 {
    derive_seed(master, &[tag::ENGINE, instance as u64, composition as u64])
}

fn search_config(cfg: &ExperimentConfig, id: StrategyId) -> Result<Option<SearchBidderConfig>> {
    let Some(decider) = id.decider() else { return Ok(None) };
    Ok(Some(SearchBidderConfig {
        decider,
        params: SearchParams { alpha: cfg.alpha_of(id)?, n_act: cfg.n_act_of(id) },
        budget: cfg.search.budget()?,
        budget_per_tree: cfg.search.dsms_budget_per_tree,
        deltas: cfg.search.deltas.clone(),
        prediction: cfg.prediction.clone(),
        infer_budgets: cfg.search.infer_budgets,
    }))
}

struct InstanceContext<'a> {
    cfg: &'a ExperimentConfig,
    inst: &'a Instance,
    public: Arc<crate::determinize::PublicInfo>,
    baselines: Option<Cow<'a, BaselinePredictions>>,
    cache: Option<&'a InstancePredictions>,
}

impl InstanceContext<'_> {
    fn seat(&self, id: StrategyId, seat: usize, composition: u32) -> Result<Seat> {
        let seed = seat_seed(self.cfg.seed, self.inst.id, composition, seat);
        let m = self.inst.config.m;
        let base = || self.baselines.as_deref().expect("baselines computed for baseline strategies");
        Ok(match id {
            StrategyId::Null => Seat::Other(Box::new(Passive)),
            StrategyId::Sb => Seat::Other(Box::new(PointPriceBidder::straightforward(m))),
            StrategyId::Epe => Seat::Other(Box::new(PointPriceBidder::new("epe", PricePrediction(base().epe.clone())))),
            StrategyId::Edpe => Seat::Other(Box::new(PointPriceBidder::new("edpe", PricePrediction(base().edpe.clone())))),
            StrategyId::Scpd => {
                Seat::Other(Box::new(DistributionBidder::new(base().scpd.clone(), self.cfg.baselines.scpd_draws, seed)))
            }
            _ => {
                let sc = search_config(self.cfg, id)?.expect("search strategy");
                let decider = sc.decider;
                let preds = match self.cache {
                    Some(c) => c.seats[seat].for_decider(decider).to_vec(),
                    None => decider_predictions(self.cfg, self.inst, seat, decider)?,
                };
                let mut bidder = SearchBidder::new(sc, self.public.clone(), seed, pstar_seed(self.cfg.seed, self.inst.id, seat))
                    .with_predictions(preds);
                if id == StrategyId::Csms {
                    bidder = bidder.with_oracle(self.inst.types.clone());
                }
                Seat::Search(bidder)
            }
        })
    }

    fn play(&self, comp: &Composition, run: &mut MatchupRun, log_decisions: bool) -> Result<()> {
        let inst = self.inst;
        let config = &inst.config;
        if comp.seats.len() != config.n {
            return Err(Error::Config(format!("composition {} has {} seats, instance has {}", comp.label(), comp.seats.len(), config.n)));
        }
        let mut seats: Vec<Seat> =
            comp.seats.iter().enumerate().map(|(s, &id)| self.seat(id, s, comp.id)).collect::<Result<_>>()?;
        let mut rng = stream(engine_seed(self.cfg.seed, inst.id, comp.id), &[]);
        let outcome = play_out(config, &inst.types, &mut seats, &mut rng)?;
        let label = comp.label();
        for (s, &id) in comp.seats.iter().enumerate() {
            run.records.push(CellRecord {
                instance_id: inst.id,
                composition: label.clone(),
                seat: s,
                strategy: id,
                utility: outcome.utilities[s],
                exposed: outcome.utilities[s] < 0.0,
                items_won: outcome.allocation[s].len() as u32,
                spend: outcome.spend[s],
                rounds: outcome.rounds,
            });
        }
        if log_decisions {
            for (s, seat) in seats.iter().enumerate() {
                if let Seat::Search(b) = seat {
                    run.decisions.extend(b.log().iter().map(|r| DecisionLogLine {
                        instance_id: inst.id,
                        composition: label.clone(),
                        seat: s,
                        strategy: comp.seats[s],
                        record: r.clone(),
                    }));
                }
            }
        }
        Ok(())
    }
}

fn run_instance(
    cfg: &ExperimentConfig,
    inst: &Instance,
    cache: Option<&InstancePredictions>,
    compositions: &[Composition],
    log_decisions: bool,
) -> MatchupRun {
    let mut run = MatchupRun::default();
    let needs_baselines = compositions
        .iter()
        .flat_map(|c| &c.seats)
        .any(|s| matches!(s, StrategyId::Epe | StrategyId::Edpe | StrategyId::Scpd));
    let baselines = match (cache, needs_baselines) {
        (Some(c), _) => Ok(Some(Cow::Borrowed(&c.baselines))),
        (None, true) => baseline_predictions(cfg, inst).map(|b| Some(Cow::Owned(b))),
        (None, false) => Ok(None),
    };
    let baselines = match baselines {
        Ok(b) => b,
        Err(e) => {
            for comp in compositions {
                run.cells += 1;
                run.skipped.push(SkippedCell { instance_id: inst.id, composition: comp.label(), reason: e.to_string() });
            }
            return run;
        }
    };
    let ctx = InstanceContext { cfg, inst, public: Arc::new(inst.public()), baselines, cache };
    for comp in compositions {
        run.cells += 1;
        let mut cell = MatchupRun::default();
        match ctx.play(comp, &mut cell, log_decisions) {
            Ok(()) => {
                run.records.extend(cell.records);
                run.decisions.extend(cell.decisions);
            }
            Err(e) => run.skipped.push(SkippedCell { instance_id: inst.id, composition: comp.label(), reason: e.to_string() }),
        }
    }
    run
}

/// Plays every instance under every composition on a pool of `jobs`
/// workers. Failing cells are recorded as skipped. The output is ordered by
/// instance, then composition order, then seat, whatever the scheduling.
pub fn run_matchup(
    cfg: &ExperimentConfig,
    instances: &[Instance],
    predictions: Option<&[InstancePredictions]>,
    compositions: &[Composition],
    jobs: usize,
    log_decisions: bool,
) -> Result<MatchupRun> {
    use rayon::prelude::*;
    if let Some(p) = predictions {
        if p.len() != instances.len() || p.iter().zip(instances).any(|(p, i)| p.instance_id != i.id) {
            return Err(Error::Config("prediction cache does not match the instances".into()));
        }
    }
    for comp in compositions {
        for &id in &comp.seats {
            search_config(cfg, id)?;
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start {jobs} workers: {e}")))?;
    let parts: Vec<MatchupRun> = pool.install(|| {
        instances
            .par_iter()
            .enumerate()
            .map(|(k, inst)| run_instance(cfg, inst, predictions.map(|p| &p[k]), compositions, log_decisions))
            .collect()
    });
    let mut run = MatchupRun::default();
    for p in parts {
        run.records.extend(p.records);
        run.skipped.extend(p.skipped);
        run.decisions.extend(p.decisions);
        run.cells += p.cells;
    }
    Ok(run)
}

const RECORD_COLUMNS: [&str; 9] =
    ["instance_id", "composition", "seat", "strategy", "utility", "exposed", "items_won", "spend", "rounds"];

pub fn write_records(path: &Path, records: &[CellRecord]) -> Result<()> {
    write_csv(path, &RECORD_COLUMNS, records)
}

pub fn read_records(path: &Path) -> Result<Vec<CellRecord>> {
    read_csv(path)
}

pub fn write_skipped(path: &Path, skipped: &[SkippedCell]) -> Result<()> {
    write_csv(path, &["instance_id", "composition", "reason"], skipped)
}

pub fn read_skipped(path: &Path) -> Result<Vec<SkippedCell>> {
    read_csv(path)
}

pub fn write_decisions(path: &Path, lines: &[DecisionLogLine]) -> Result<()> {
    let mut text = String::new();
    for line in lines {
        text.push_str(&serde_json::to_string(line).map_err(|e| Error::json(path, e))?);
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes `rows` with a header line; `columns` is the header of an empty
/// table.
pub(crate) fn write_csv<T: Serialize>(path: &Path, columns: &[&str], rows: &[T]) -> Result<()> {
    let csv_err = |e| Error::Csv { path: path.to_path_buf(), source: e };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    if rows.is_empty() {
        w.write_record(columns).map_err(csv_err)?;
    }
    for row in rows {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub(crate) fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let csv_err = |e| Error::Csv { path: path.to_path_buf(), source: e };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    r.deserialize().map(|row| row.map_err(csv_err)).collect()
}
