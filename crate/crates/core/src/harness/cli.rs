//! Command-line front end: `gen`, `predict`, `run`, `analyze`, `selftest`.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;

use super::cache::{load_predictions, write_predictions};
use super::config::{ExperimentConfig, StrategyId};
use super::empirical::empirical_game;
use super::indicators::{report, Indicators};
use super::instance::{generate_instances, list_files, load_instances, write_json};
use super::matchup::{
    pair_compositions, read_records, read_skipped, run_matchup, write_csv, write_decisions, write_records, write_skipped,
};
use super::selftest::run_selftest;
use crate::error::{Error, Result};

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "saa", version, about = "Simultaneous ascending auction experiments")]
struct Cli {
    /// Master seed (overrides the configuration).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Experiment configuration (JSON). Defaults to <out>/config.json when
    /// present, otherwise the preset of --eta.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Search iterations per decision.
    #[arg(long, global = true)]
    iters: Option<u64>,
    /// Search seconds per decision.
    #[arg(long, global = true)]
    time: Option<f64>,
    /// Worker threads.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Certainty level of the preset used when no configuration is given.
    #[arg(long, global = true)]
    eta: Option<f64>,
    /// Number of instances (overrides the configuration).
    #[arg(long, global = true)]
    instances: Option<u32>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate instance files and write the resolved configuration.
    Gen,
    /// Compute the offline closing-price prediction caches.
    Predict,
    /// Play every instance under the compositions of a strategy pair.
    Run {
        #[arg(long)]
        a: StrategyId,
        #[arg(long)]
        b: StrategyId,
        /// Numbers of A seats to play (default: all).
        #[arg(long, value_delimiter = ',')]
        compositions: Option<Vec<usize>>,
        /// Also write the search bidders' decisions as JSON lines.
        #[arg(long)]
        log_decisions: bool,
    },
    /// Indicator tables, empirical games and plot data from the results.
    Analyze,
    /// Run the built-in invariant checks.
    Selftest,
}

impl Cli {
    fn resolve_config(&self) -> Result<ExperimentConfig> {
        let default_path = self.out.join("config.json");
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None if default_path.is_file() => ExperimentConfig::load(&default_path)?,
            None => ExperimentConfig::preset(self.eta.unwrap_or(0.5)),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(n) = self.instances {
            cfg.instances = n;
        }
        if self.iters.is_some() || self.time.is_some() {
            cfg.search.iterations = self.iters;
            cfg.search.time_secs = self.time;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn matchup_stem(a: StrategyId, b: StrategyId) -> String {
    format!("{a}_vs_{b}")
}

fn parse_stem(stem: &str) -> Option<(StrategyId, StrategyId)> {
    let (a, b) = stem.split_once("_vs_")?;
    Some((a.parse().ok()?, b.parse().ok()?))
}

const INDICATOR_COLUMNS: [&str; 12] = [
    "matchup",
    "scope",
    "strategy",
    "uses",
    "expected_utility",
    "utility_half_width",
    "expected_exposure",
    "exposure_frequency",
    "exposure_frequency_half_width",
    "avg_price_per_item",
    "uses_without_items",
    "items_won_ratio",
];

const PLOT_COLUMNS: [&str; 4] = ["series", "x", "y", "half_width"];

#[derive(Serialize)]
struct IndicatorRow<'a> {
    matchup: &'a str,
    scope: &'a str,
    strategy: StrategyId,
    uses: usize,
    expected_utility: f64,
    utility_half_width: f64,
    expected_exposure: f64,
    exposure_frequency: f64,
    exposure_frequency_half_width: f64,
    avg_price_per_item: Option<f64>,
    uses_without_items: usize,
    items_won_ratio: f64,
}

impl<'a> IndicatorRow<'a> {
    fn new(matchup: &'a str, scope: &'a str, i: &Indicators) -> Self {
        IndicatorRow {
            matchup,
            scope,
            strategy: i.strategy,
            uses: i.uses,
            expected_utility: i.expected_utility,
            utility_half_width: i.utility_half_width,
            expected_exposure: i.expected_exposure,
            exposure_frequency: i.exposure_frequency,
            exposure_frequency_half_width: i.exposure_frequency_half_width,
            avg_price_per_item: i.avg_price_per_item,
            uses_without_items: i.uses_without_items,
            items_won_ratio: i.items_won_ratio,
        }
    }
}

#[derive(Serialize)]
struct PlotRow {
    series: String,
    x: String,
    y: f64,
    half_width: f64,
}

fn gen(cfg: &ExperimentConfig, out: &Path, jobs: usize) -> Result<()> {
    create_dir(out)?;
    cfg.save(&out.join("config.json"))?;
    let paths = with_pool(jobs, || generate_instances(cfg, &out.join("instances")))??;
    println!("wrote {} instances to {}", paths.len(), out.join("instances").display());
    Ok(())
}

fn predict(cfg: &ExperimentConfig, out: &Path, jobs: usize) -> Result<()> {
    let instances = load_instances(&out.join("instances"))?;
    let dir = out.join("predictions");
    let paths = with_pool(jobs, || write_predictions(cfg, &instances, &dir))??;
    println!("wrote {} prediction caches to {}", paths.len(), dir.display());
    Ok(())
}

fn run(cfg: &ExperimentConfig, out: &Path, jobs: usize, a: StrategyId, b: StrategyId, counts: Option<&[usize]>, log: bool) -> Result<()> {
    let instances = load_instances(&out.join("instances"))?;
    let preds = load_predictions(&out.join("predictions"), &instances)?;
    let n = instances[0].config.n;
    let comps = pair_compositions(a, b, n, counts)?;
    let result = run_matchup(cfg, &instances, preds.as_deref(), &comps, jobs, log)?;
    let dir = out.join("results");
    create_dir(&dir)?;
    let stem = matchup_stem(a, b);
    write_records(&dir.join(format!("{stem}.csv")), &result.records)?;
    write_skipped(&dir.join(format!("{stem}.skipped.csv")), &result.skipped)?;
    if log {
        write_decisions(&dir.join(format!("{stem}.decisions.jsonl")), &result.decisions)?;
    }
    println!(
        "{stem}: {} cells played, {} skipped, results in {}",
        result.cells - result.skipped.len(),
        result.skipped.len(),
        dir.display()
    );
    Ok(())
}

fn analyze(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let dir = out.join("results");
    let mut files = list_files(&dir, "", ".csv")?;
    files.retain(|p| !p.to_string_lossy().ends_with(".skipped.csv"));
    files.sort();
    let analysis = out.join("analysis");
    create_dir(&analysis)?;
    let mut rows: Vec<(String, String, Indicators)> = Vec::new();
    let mut utility_plot = Vec::new();
    let mut analyzed = 0;
    for path in &files {
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("").to_string();
        let Some((a, b)) = parse_stem(&stem) else { continue };
        let records = read_records(path)?;
        let skipped_path = dir.join(format!("{stem}.skipped.csv"));
        let skipped = if skipped_path.is_file() { read_skipped(&skipped_path)? } else { Vec::new() };
        let rep = report(a, b, cfg.n, cfg.m, &records, &skipped);
        let game = empirical_game(a, b, cfg.n, &records);
        write_json(&analysis.join(format!("{stem}.report.json")), &rep)?;
        write_json(&analysis.join(format!("{stem}.empirical.json")), &game)?;
        for c in &rep.compositions {
            for i in &c.strategies {
                rows.push((stem.clone(), c.composition.clone(), i.clone()));
            }
        }
        for i in &rep.mixed {
            rows.push((stem.clone(), "mixed".into(), i.clone()));
        }
        for p in &game.payoffs {
            for (s, e) in [(a, p.utility_a), (b, p.utility_b)] {
                if let Some(e) = e {
                    utility_plot.push(PlotRow {
                        series: format!("{stem}:{s}"),
                        x: p.count_a.to_string(),
                        y: e.mean,
                        half_width: e.half_width,
                    });
                }
            }
        }
        analyzed += 1;
    }
    let table: Vec<IndicatorRow> = rows.iter().map(|(m, s, i)| IndicatorRow::new(m, s, i)).collect();
    write_csv(&analysis.join("indicators.csv"), &INDICATOR_COLUMNS, &table)?;
    write_csv(&analysis.join("plot_utility.csv"), &PLOT_COLUMNS, &utility_plot)?;
    let mut indicator_plot = Vec::new();
    for (m, scope, i) in &rows {
        let self_play = parse_stem(m).is_some_and(|(a, b)| a == b);
        if scope != "mixed" && !self_play {
            continue;
        }
        let x = format!("{m}:{}", i.strategy);
        for (series, y, hw) in [
            ("expected_utility", i.expected_utility, i.utility_half_width),
            ("expected_exposure", i.expected_exposure, 0.0),
            ("exposure_frequency", i.exposure_frequency, i.exposure_frequency_half_width),
            ("avg_price_per_item", i.avg_price_per_item.unwrap_or(f64::NAN), 0.0),
            ("items_won_ratio", i.items_won_ratio, 0.0),
        ] {
            indicator_plot.push(PlotRow { series: series.into(), x: x.clone(), y, half_width: hw });
        }
    }
    write_csv(&analysis.join("plot_indicators.csv"), &PLOT_COLUMNS, &indicator_plot)?;
    println!("analyzed {analyzed} matchups into {}", analysis.display());
    Ok(())
}

fn with_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start {jobs} workers: {e}")))?;
    Ok(pool.install(f))
}

fn execute(cli: &Cli) -> Result<()> {
    if let Command::Selftest = cli.command {
        let results = run_selftest(cli.seed.unwrap_or(0));
        let mut failed = 0;
        for r in &results {
            match &r.failure {
                None => println!("ok    {}", r.name),
                Some(f) => {
                    failed += 1;
                    println!("FAIL  {}: {f}", r.name);
                }
            }
        }
        if failed > 0 {
            return Err(Error::Strategy { strategy: "selftest".into(), reason: format!("{failed} checks failed") });
        }
        return Ok(());
    }
    let cfg = cli.resolve_config()?;
    match &cli.command {
        Command::Gen => gen(&cfg, &cli.out, cli.jobs),
        Command::Predict => predict(&cfg, &cli.out, cli.jobs),
        Command::Run { a, b, compositions, log_decisions } => {
            run(&cfg, &cli.out, cli.jobs, *a, *b, compositions.as_deref(), *log_decisions)
        }
        Command::Analyze => analyze(&cfg, &cli.out),
        Command::Selftest => unreachable!(),
    }
}

/// Runs the command line and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) => EXIT_CONFIG,
                _ => EXIT_RUNTIME,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_exit_with_one() {
        assert_eq!(main_with_args(["saa", "frobnicate"]), EXIT_USAGE);
        assert_eq!(main_with_args(["saa", "--bogus", "selftest"]), EXIT_USAGE);
        assert_eq!(main_with_args(["saa", "run", "--a", "nope", "--b", "sb"]), EXIT_USAGE);
    }

    #[test]
    fn bad_config_exits_with_two() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().to_str().unwrap();
        assert_eq!(main_with_args(["saa", "--out", out, "--instances", "0", "gen"]), EXIT_CONFIG);
        let cfg = dir.path().join("bad.json");
        std::fs::write(&cfg, "{").unwrap();
        assert_eq!(main_with_args(["saa", "--out", out, "--config", cfg.to_str().unwrap(), "gen"]), EXIT_CONFIG);
    }

    #[test]
    fn missing_instances_exit_with_three() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("nothing");
        assert_eq!(main_with_args(["saa", "--out", out.to_str().unwrap(), "predict"]), EXIT_RUNTIME);
    }

    #[test]
    fn stem_round_trip() {
        assert_eq!(parse_stem(&matchup_stem(StrategyId::SmsExpect, StrategyId::Sb)), Some((StrategyId::SmsExpect, StrategyId::Sb)));
        assert_eq!(parse_stem("x_vs_y"), None);
    }
}
