use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn saa(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_saa")).arg("--out").arg(out).args(args).output().expect("binary runs")
}

fn ok(out: &Path, args: &[&str]) {
    let o = saa(out, args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
}

fn header(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap_or("").to_string()
}

fn dir_contents(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn selftest_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let o = saa(tmp.path(), &["selftest"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn usage_and_config_errors_have_distinct_codes() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(saa(tmp.path(), &["gen", "--bogus"]).status.code(), Some(1));
    assert_eq!(saa(tmp.path(), &["run", "--a", "nobody", "--b", "sb"]).status.code(), Some(1));
    let bad = tmp.path().join("bad.json");
    fs::write(&bad, "{ not json").unwrap();
    assert_eq!(saa(tmp.path(), &["--config", bad.to_str().unwrap(), "gen"]).status.code(), Some(2));
    assert_eq!(saa(tmp.path(), &["--eta", "0.5", "--instances", "0", "gen"]).status.code(), Some(2));
}

#[test]
fn generation_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [a.path(), b.path()] {
        ok(dir, &["--seed", "7", "--instances", "3", "gen"]);
    }
    let left = dir_contents(&a.path().join("instances"));
    assert_eq!(left.len(), 3);
    assert_eq!(left, dir_contents(&b.path().join("instances")));
}

#[test]
fn pipeline_writes_documented_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path();
    ok(out, &["--seed", "3", "--instances", "10", "--jobs", "2", "gen"]);
    ok(out, &["--jobs", "2", "run", "--a", "sb", "--b", "null"]);
    ok(out, &["--jobs", "2", "--iters", "40", "run", "--a", "sdsms", "--b", "sb", "--compositions", "1", "--log-decisions"]);
    ok(out, &["analyze"]);
    let results = out.join("results");
    assert_eq!(
        header(&results.join("sb_vs_null.csv")),
        "instance_id,composition,seat,strategy,utility,exposed,items_won,spend,rounds"
    );
    let rows = fs::read_to_string(results.join("sb_vs_null.csv")).unwrap().lines().count();
    assert_eq!(rows, 1 + 10 * 4 * 3);
    assert_eq!(header(&results.join("sb_vs_null.skipped.csv")), "instance_id,composition,reason");
    let log = fs::read_to_string(results.join("sdsms_vs_sb.decisions.jsonl")).unwrap();
    assert!(log.lines().count() >= 10);
    for line in log.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["strategy"], "sdsms");
    }
    let analysis = out.join("analysis");
    assert_eq!(
        header(&analysis.join("indicators.csv")),
        "matchup,scope,strategy,uses,expected_utility,utility_half_width,expected_exposure,exposure_frequency,\
         exposure_frequency_half_width,avg_price_per_item,uses_without_items,items_won_ratio"
    );
    assert_eq!(header(&analysis.join("plot_utility.csv")), "series,x,y,half_width");
    assert_eq!(header(&analysis.join("plot_indicators.csv")), "series,x,y,half_width");
    for stem in ["sb_vs_null", "sdsms_vs_sb"] {
        let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(analysis.join(format!("{stem}.report.json"))).unwrap()).unwrap();
        assert_eq!(report["used"].as_u64().unwrap() + report["skipped"].as_u64().unwrap(), report["played"].as_u64().unwrap());
        assert!(analysis.join(format!("{stem}.empirical.json")).is_file());
    }
}
