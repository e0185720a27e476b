use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use navi::metrics::{read_csv, AggregateRow, RequestRow, AGGREGATE_CSV, DEGREE_CDF_CSV, REQUESTS_CSV};

fn navi_sim(args: &[&str]) -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_navi-sim"));
    cmd.args(args).env_remove("NAVI_SIM_THREADS");
    cmd
}

fn scenario(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(name)
        .display()
        .to_string()
}

fn ok(out: Output) -> Output {
    assert!(
        out.status.success(),
        "status {:?}\nstdout: {}\nstderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn short_config(dir: &Path, duration: f64) -> PathBuf {
    let path = dir.join("short.conf");
    let text = std::fs::read_to_string(scenario("reference.conf"))
        .unwrap()
        .replace("duration_s = 180", &format!("duration_s = {duration}"));
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn run_writes_three_csvs_and_event_logs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    ok(navi_sim(&["run", "--config", &scenario("default.conf"), "--seed", "7", "--out", out.to_str().unwrap()])
        .output()
        .unwrap());
    for f in [REQUESTS_CSV, AGGREGATE_CSV, DEGREE_CDF_CSV] {
        assert!(out.join(f).is_file(), "{f}");
    }
    let rows: Vec<RequestRow> = read_csv(&out.join(REQUESTS_CSV)).unwrap();
    let mut per_config: BTreeMap<String, usize> = BTreeMap::new();
    for r in &rows {
        *per_config.entry(r.config_id.clone()).or_default() += 1;
    }
    assert_eq!(per_config.len(), 6);
    assert!(per_config.values().all(|n| *n == 180), "{per_config:?}");
    let events = std::fs::read_to_string(out.join("events_navi_k5_tx23.jsonl")).unwrap();
    assert!(events.lines().all(|l| l.starts_with("{\"record\":")));
    assert!(!dir.path().join("out").join(format!("{REQUESTS_CSV}.tmp")).exists());
}

#[test]
fn identical_invocations_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let conf = short_config(dir.path(), 30.0);
    let run = |name: &str| {
        let out = dir.path().join(name);
        ok(navi_sim(&["run", "--config", conf.to_str().unwrap(), "--out", out.to_str().unwrap()])
            .output()
            .unwrap());
        out
    };
    let (a, b) = (run("a"), run("b"));
    for f in [REQUESTS_CSV, AGGREGATE_CSV, DEGREE_CDF_CSV, "events_all_lte_k5_tx16.jsonl"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn sweep_covers_the_cartesian_product() {
    let dir = tempfile::tempdir().unwrap();
    let conf = short_config(dir.path(), 5.0);
    let out = dir.path().join("sweep");
    let o = ok(navi_sim(&[
        "sweep", "--config", conf.to_str().unwrap(), "--k", "1..3", "--tx", "16,23",
        "--strategy", "navi,all_lte", "--out", out.to_str().unwrap(),
    ])
    .env("NAVI_SIM_THREADS", "2")
    .output()
    .unwrap());
    assert!(String::from_utf8_lossy(&o.stdout).contains("12 runs, 0 failed"));
    let agg: Vec<AggregateRow> = read_csv(&out.join(AGGREGATE_CSV)).unwrap();
    assert_eq!(agg.iter().filter(|r| r.metric == "covered_pct").count(), 12);
    let rows: Vec<RequestRow> = read_csv(&out.join(REQUESTS_CSV)).unwrap();
    assert_eq!(rows.len(), 12 * 5);

    let list = dir.path().join("list");
    ok(navi_sim(&["sweep", "--config", conf.to_str().unwrap(), "--k", "2,4", "--out", list.to_str().unwrap()])
        .output()
        .unwrap());
    let agg: Vec<AggregateRow> = read_csv(&list.join(AGGREGATE_CSV)).unwrap();
    assert_eq!(agg.iter().filter(|r| r.metric == "vi_count").count(), 2 * 3 * 2);
}

#[test]
fn gen_trace_reproduces_the_bundled_trace() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.tcl");
    ok(navi_sim(&[
        "gen-trace", "--seed", "7", "--vehicles", "45", "--duration", "180", "--area", "600x730",
        "--out", path.to_str().unwrap(),
    ])
    .output()
    .unwrap());
    assert_eq!(std::fs::read_to_string(&path).unwrap(), navi::REFERENCE_TRACE_NS2);
}

#[test]
fn errors_exit_nonzero_with_a_message() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.conf");
    std::fs::write(&bad, "[radio]\nbogus = 1\n").unwrap();
    let out = navi_sim(&["run", "--config", bad.to_str().unwrap(), "--out", dir.path().to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus"));

    let conf = short_config(dir.path(), 5.0);
    let out = navi_sim(&["run", "--config", conf.to_str().unwrap(), "--out", dir.path().to_str().unwrap()])
        .env("NAVI_SIM_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("NAVI_SIM_THREADS"));

    let out = navi_sim(&["sweep", "--config", conf.to_str().unwrap(), "--k", "0..2"]).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn failed_runs_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("t.tcl"),
        "$node_(0) set X_ 0.0\n$node_(0) set Y_ 0.0\n$ns_ at 1.0 \"$node_(0) setdest 5.0 0.0 1.0\"\n",
    )
    .unwrap();
    let conf = dir.path().join("s.conf");
    std::fs::write(&conf, "[scenario]\nduration_s = 30\n[trace]\nsource = file\npath = t.tcl\n").unwrap();
    let out = navi_sim(&["run", "--config", conf.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("failed"));
    let rows = std::fs::read_to_string(dir.path().join("o").join(REQUESTS_CSV)).unwrap();
    assert_eq!(rows.lines().count(), 1);
}
