mod common;

use navi::config::ScenarioConfig;
use navi::dissem::{DeliveryLog, Reception, RequestId, RequestRecord, Technology};
use navi::metrics::{
    covered_area, degree_cdf, delay_stats, median, overhead, percentile, read_csv, request_metrics,
    summarize, vi_usage, write_report, AggregateRow, CdfRow, RequestRow, RunReport, AGGREGATE_CSV,
    DEGREE_CDF_CSV, OVERHEAD_RATIO_METRIC, REQUESTS_CSV,
};
use navi::sim::{run, SimParams, SimTime};
use navi::trace::{MobilityTrace, VehicleId};
use navi::Strategy;
use proptest::prelude::*;

use common::{all_both, ids, params, static_trace};

/// 45 vehicles in 7 tight clusters 300 m apart: 7 VIs cover everything
/// at a 60 m range.
fn seven_clusters() -> MobilityTrace {
    let sizes = [7, 7, 7, 6, 6, 6, 6];
    let mut pts = Vec::new();
    for (c, n) in sizes.iter().enumerate() {
        let (cx, cy) = (20.0 + 300.0 * (c % 4) as f64, 20.0 + 300.0 * (c / 4) as f64);
        for i in 0..*n {
            pts.push((cx + 4.0 * i as f64, cy + 2.0 * (i % 2) as f64));
        }
    }
    static_trace(&pts, 3.0)
}

fn one_request(strategy: Strategy, k: usize) -> DeliveryLog {
    let trace = seven_clusters();
    let mut p = SimParams {
        strategy,
        ..params(60.0, 1.0)
    };
    p.request.k = k;
    run(p, &trace, &all_both(&trace)).unwrap()
}

fn record(population: &[u32]) -> RequestRecord {
    RequestRecord {
        id: RequestId(0),
        issue_time: SimTime::ZERO,
        strategy: Strategy::Navi,
        k: 5,
        hop_limit: 1,
        population: ids(population),
        selection: None,
        failed: false,
    }
}

fn rx(v: u32, ms: u64) -> Reception {
    Reception {
        request: RequestId(0),
        vehicle: VehicleId(v),
        time: SimTime::from_millis(ms),
        technology: Technology::ShortRange,
        hop: 1,
    }
}

#[test]
fn covered_area_arithmetic() {
    let rec = record(&(0..45).collect::<Vec<_>>());
    let log = DeliveryLog {
        receptions: (0..5).map(|v| rx(v, 55)).chain([rx(99, 55)]).collect(),
        ..Default::default()
    };
    let pct = covered_area(&log, &rec).unwrap();
    assert!((pct - 11.11).abs() < 0.01, "{pct}");
    assert_eq!(covered_area(&log, &record(&[])), None);
    let all = DeliveryLog {
        receptions: (0..45).map(|v| rx(v, 50)).collect(),
        ..Default::default()
    };
    assert_eq!(covered_area(&all, &rec), Some(100.0));
    assert_eq!(vi_usage(None), 0);
}

#[test]
fn all_lte_bytes_for_45_vehicles() {
    let log = one_request(Strategy::AllLte, 5);
    let o = overhead(&log, RequestId(0));
    assert_eq!((o.lte, o.short_range), (25_300, 0));
    let stats = delay_stats(&log, &log.requests[0]).unwrap();
    assert_eq!((stats.mean, stats.p50, stats.p95, stats.max), (50.0, 50.0, 50.0, 50.0));
}

#[test]
fn navi_with_seven_vis_matches_the_byte_identity() {
    let log = one_request(Strategy::Navi, 45);
    let rec = &log.requests[0];
    assert_eq!(vi_usage(rec.selection.as_ref()), 7);
    assert_eq!(covered_area(&log, rec), Some(100.0));
    let o = overhead(&log, rec.id);
    assert_eq!(o.lte, 100 + 7 * (200 + 500));
    assert_eq!(o.short_range, 7 * (500 + 40));
    assert!(o.total() < 25_300);
    let delays = navi::metrics::delays_ms(&log, rec);
    assert_eq!(delays.iter().filter(|d| **d == 50.0).count(), 7);
    assert_eq!(delays.iter().filter(|d| **d == 55.0).count(), 38);
    let navi_mean = delay_stats(&log, rec).unwrap().mean;
    let lte = one_request(Strategy::AllLte, 45);
    assert!(navi_mean >= delay_stats(&lte, &lte.requests[0]).unwrap().mean);
}

#[test]
fn per_technology_bytes_add_up_to_the_logged_total() {
    let log = one_request(Strategy::Navi, 3);
    for m in request_metrics(&log) {
        let logged: u64 = log
            .transmissions_for(m.request)
            .filter(|t| t.purpose.is_dissemination())
            .map(|t| t.bytes)
            .sum();
        assert_eq!(m.overhead.total(), logged);
        assert!(m.vi_count <= m.k);
    }
}

#[test]
fn failed_request_costs_only_the_request_packet() {
    let trace = static_trace(&[(0.0, 0.0)], 2.0);
    let mut p = params(60.0, 1.0);
    p.request.validity = 0.01;
    let log = run(p, &trace, &all_both(&trace)).unwrap();
    assert!(log.requests[0].failed);
    let o = overhead(&log, RequestId(0));
    assert_eq!((o.lte, o.short_range), (100, 0));
    assert_eq!(delay_stats(&log, &log.requests[0]), None);
}

#[test]
fn confidence_intervals() {
    let s = summarize(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
    assert_eq!(s.mean, 3.0);
    // t(0.975, 4) = 2.776445
    let expected = 2.776445 * (2.5f64 / 5.0).sqrt();
    assert!((s.half_width().unwrap() - expected).abs() < 1e-5);

    let big: Vec<f64> = (0..30).map(|i| f64::from(i % 2)).collect();
    let s = summarize(&big).unwrap();
    let sd = (30.0 * 0.25 / 29.0f64).sqrt();
    assert!((s.half_width().unwrap() - 1.959964 * sd / 30f64.sqrt()).abs() < 1e-5);

    let small = summarize(&big[..10]).unwrap().half_width().unwrap();
    assert!(s.half_width().unwrap() < small);
    assert_eq!(summarize(&[4.0; 12]).unwrap().half_width(), Some(0.0));
}

#[test]
fn percentiles_and_medians() {
    let s = [50.0, 50.0, 55.0, 55.0, 55.0];
    assert_eq!(percentile(&s, 50.0), 55.0);
    assert_eq!(percentile(&s, 95.0), 55.0);
    assert_eq!(median(&[3, 1, 2]), Some(2));
    assert_eq!(median(&[4, 1, 3, 2]), Some(2));
    assert_eq!(median(&[]), None);
}

#[test]
fn empty_report_writes_header_only_files() {
    let dir = tempfile::tempdir().unwrap();
    write_report(dir.path(), &[], &[]).unwrap();
    for (name, header) in [
        (REQUESTS_CSV, "config_id,request_id,strategy,k,tx_power_dbm,covered_pct,vi_count,bytes_lte,bytes_sr,delay_mean_ms,delay_p95_ms"),
        (AGGREGATE_CSV, "config_id,metric,mean,ci95_low,ci95_high,n"),
        (DEGREE_CDF_CSV, "tx_power_dbm,degree,cdf"),
    ] {
        let text = std::fs::read_to_string(dir.path().join(name)).unwrap();
        assert_eq!(text, format!("{header}\n"));
    }
}

fn close(a: f64, b: f64) -> bool {
    a == b || ((a - b) / a.abs().max(b.abs())).abs() < 1e-6
}

#[test]
fn report_round_trips_and_has_one_aggregate_row_per_metric_and_config() {
    let cfg = ScenarioConfig {
        duration: 8.0,
        ..ScenarioConfig::reference()
    };
    let ks = [1, 3];
    let txs = [16.0, 23.0];
    let strategies = [Strategy::Navi, Strategy::AllLte];
    let sweep = navi::run_sweep(&cfg, &ks, &txs, &strategies).unwrap();
    assert!(sweep.is_success());
    assert_eq!(sweep.runs.len(), 8);
    let dir = tempfile::tempdir().unwrap();
    sweep.write(dir.path()).unwrap();

    let reports: Vec<RunReport> = sweep.reports();
    let rows: Vec<RequestRow> = read_csv(&dir.path().join(REQUESTS_CSV)).unwrap();
    assert_eq!(rows.len(), 8 * 8);
    let expected = navi::metrics::request_rows(&reports);
    for (got, want) in rows.iter().zip(&expected) {
        assert_eq!(got.config_id, want.config_id);
        assert_eq!((got.request_id, got.k, got.vi_count, got.bytes_lte, got.bytes_sr), (want.request_id, want.k, want.vi_count, want.bytes_lte, want.bytes_sr));
        for (a, b) in [(got.covered_pct, want.covered_pct), (got.delay_mean_ms, want.delay_mean_ms), (got.delay_p95_ms, want.delay_p95_ms)] {
            assert_eq!(a.is_some(), b.is_some());
            if let (Some(a), Some(b)) = (a, b) {
                assert!(close(a, b), "{a} vs {b}");
            }
        }
    }

    let agg: Vec<AggregateRow> = read_csv(&dir.path().join(AGGREGATE_CSV)).unwrap();
    let per_config = ks.len() * txs.len() * strategies.len();
    for metric in ["covered_pct", "vi_count", "bytes_lte", "bytes_sr", "bytes_total", "delay_mean_ms", "delay_p95_ms", "background_bytes_lte", "background_bytes_sr"] {
        assert_eq!(agg.iter().filter(|r| r.metric == metric).count(), per_config, "{metric}");
    }
    let ratios: Vec<_> = agg.iter().filter(|r| r.metric == OVERHEAD_RATIO_METRIC).collect();
    assert_eq!(ratios.len(), ks.len() * txs.len());
    assert!(ratios.iter().all(|r| r.config_id.starts_with("navi")));
    for r in &agg {
        if let (Some(lo), Some(hi)) = (r.ci95_low, r.ci95_high) {
            assert!(lo <= r.mean && r.mean <= hi);
        }
    }

    let cdf: Vec<CdfRow> = read_csv(&dir.path().join(DEGREE_CDF_CSV)).unwrap();
    for tx in txs {
        let curve: Vec<_> = cdf.iter().filter(|r| r.tx_power_dbm == tx).collect();
        assert!(curve.windows(2).all(|w| w[0].degree < w[1].degree && w[0].cdf <= w[1].cdf));
        assert!(close(curve.last().unwrap().cdf, 1.0));
    }
}

proptest! {
    #[test]
    fn cdf_is_monotone_and_ends_at_one(samples in prop::collection::vec(0usize..50, 1..200)) {
        let cdf = degree_cdf(&samples);
        prop_assert!(cdf.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 <= w[1].1));
        prop_assert!((cdf.last().unwrap().1 - 1.0).abs() < 1e-12);
        let m = median(&samples).unwrap();
        let below = samples.iter().filter(|s| **s <= m).count();
        prop_assert!(2 * below >= samples.len());
    }

    #[test]
    fn ci_brackets_the_mean(samples in prop::collection::vec(-1e3..1e3f64, 2..60)) {
        let s = summarize(&samples).unwrap();
        let (lo, hi) = s.ci95.unwrap();
        prop_assert!(lo <= s.mean + 1e-9 && s.mean <= hi + 1e-9);
        prop_assert_eq!(s.n, samples.len());
    }
}
