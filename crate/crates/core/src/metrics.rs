//! Covered area, VI usage, overhead and delay per request, aggregated
//! across requests with 95% confidence intervals, plus CSV output.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};
use thiserror::Error;

use crate::dissem::{DeliveryLog, Purpose, RequestId, RequestRecord, Strategy, Technology};
use crate::geoserver::SelectionResult;

/// Samples below this count use Student-t quantiles, at or above it the
/// normal approximation.
pub const T_DISTRIBUTION_BELOW: usize = 30;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("i/o on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> MetricsError + '_ {
    move |source| MetricsError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Bytes per technology.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Overhead {
    pub lte: u64,
    pub short_range: u64,
}

impl Overhead {
    pub fn total(&self) -> u64 {
        self.lte + self.short_range
    }

    fn add(&mut self, technology: Technology, bytes: u64) {
        match technology {
            Technology::Lte => self.lte += bytes,
            Technology::ShortRange => self.short_range += bytes,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayStats {
    pub mean: f64,
    pub p50: f64,
    pub p95: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestMetrics {
    pub request: RequestId,
    pub strategy: Strategy,
    pub k: usize,
    /// Absent when no vehicle was in the area.
    pub covered_area_pct: Option<f64>,
    pub vi_count: usize,
    pub overhead: Overhead,
    /// First-reception delays in ms, one per receiving vehicle.
    pub delays: Vec<f64>,
}

impl RequestMetrics {
    pub fn delay_stats(&self) -> Option<DelayStats> {
        summarize_delays(&self.delays)
    }
}

/// Percentage of the in-area population that received the request.
pub fn covered_area(log: &DeliveryLog, record: &RequestRecord) -> Option<f64> {
    if record.population.is_empty() {
        return None;
    }
    let received = log
        .receptions_for(record.id)
        .filter(|rx| record.population.binary_search(&rx.vehicle).is_ok())
        .count();
    Some(100.0 * received as f64 / record.population.len() as f64)
}

pub fn vi_usage(selection: Option<&SelectionResult>) -> usize {
    selection.map_or(0, |s| s.selected.len())
}

/// Dissemination bytes attributed to `id`, split by technology.
pub fn overhead(log: &DeliveryLog, id: RequestId) -> Overhead {
    let mut out = Overhead::default();
    for tx in log.transmissions_for(id).filter(|t| t.purpose.is_dissemination()) {
        out.add(tx.technology, tx.bytes);
    }
    out
}

/// CAM and neighbor-table upload bytes over the whole run.
pub fn background_overhead(log: &DeliveryLog) -> Overhead {
    let mut out = Overhead::default();
    for tx in &log.transmissions {
        if matches!(tx.purpose, Purpose::Cam | Purpose::NtUpload) {
            out.add(tx.technology, tx.bytes);
        }
    }
    out
}

pub fn delays_ms(log: &DeliveryLog, record: &RequestRecord) -> Vec<f64> {
    log.receptions_for(record.id)
        .map(|rx| rx.time.saturating_sub(record.issue_time).as_millis_f64())
        .collect()
}

pub fn delay_stats(log: &DeliveryLog, record: &RequestRecord) -> Option<DelayStats> {
    summarize_delays(&delays_ms(log, record))
}

fn summarize_delays(delays: &[f64]) -> Option<DelayStats> {
    if delays.is_empty() {
        return None;
    }
    let mut sorted = delays.to_vec();
    sorted.sort_by(f64::total_cmp);
    Some(DelayStats {
        mean: sorted.iter().sum::<f64>() / sorted.len() as f64,
        p50: percentile(&sorted, 50.0),
        p95: percentile(&sorted, 95.0),
        max: sorted[sorted.len() - 1],
    })
}

/// Nearest-rank percentile of an ascending, non-empty slice.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of an empty sample");
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

pub fn request_metrics(log: &DeliveryLog) -> Vec<RequestMetrics> {
    log.requests
        .iter()
        .map(|rec| RequestMetrics {
            request: rec.id,
            strategy: rec.strategy,
            k: rec.k,
            covered_area_pct: covered_area(log, rec),
            vi_count: vi_usage(rec.selection.as_ref()),
            overhead: overhead(log, rec.id),
            delays: delays_ms(log, rec),
        })
        .collect()
}

/// Mean with a two-sided 95% confidence interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    /// Absent for fewer than two samples.
    pub ci95: Option<(f64, f64)>,
    pub n: usize,
}

impl Summary {
    pub fn half_width(&self) -> Option<f64> {
        self.ci95.map(|(lo, hi)| (hi - lo) / 2.0)
    }
}

/// Mean and 95% CI of `samples`; `None` when empty.
pub fn summarize(samples: &[f64]) -> Option<Summary> {
    let n = samples.len();
    if n == 0 {
        return None;
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return Some(Summary { mean, ci95: None, n });
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let quantile = if n < T_DISTRIBUTION_BELOW {
        StudentsT::new(0.0, 1.0, (n - 1) as f64)
            .expect("degrees of freedom are positive")
            .inverse_cdf(0.975)
    } else {
        Normal::new(0.0, 1.0).expect("unit normal").inverse_cdf(0.975)
    };
    let half = quantile * (var / n as f64).sqrt();
    Some(Summary {
        mean,
        ci95: Some((mean - half, mean + half)),
        n,
    })
}

/// Empirical CDF of integer samples: `(value, P(X <= value))` for each
/// distinct value, ascending.
pub fn degree_cdf(samples: &[usize]) -> Vec<(usize, f64)> {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for s in samples {
        *counts.entry(*s).or_default() += 1;
    }
    let n = samples.len() as f64;
    let mut acc = 0;
    counts
        .into_iter()
        .map(|(d, c)| {
            acc += c;
            (d, acc as f64 / n)
        })
        .collect()
}

/// Median of integer samples (lower median for even counts).
pub fn median(samples: &[usize]) -> Option<usize> {
    let mut s = samples.to_vec();
    s.sort_unstable();
    s.get(s.len().saturating_sub(1) / 2).copied()
}

/// One configuration of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfigKey {
    pub strategy: Strategy,
    pub k: usize,
    pub tx_power_dbm: f64,
}

impl ConfigKey {
    pub fn id(&self) -> String {
        format!("{}_k{}_tx{}", self.strategy, self.k, self.tx_power_dbm)
    }
}

/// Output of one simulation run, reduced to what the reports need.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub config: ConfigKey,
    pub requests: Vec<RequestMetrics>,
    pub background: Overhead,
}

impl RunReport {
    pub fn from_log(config: ConfigKey, log: &DeliveryLog) -> Self {
        Self {
            config,
            requests: request_metrics(log),
            background: background_overhead(log),
        }
    }

    pub fn metric(&self, f: impl Fn(&RequestMetrics) -> Option<f64>) -> Vec<f64> {
        self.requests.iter().filter_map(f).collect()
    }

    pub fn mean_covered_pct(&self) -> Option<f64> {
        summarize(&self.metric(|r| r.covered_area_pct)).map(|s| s.mean)
    }

    pub fn mean_vi_count(&self) -> Option<f64> {
        summarize(&self.metric(|r| Some(r.vi_count as f64))).map(|s| s.mean)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestRow {
    pub config_id: String,
    pub request_id: u32,
    pub strategy: Strategy,
    pub k: usize,
    pub tx_power_dbm: f64,
    pub covered_pct: Option<f64>,
    pub vi_count: usize,
    pub bytes_lte: u64,
    pub bytes_sr: u64,
    pub delay_mean_ms: Option<f64>,
    pub delay_p95_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub config_id: String,
    pub metric: String,
    pub mean: f64,
    pub ci95_low: Option<f64>,
    pub ci95_high: Option<f64>,
    pub n: usize,
}

impl AggregateRow {
    fn new(config_id: &str, metric: &str, s: Summary) -> Self {
        Self {
            config_id: config_id.to_string(),
            metric: metric.to_string(),
            mean: s.mean,
            ci95_low: s.ci95.map(|c| c.0),
            ci95_high: s.ci95.map(|c| c.1),
            n: s.n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdfRow {
    pub tx_power_dbm: f64,
    pub degree: usize,
    pub cdf: f64,
}

pub fn request_rows(reports: &[RunReport]) -> Vec<RequestRow> {
    let mut rows = Vec::new();
    for rep in reports {
        let id = rep.config.id();
        for m in &rep.requests {
            let stats = m.delay_stats();
            rows.push(RequestRow {
                config_id: id.clone(),
                request_id: m.request.0,
                strategy: m.strategy,
                k: m.k,
                tx_power_dbm: rep.config.tx_power_dbm,
                covered_pct: m.covered_area_pct,
                vi_count: m.vi_count,
                bytes_lte: m.overhead.lte,
                bytes_sr: m.overhead.short_range,
                delay_mean_ms: stats.map(|s| s.mean),
                delay_p95_ms: stats.map(|s| s.p95),
            });
        }
    }
    rows
}

/// Label of the per-request ratio between NAVI and All-LTE total
/// dissemination bytes, emitted for NAVI configurations that have an
/// All-LTE counterpart at the same tx power.
pub const OVERHEAD_RATIO_METRIC: &str = "overhead_ratio_navi_over_all_lte";

pub fn aggregate_rows(reports: &[RunReport]) -> Vec<AggregateRow> {
    let mut rows = Vec::new();
    for rep in reports {
        let id = rep.config.id();
        let per_request: [(&str, Vec<f64>); 7] = [
            ("covered_pct", rep.metric(|r| r.covered_area_pct)),
            ("vi_count", rep.metric(|r| Some(r.vi_count as f64))),
            ("bytes_lte", rep.metric(|r| Some(r.overhead.lte as f64))),
            ("bytes_sr", rep.metric(|r| Some(r.overhead.short_range as f64))),
            ("bytes_total", rep.metric(|r| Some(r.overhead.total() as f64))),
            ("delay_mean_ms", rep.metric(|r| r.delay_stats().map(|s| s.mean))),
            ("delay_p95_ms", rep.metric(|r| r.delay_stats().map(|s| s.p95))),
        ];
        for (name, samples) in per_request {
            if let Some(s) = summarize(&samples) {
                rows.push(AggregateRow::new(&id, name, s));
            }
        }
        for (name, v) in [
            ("background_bytes_lte", rep.background.lte),
            ("background_bytes_sr", rep.background.short_range),
        ] {
            rows.push(AggregateRow::new(
                &id,
                name,
                Summary {
                    mean: v as f64,
                    ci95: None,
                    n: 1,
                },
            ));
        }
        if rep.config.strategy == Strategy::Navi {
            let baseline = reports.iter().find(|b| {
                b.config.strategy == Strategy::AllLte && b.config.tx_power_dbm == rep.config.tx_power_dbm
            });
            if let Some(base) = baseline {
                if let Some(s) = summarize(&overhead_ratios(rep, base)) {
                    rows.push(AggregateRow::new(&id, OVERHEAD_RATIO_METRIC, s));
                }
            }
        }
    }
    rows
}

/// Per-request NAVI/All-LTE total byte ratios, matched by request id.
pub fn overhead_ratios(navi: &RunReport, all_lte: &RunReport) -> Vec<f64> {
    let base: BTreeMap<RequestId, u64> = all_lte
        .requests
        .iter()
        .map(|r| (r.request, r.overhead.total()))
        .collect();
    navi.requests
        .iter()
        .filter_map(|r| {
            let b = *base.get(&r.request)?;
            (b > 0).then(|| r.overhead.total() as f64 / b as f64)
        })
        .collect()
}

pub fn cdf_rows(samples: &[(f64, Vec<usize>)]) -> Vec<CdfRow> {
    samples
        .iter()
        .flat_map(|(tx, degrees)| {
            degree_cdf(degrees).into_iter().map(move |(degree, cdf)| CdfRow {
                tx_power_dbm: *tx,
                degree,
                cdf,
            })
        })
        .collect()
}

pub const REQUESTS_CSV: &str = "metrics_requests.csv";
pub const AGGREGATE_CSV: &str = "metrics_aggregate.csv";
pub const DEGREE_CDF_CSV: &str = "degree_cdf.csv";

const REQUEST_HEADER: [&str; 11] = [
    "config_id",
    "request_id",
    "strategy",
    "k",
    "tx_power_dbm",
    "covered_pct",
    "vi_count",
    "bytes_lte",
    "bytes_sr",
    "delay_mean_ms",
    "delay_p95_ms",
];
const AGGREGATE_HEADER: [&str; 6] = ["config_id", "metric", "mean", "ci95_low", "ci95_high", "n"];
const CDF_HEADER: [&str; 3] = ["tx_power_dbm", "degree", "cdf"];

/// Serializes `rows` as CSV; the header is written even with no rows.
pub fn to_csv<T: Serialize>(header: &[&str], rows: &[T]) -> Result<Vec<u8>, MetricsError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| MetricsError::Io {
        path: PathBuf::new(),
        source: e.into_error(),
    })
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, MetricsError> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

/// Writes via a sibling temp file and rename, so readers never see a
/// partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), MetricsError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let mut f = fs::File::create(&tmp).map_err(io_err(&tmp))?;
    f.write_all(bytes).map_err(io_err(&tmp))?;
    f.sync_all().map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

/// Writes the three report files into `dir`, creating it if needed.
pub fn write_report(
    dir: &Path,
    reports: &[RunReport],
    degree_samples: &[(f64, Vec<usize>)],
) -> Result<(), MetricsError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_atomic(
        &dir.join(REQUESTS_CSV),
        &to_csv(&REQUEST_HEADER, &request_rows(reports))?,
    )?;
    write_atomic(
        &dir.join(AGGREGATE_CSV),
        &to_csv(&AGGREGATE_HEADER, &aggregate_rows(reports))?,
    )?;
    write_atomic(
        &dir.join(DEGREE_CDF_CSV),
        &to_csv(&CDF_HEADER, &cdf_rows(degree_samples))?,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_rank_percentiles() {
        let s: Vec<f64> = (1..=20).map(f64::from).collect();
        assert_eq!(percentile(&s, 50.0), 10.0);
        assert_eq!(percentile(&s, 95.0), 19.0);
        assert_eq!(percentile(&s, 100.0), 20.0);
        assert_eq!(percentile(&[7.0], 95.0), 7.0);
    }

    #[test]
    fn constant_samples_have_zero_width() {
        let s = summarize(&[3.0; 10]).unwrap();
        assert_eq!(s.mean, 3.0);
        assert_eq!(s.half_width(), Some(0.0));
        assert!(summarize(&[1.0]).unwrap().ci95.is_none());
        assert!(summarize(&[]).is_none());
    }

    #[test]
    fn t_interval_for_small_samples() {
        // n = 4, mean 2.5, sd = 1.290994, t(0.975, 3) = 3.182446
        let s = summarize(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        let hw = s.half_width().unwrap();
        assert!((hw - 3.182446 * 1.290994 / 2.0).abs() < 1e-5, "{hw}");
    }

    #[test]
    fn cdf_ends_at_one() {
        let cdf = degree_cdf(&[3, 1, 1, 2]);
        assert_eq!(cdf, vec![(1, 0.5), (2, 0.75), (3, 1.0)]);
        assert_eq!(median(&[3, 1, 1, 2]), Some(1));
        assert_eq!(median(&[5, 1, 9]), Some(5));
    }
}
