//! NAVI against the All-LTE baseline on the reference trace at one transmit
//! power and VI budget.
//!
//! ```text
//! cargo run --release --example navi_vs_all_lte -- [tx_power_dbm] [k]
//! ```

use navi::config::ScenarioConfig;
use navi::metrics::{summarize, ConfigKey};
use navi::scenario::run_point;
use navi::Strategy;

fn main() {
    let mut args = std::env::args().skip(1);
    let tx: f64 = args.next().map_or(23.0, |s| s.parse().expect("tx power in dBm"));
    let k: usize = args.next().map_or(5, |s| s.parse().expect("k"));
    let cfg = ScenarioConfig::reference();
    let trace = navi::reference_trace();
    let caps = cfg.capabilities.assign(trace.vehicles(), cfg.seed);

    println!("tx {tx} dBm, k {k}, {} requests per strategy", cfg.duration * cfg.timing.request_hz);
    println!("{:<8} {:>9} {:>6} {:>10} {:>10} {:>10}", "strategy", "covered%", "VIs", "LTE B", "ITS-G5 B", "delay ms");
    for strategy in [Strategy::Navi, Strategy::AllLte] {
        let key = ConfigKey {
            strategy,
            k,
            tx_power_dbm: tx,
        };
        let run = run_point(&cfg, &trace, &caps, key).expect("run completes");
        let r = &run.report;
        let mean = |f: &dyn Fn(&navi::metrics::RequestMetrics) -> Option<f64>| {
            summarize(&r.metric(f)).map_or(f64::NAN, |s| s.mean)
        };
        println!(
            "{:<8} {:>9.2} {:>6.2} {:>10.0} {:>10.0} {:>10.2}",
            strategy.to_string(),
            mean(&|m| m.covered_area_pct),
            mean(&|m| Some(m.vi_count as f64)),
            mean(&|m| Some(m.overhead.lte as f64)),
            mean(&|m| Some(m.overhead.short_range as f64)),
            mean(&|m| m.delay_stats().map(|d| d.mean)),
        );
    }
}
