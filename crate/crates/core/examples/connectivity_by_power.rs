//! Communication range and neighbor-degree distribution per transmit power
//! on the bundled reference trace.
//!
//! ```text
//! cargo run --example connectivity_by_power -- [rx_sensitivity_dbm]
//! ```

use navi::config::ScenarioConfig;
use navi::metrics::{degree_cdf, median};
use navi::radio::degree_samples;

fn main() {
    let mut cfg = ScenarioConfig::reference();
    if let Some(arg) = std::env::args().nth(1) {
        cfg.rx_sensitivity_dbm = arg.parse().expect("sensitivity in dBm");
    }
    let trace = navi::reference_trace();
    println!(
        "{} vehicles, rx sensitivity {} dBm",
        trace.len(),
        cfg.rx_sensitivity_dbm
    );
    for tx in [16.0, 21.0, 23.0] {
        let range = cfg.range_m(tx).expect("valid radio config");
        let degrees = degree_samples(&trace, range, 1.0, cfg.duration);
        let mean = degrees.iter().sum::<usize>() as f64 / degrees.len() as f64;
        let cdf = degree_cdf(&degrees);
        let p10 = cdf.iter().find(|(_, p)| *p >= 0.1).map_or(0, |(d, _)| *d);
        let p90 = cdf.iter().find(|(_, p)| *p >= 0.9).map_or(0, |(d, _)| *d);
        println!(
            "{tx:>4} dBm  range {range:7.1} m  degree median {:>2}  mean {mean:5.1}  p10 {p10:>2}  p90 {p90:>2}",
            median(&degrees).unwrap_or(0)
        );
    }
}
