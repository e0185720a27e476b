//! Scenario files: defaults, overrides and the errors for unknown keys.

use navi::config::ScenarioConfig;

fn main() {
    let text = "\
[scenario]
seed = 11
strategies = navi

[radio]
tx_power_dbm = 16, 23
rx_sensitivity_dbm = -73

[request]
k = 1, 2, 4, 8
";
    let cfg = ScenarioConfig::parse(text).expect("valid config");
    println!("seed {} strategies {:?} k {:?}", cfg.seed, cfg.strategies, cfg.k_values);
    for tx in &cfg.tx_powers_dbm {
        println!("tx {tx} dBm -> range {:.1} m", cfg.range_m(*tx).expect("valid radio"));
    }
    println!("untouched defaults: duration {} s, NT timeout {} s, zone cell {} m", cfg.duration, cfg.nt_timeout, cfg.zone_cell);

    for bad in ["[radio]\ntx_powr_dbm = 16\n", "[radar]\n", "[timing]\ncam_hz = 0\n"] {
        println!("{:?} -> {}", bad.trim(), ScenarioConfig::parse(bad).unwrap_err());
    }
}
