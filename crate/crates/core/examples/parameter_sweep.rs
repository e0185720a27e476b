//! A small sweep over k and transmit power with CSV output.
//!
//! ```text
//! NAVI_SIM_THREADS=2 cargo run --release --example parameter_sweep -- [out_dir]
//! ```

use std::path::PathBuf;

use navi::config::ScenarioConfig;
use navi::{run_sweep, Strategy};

fn main() {
    let out = std::env::args()
        .nth(1)
        .map_or_else(|| std::env::temp_dir().join("navi-sweep"), PathBuf::from);
    let cfg = ScenarioConfig {
        duration: 30.0,
        ..ScenarioConfig::reference()
    };
    let ks: Vec<usize> = (1..=6).collect();
    let report = run_sweep(&cfg, &ks, &[16.0, 23.0], &[Strategy::Navi, Strategy::AllLte]).expect("sweep runs");
    report.write(&out).expect("writable output directory");

    for tx in [16.0, 23.0] {
        let covered: Vec<String> = ks
            .iter()
            .map(|k| {
                let run = report.get(Strategy::Navi, *k, tx).expect("run present");
                format!("{:.1}", run.report.mean_covered_pct().unwrap_or(0.0))
            })
            .collect();
        println!("tx {tx:>4} dBm  covered% for k=1..6: {}", covered.join("  "));
    }
    println!(
        "{} runs, success: {}, CSVs in {}",
        report.runs.len(),
        report.is_success(),
        out.display()
    );
}
