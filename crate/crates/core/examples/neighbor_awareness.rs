//! Beaconing and neighbor tables on the reference trace: after a few
//! seconds every vehicle knows its one-hop neighborhood, and the geoserver
//! holds one recent table per vehicle.
//!
//! ```text
//! cargo run --example neighbor_awareness -- [tx_power_dbm]
//! ```

use std::collections::BTreeMap;

use navi::config::ScenarioConfig;
use navi::sim::{SimParams, SimTime, Simulation};
use navi::radio::connectivity_snapshot;

fn main() {
    let tx: f64 = std::env::args()
        .nth(1)
        .map_or(21.0, |s| s.parse().expect("tx power in dBm"));
    let cfg = ScenarioConfig::reference();
    let trace = navi::reference_trace();
    let params = SimParams {
        radio_range: cfg.range_m(tx).expect("valid radio"),
        periodic_requests: false,
        ..SimParams::default()
    };
    println!("tx {tx} dBm -> range {:.1} m", params.radio_range);

    let mut sim = Simulation::new(params, &trace, &BTreeMap::new()).expect("valid scenario");
    for t in [1.0, 5.0, 30.0, 90.0] {
        sim.run_until(SimTime::from_secs(t)).expect("engine runs");
        let sizes: Vec<usize> = sim.agents().values().map(|a| a.neighbor_table.len()).collect();
        let truth = connectivity_snapshot(&trace.positions_at(t), sim.params().radio_range, t);
        let view = sim.geoserver().world_view(t);
        println!(
            "t={t:>4}s  mean NT size {:5.2}  mean true degree {:5.2}  geoserver knows {} vehicles from {} tables",
            sizes.iter().sum::<usize>() as f64 / sizes.len() as f64,
            truth.mean_degree(),
            view.vehicles.len(),
            sim.geoserver().snapshot_count()
        );
    }
    println!("{} events processed", sim.events_processed());
}
