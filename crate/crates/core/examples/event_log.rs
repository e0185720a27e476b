//! Write the line-delimited event log of a short run and read it back.

use navi::config::ScenarioConfig;
use navi::dissem::DeliveryLog;
use navi::metrics::ConfigKey;
use navi::scenario::run_point;
use navi::Strategy;

fn main() {
    let cfg = ScenarioConfig {
        duration: 3.0,
        ..ScenarioConfig::reference()
    };
    let trace = navi::reference_trace();
    let caps = cfg.capabilities.assign(trace.vehicles(), cfg.seed);
    let key = ConfigKey {
        strategy: Strategy::Navi,
        k: 3,
        tx_power_dbm: 21.0,
    };
    let run = run_point(&cfg, &trace, &caps, key).expect("run completes");

    let mut buf = Vec::new();
    run.log.write_jsonl(&mut buf).expect("in-memory write");
    let text = String::from_utf8(buf).expect("utf-8 json");
    println!("{} records; first lines of each kind:", text.lines().count());
    for tag in ["\"record\":\"request\"", "\"kind\":\"vi_notify\"", "\"kind\":\"local_broadcast\"", "\"record\":\"rx\""] {
        if let Some(line) = text.lines().find(|l| l.contains(tag)) {
            let shown: String = line.chars().take(160).collect();
            println!("  {shown}");
        }
    }
    let back = DeliveryLog::read_jsonl(text.as_bytes()).expect("log parses");
    assert_eq!(back, run.log);
    println!("round trip ok, {} invariant problems", back.check_invariants().len());
}
