//! Generate a random-waypoint trace, write it as NS-2 text, parse it back
//! and query positions.
//!
//! ```text
//! cargo run --example mobility_trace -- [path/to/trace.tcl]
//! ```
//! With a path argument the file is parsed instead of a generated trace.

use navi::trace::{parse_ns2_trace_with, Ns2Options, SyntheticTraceSpec};
use navi::VehicleId;

fn main() {
    let text = match std::env::args().nth(1) {
        Some(path) => std::fs::read_to_string(&path).expect("readable trace file"),
        None => {
            let spec = SyntheticTraceSpec {
                vehicles: 8,
                duration: 60.0,
                ..SyntheticTraceSpec::default()
            };
            let trace = spec.generate().expect("valid generator spec");
            trace.to_ns2()
        }
    };
    println!("{} lines of NS-2 movement commands", text.lines().count());

    let parsed = parse_ns2_trace_with(&text, &Ns2Options::default()).expect("trace parses");
    for w in &parsed.warnings {
        println!("warning at line {}: {}", w.line, w.message);
    }
    let trace = parsed.trace;
    let bbox = trace.bounding_box().expect("non-empty trace");
    println!(
        "{} vehicles, {:.1} s, bounding box {:.0} m x {:.0} m",
        trace.len(),
        trace.duration(),
        bbox.width(),
        bbox.height()
    );

    let v = trace.vehicles().next().unwrap_or(VehicleId(0));
    for t in [0.0, 10.0, 20.0, 30.0] {
        if let Ok(Some(k)) = trace.kinematics_at(v, t) {
            println!(
                "vehicle {v} at t={t:>4}: ({:7.2}, {:7.2}) speed {:5.2} m/s heading {:+.2} rad",
                k.position.x, k.position.y, k.speed, k.heading
            );
        }
    }
}
