#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use navi::geoserver::{VehicleView, WorldView};
use navi::sim::{Capabilities, SimParams};
use navi::trace::{MobilityTrace, Position, VehicleId};

/// Vehicles parked at `points` for `duration` seconds, ids 0..n.
pub fn static_trace(points: &[(f64, f64)], duration: f64) -> MobilityTrace {
    let mut trace = MobilityTrace::new(duration);
    for (i, (x, y)) in points.iter().enumerate() {
        trace
            .add_vehicle(VehicleId(i as u32), 0.0, Position::new(*x, *y))
            .unwrap();
    }
    trace
}

/// Engine parameters for hand-built scenarios: no jitter, given range and
/// duration, one request per second with the default template.
pub fn params(range: f64, duration: f64) -> SimParams {
    SimParams {
        duration,
        radio_range: range,
        ..SimParams::default()
    }
}

pub fn all_both(trace: &MobilityTrace) -> BTreeMap<VehicleId, Capabilities> {
    trace.vehicles().map(|v| (v, Capabilities::BOTH)).collect()
}

/// A fresh, fully reported view from `(id, position, neighbors)` triples.
pub fn view(vehicles: &[(u32, (f64, f64), &[u32])]) -> WorldView {
    let mut view = WorldView::new(10.0, 5.0);
    for (id, (x, y), neighbors) in vehicles {
        view.insert(
            VehicleId(*id),
            VehicleView {
                position: Position::new(*x, *y),
                neighbors: neighbors.iter().map(|n| VehicleId(*n)).collect::<BTreeSet<_>>(),
                capabilities: Capabilities::BOTH,
                snapshot_time: 10.0,
                reported: true,
            },
        );
    }
    view
}

pub fn ids(v: &[u32]) -> Vec<VehicleId> {
    v.iter().map(|i| VehicleId(*i)).collect()
}
