//! Greedy virtual-infrastructure election on a hand-built geoserver view.
//!
//! Five vehicles on a 200 m x 50 m strip split into four 50 m zones. The
//! neighbor lists are what the vehicles would have uploaded; the geoserver
//! picks the vehicle reaching the most zones, then the one adding the most
//! uncovered zones, until every occupied zone is covered.

use std::collections::BTreeSet;

use navi::dissem::{DisseminationRequest, RequestId};
use navi::geoserver::{coverage_sets, zone_index, VehicleView, WorldView};
use navi::sim::{Capabilities, SimTime};
use navi::{select_virtual_infrastructure, Position, Rect, VehicleId, ZoneGrid};

fn main() {
    let area = Rect::with_size(200.0, 50.0).expect("valid area");
    let grid = ZoneGrid::new(area, 50.0).expect("valid cell");
    let vehicles = [
        (0, 10.0, &[1][..]),
        (1, 60.0, &[0, 2, 3][..]),
        (2, 90.0, &[1, 3][..]),
        (3, 140.0, &[2][..]),
        (4, 190.0, &[][..]),
    ];
    let mut view = WorldView::new(10.0, 5.0);
    for (id, x, neighbors) in vehicles {
        view.insert(
            VehicleId(id),
            VehicleView {
                position: Position::new(x, 25.0),
                neighbors: neighbors.iter().map(|n| VehicleId(*n)).collect::<BTreeSet<_>>(),
                capabilities: Capabilities::BOTH,
                snapshot_time: 9.9,
                reported: true,
            },
        );
    }

    let cov = coverage_sets(&view, &grid, 1);
    for v in cov.vehicles() {
        println!(
            "vehicle {v}: zone index {} zones {:?}",
            zone_index(v, &cov).expect("known vehicle"),
            cov.zones(v).expect("known vehicle").iter().map(|z| z.0).collect::<Vec<_>>()
        );
    }

    for k in [1, 2, 5] {
        let req = DisseminationRequest {
            id: RequestId(k as u32),
            area,
            payload_bytes: 500,
            k,
            hop_limit: 1,
            validity: 1.0,
            issue_time: SimTime::from_secs(10.0),
        };
        let sel = select_virtual_infrastructure(&view, &grid, &req);
        println!(
            "k={k}: selected {:?} gains {:?} covered {} zones, stop: {}",
            sel.selected.iter().map(|v| v.0).collect::<Vec<_>>(),
            sel.gains,
            sel.covered.len(),
            sel.stop_reason
        );
    }
}
