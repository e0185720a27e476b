//! Neighbor-aware virtual infrastructure for vehicular information
//! dissemination.
//!
//! Vehicles beacon awareness messages and keep neighbor tables, upload those
//! tables to a central geoserver over LTE, and the geoserver elects a small
//! set of vehicles as *virtual infrastructure* by greedy zone coverage. The
//! payload then reaches the elected vehicles over LTE and everyone else over
//! one (or a few) short-range hops. An All-LTE unicast baseline runs on the
//! same engine for comparison.
//!
//! Module map:
//!
//! - [`trace`]: mobility traces (NS-2 ingestion, random-waypoint generator)
//! - [`radio`]: threshold range model and connectivity snapshots
//! - [`sim`]: discrete-event engine, beaconing, neighbor tables, uploads
//! - [`geoserver`]: zone grid, coverage sets, greedy election
//! - [`dissem`]: request handling, NAVI and All-LTE execution, delivery log
//! - [`metrics`]: per-request metrics, confidence intervals, CSV reports
//! - [`config`] / [`scenario`]: scenario files, single runs and sweeps
//!
//! See the crate's `examples/` directory for one runnable program per
//! capability.

pub mod config;
pub mod dissem;
pub mod geoserver;
pub mod metrics;
pub mod radio;
pub mod scenario;
pub mod sim;
pub mod trace;

pub use dissem::{DeliveryLog, DisseminationRequest, RequestId, Strategy};
pub use geoserver::{select_virtual_infrastructure, SelectionResult, StopReason, ZoneGrid};
pub use radio::{connectivity_snapshot, range_from_power, RadioConfig};
pub use scenario::{run_scenario, run_sweep, ScenarioError, SweepReport};
pub use config::ScenarioConfig;
pub use trace::{generate_synthetic_trace, parse_ns2_trace, MobilityTrace, Position, Rect, VehicleId};

/// The bundled 45-vehicle reference trace (random waypoint over a
/// 600 m x 730 m area, 180 s), in NS-2 format.
pub const REFERENCE_TRACE_NS2: &str = include_str!("../data/reference_trace.tcl");

/// Parses [`REFERENCE_TRACE_NS2`].
pub fn reference_trace() -> MobilityTrace {
    parse_ns2_trace(REFERENCE_TRACE_NS2).expect("bundled reference trace parses")
}
