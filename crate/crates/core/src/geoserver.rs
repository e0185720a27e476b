//! Central decision maker. Aggregates uploaded neighbor tables into a world
//! view, discretizes the dissemination area into zones and elects virtual
//! infrastructure greedily by zone dissimilarity.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dissem::DisseminationRequest;
use crate::sim::Capabilities;
use crate::trace::{Position, Rect, VehicleId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ZoneId(pub u32);

impl fmt::Display for ZoneId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub type ZoneSet = BTreeSet<ZoneId>;

#[derive(Debug, Error, PartialEq)]
pub enum GeoError {
    #[error("zone cell size must be positive, got {0}")]
    CellSize(f64),
    #[error("vehicle {0} has no coverage set")]
    UnknownVehicle(VehicleId),
}

/// Uniform square grid over an area. Cells are half-open, so a point on an
/// interior boundary belongs to the higher cell; the far edges fold into the
/// last row and column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZoneGrid {
    area: Rect,
    cell: f64,
    n_cols: u32,
    n_rows: u32,
}

impl ZoneGrid {
    pub fn new(area: Rect, cell: f64) -> Result<Self, GeoError> {
        if !(cell > 0.0 && cell.is_finite()) {
            return Err(GeoError::CellSize(cell));
        }
        let n_cols = ((area.width() / cell).ceil() as u32).max(1);
        let n_rows = ((area.height() / cell).ceil() as u32).max(1);
        Ok(Self {
            area,
            cell,
            n_cols,
            n_rows,
        })
    }

    pub fn area(&self) -> &Rect {
        &self.area
    }

    pub fn cell(&self) -> f64 {
        self.cell
    }

    pub fn n_cols(&self) -> u32 {
        self.n_cols
    }

    pub fn n_rows(&self) -> u32 {
        self.n_rows
    }

    pub fn zone_count(&self) -> u32 {
        self.n_cols * self.n_rows
    }

    pub fn zone_of(&self, p: &Position) -> ZoneId {
        if !self.area.contains(p) {
            log::warn!("position {p:?} outside zone grid, clamped to the boundary cell");
        }
        let axis = |offset: f64, n: u32| {
            let idx = (offset / self.cell).floor();
            if idx <= 0.0 || idx.is_nan() {
                0
            } else {
                (idx as u32).min(n - 1)
            }
        };
        let col = axis(p.x - self.area.min.x, self.n_cols);
        let row = axis(p.y - self.area.min.y, self.n_rows);
        ZoneId(row * self.n_cols + col)
    }
}

/// One neighbor as reported in an uploaded table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborReport {
    pub id: VehicleId,
    pub position: Position,
    pub capabilities: Capabilities,
    pub last_heard: f64,
}

/// A vehicle's neighbor table as received by the geoserver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborSnapshot {
    pub owner: VehicleId,
    pub position: Position,
    pub capabilities: Capabilities,
    pub time: f64,
    pub entries: Vec<NeighborReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleView {
    pub position: Position,
    pub neighbors: BTreeSet<VehicleId>,
    pub capabilities: Capabilities,
    pub snapshot_time: f64,
    /// True when the vehicle uploaded its own table; false when it is only
    /// known through another vehicle's table.
    pub reported: bool,
}

/// The geoserver's picture of the network at `as_of`.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldView {
    pub vehicles: BTreeMap<VehicleId, VehicleView>,
    pub staleness: f64,
    pub as_of: f64,
}

impl WorldView {
    pub fn new(as_of: f64, staleness: f64) -> Self {
        Self {
            vehicles: BTreeMap::new(),
            staleness,
            as_of,
        }
    }

    pub fn insert(&mut self, id: VehicleId, view: VehicleView) {
        self.vehicles.insert(id, view);
    }

    pub fn is_fresh(&self, view: &VehicleView) -> bool {
        self.as_of - view.snapshot_time <= self.staleness
    }

    /// Zones holding at least one known vehicle: the cover universe.
    pub fn occupied_zones(&self, grid: &ZoneGrid) -> ZoneSet {
        self.vehicles
            .values()
            .filter(|v| grid.area().contains(&v.position))
            .map(|v| grid.zone_of(&v.position))
            .collect()
    }
}

/// Latest snapshot per uploader.
#[derive(Debug, Clone, Default)]
pub struct Geoserver {
    snapshots: BTreeMap<VehicleId, NeighborSnapshot>,
    staleness: f64,
    link_max_age: Option<f64>,
}

impl Geoserver {
    pub fn new(staleness: f64) -> Self {
        Self {
            snapshots: BTreeMap::new(),
            staleness,
            link_max_age: None,
        }
    }

    /// Ignores table entries last heard more than `age` seconds before
    /// their snapshot was taken. With lossless beaconing such an entry
    /// means at least one beacon was missed, i.e. the link is gone.
    pub fn with_link_max_age(mut self, age: Option<f64>) -> Self {
        self.link_max_age = age;
        self
    }

    fn link_is_current(&self, snapshot: &NeighborSnapshot, entry: &NeighborReport) -> bool {
        self.link_max_age
            .is_none_or(|max| snapshot.time - entry.last_heard <= max)
    }

    pub fn ingest(&mut self, snapshot: NeighborSnapshot) {
        match self.snapshots.get(&snapshot.owner) {
            Some(existing) if existing.time > snapshot.time => {}
            _ => {
                self.snapshots.insert(snapshot.owner, snapshot);
            }
        }
    }

    pub fn snapshot_count(&self) -> usize {
        self.snapshots.len()
    }

    /// Builds the view used for selection, dropping snapshots older than the
    /// staleness bound. Vehicles heard only through someone else's table
    /// enter with their most recently reported position.
    pub fn world_view(&self, now: f64) -> WorldView {
        let mut view = WorldView::new(now, self.staleness);
        let fresh: Vec<_> = self
            .snapshots
            .values()
            .filter(|s| now - s.time <= self.staleness)
            .collect();
        for s in &fresh {
            view.insert(
                s.owner,
                VehicleView {
                    position: s.position,
                    neighbors: s
                        .entries
                        .iter()
                        .filter(|e| self.link_is_current(s, e))
                        .map(|e| e.id)
                        .collect(),
                    capabilities: s.capabilities,
                    snapshot_time: s.time,
                    reported: true,
                },
            );
        }
        for s in &fresh {
            for e in &s.entries {
                if now - e.last_heard > self.staleness || !self.link_is_current(s, e) {
                    continue;
                }
                match view.vehicles.get(&e.id) {
                    Some(v) if v.reported || v.snapshot_time >= e.last_heard => {}
                    _ => view.insert(
                        e.id,
                        VehicleView {
                            position: e.position,
                            neighbors: BTreeSet::new(),
                            capabilities: e.capabilities,
                            snapshot_time: e.last_heard,
                            reported: false,
                        },
                    ),
                }
            }
        }
        view
    }
}

/// Zones each vehicle reaches through itself and its hop-limited
/// neighborhood, restricted to the grid area.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CoverageSets {
    pub hop_limit: u32,
    zones: BTreeMap<VehicleId, ZoneSet>,
}

impl CoverageSets {
    pub fn from_sets(hop_limit: u32, zones: BTreeMap<VehicleId, ZoneSet>) -> Self {
        Self { hop_limit, zones }
    }

    pub fn zones(&self, v: VehicleId) -> Option<&ZoneSet> {
        self.zones.get(&v)
    }

    pub fn vehicles(&self) -> impl Iterator<Item = VehicleId> + '_ {
        self.zones.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.zones.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zones.is_empty()
    }
}

/// Breadth-first expansion over the reported (directed) neighbor graph.
pub fn coverage_sets(view: &WorldView, grid: &ZoneGrid, hop_limit: u32) -> CoverageSets {
    let area = grid.area();
    let mut zones = BTreeMap::new();
    for (id, vehicle) in &view.vehicles {
        if !area.contains(&vehicle.position) {
            continue;
        }
        let mut reached = ZoneSet::new();
        let mut seen = BTreeSet::from([*id]);
        let mut queue = VecDeque::from([(*id, 0u32)]);
        while let Some((u, depth)) = queue.pop_front() {
            let Some(uv) = view.vehicles.get(&u) else {
                continue;
            };
            if area.contains(&uv.position) {
                reached.insert(grid.zone_of(&uv.position));
            }
            if depth == hop_limit {
                continue;
            }
            for n in &uv.neighbors {
                if seen.insert(*n) {
                    queue.push_back((*n, depth + 1));
                }
            }
        }
        zones.insert(*id, reached);
    }
    CoverageSets { hop_limit, zones }
}

/// Number of zones `v` covers on its own.
pub fn zone_index(v: VehicleId, cov: &CoverageSets) -> Result<usize, GeoError> {
    cov.zones(v).map(BTreeSet::len).ok_or(GeoError::UnknownVehicle(v))
}

/// Number of zones `v` covers that `selected_zones` does not.
pub fn dissimilarity(
    v: VehicleId,
    selected_zones: &ZoneSet,
    cov: &CoverageSets,
) -> Result<usize, GeoError> {
    let zones = cov.zones(v).ok_or(GeoError::UnknownVehicle(v))?;
    Ok(zones.difference(selected_zones).count())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    CoverageComplete,
    KReached,
    ZeroGain,
    ValidityExpired,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::CoverageComplete => "coverage_complete",
            StopReason::KReached => "k_reached",
            StopReason::ZeroGain => "zero_gain",
            StopReason::ValidityExpired => "validity_expired",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub selected: Vec<VehicleId>,
    pub covered: ZoneSet,
    pub stop_reason: StopReason,
    pub gains: Vec<usize>,
}

impl SelectionResult {
    pub fn empty(stop_reason: StopReason) -> Self {
        Self {
            selected: Vec::new(),
            covered: ZoneSet::new(),
            stop_reason,
            gains: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }
}

/// Greedy maximum coverage: the first pick maximizes the zone index, every
/// later pick the dissimilarity against what is already covered. Ties go
/// to the smaller vehicle id.
pub fn greedy_selection(
    cov: &CoverageSets,
    candidates: &BTreeSet<VehicleId>,
    universe: &ZoneSet,
    k: usize,
) -> SelectionResult {
    let mut pool: Vec<(VehicleId, &ZoneSet)> = candidates
        .iter()
        .filter_map(|v| cov.zones(*v).map(|z| (*v, z)))
        .collect();
    if pool.is_empty() {
        return SelectionResult::empty(StopReason::ZeroGain);
    }
    let mut result = SelectionResult::empty(StopReason::ZeroGain);
    loop {
        if universe.is_subset(&result.covered) {
            result.stop_reason = StopReason::CoverageComplete;
            break;
        }
        if result.selected.len() >= k {
            result.stop_reason = StopReason::KReached;
            break;
        }
        let mut best: Option<(usize, usize)> = None;
        for (idx, (_, zones)) in pool.iter().enumerate() {
            let gain = zones.difference(&result.covered).count();
            if best.is_none_or(|(_, g)| gain > g) {
                best = Some((idx, gain));
            }
        }
        match best {
            Some((idx, gain)) if gain > 0 => {
                let (v, zones) = pool.remove(idx);
                result.covered.extend(zones.iter().copied());
                result.selected.push(v);
                result.gains.push(gain);
            }
            _ => {
                result.stop_reason = StopReason::ZeroGain;
                break;
            }
        }
    }
    result
}

/// Extra admission predicate for candidates, applied after the structural
/// checks (fresh own snapshot, inside the request area).
pub trait CandidateFilter {
    fn admit(&self, id: VehicleId, vehicle: &VehicleView) -> bool;
}

impl<F> CandidateFilter for F
where
    F: Fn(VehicleId, &VehicleView) -> bool,
{
    fn admit(&self, id: VehicleId, vehicle: &VehicleView) -> bool {
        self(id, vehicle)
    }
}

/// Virtual infrastructure receives over LTE and rebroadcasts over the short
/// range radio, so it needs both.
#[derive(Debug, Clone, Copy, Default)]
pub struct DualTechnology;

impl CandidateFilter for DualTechnology {
    fn admit(&self, _id: VehicleId, vehicle: &VehicleView) -> bool {
        vehicle.capabilities.lte && vehicle.capabilities.short_range
    }
}

pub struct SelectionPolicy<'a> {
    /// Earliest a payload can reach a non-VI vehicle (LTE downlink plus one
    /// short-range hop). Requests whose validity is shorter fail outright.
    pub min_delivery_latency: f64,
    pub filter: &'a dyn CandidateFilter,
}

impl Default for SelectionPolicy<'_> {
    fn default() -> Self {
        Self {
            min_delivery_latency: 0.050 + 0.005,
            filter: &DualTechnology,
        }
    }
}

pub fn eligible_candidates(
    view: &WorldView,
    req: &DisseminationRequest,
    filter: &dyn CandidateFilter,
) -> BTreeSet<VehicleId> {
    view.vehicles
        .iter()
        .filter(|(id, v)| {
            v.reported
                && view.is_fresh(v)
                && req.area.contains(&v.position)
                && filter.admit(**id, v)
        })
        .map(|(id, _)| *id)
        .collect()
}

pub fn select_virtual_infrastructure(
    view: &WorldView,
    grid: &ZoneGrid,
    req: &DisseminationRequest,
) -> SelectionResult {
    select_with_policy(view, grid, req, &SelectionPolicy::default())
}

pub fn select_with_policy(
    view: &WorldView,
    grid: &ZoneGrid,
    req: &DisseminationRequest,
    policy: &SelectionPolicy<'_>,
) -> SelectionResult {
    if req.validity < policy.min_delivery_latency {
        return SelectionResult::empty(StopReason::ValidityExpired);
    }
    let candidates = eligible_candidates(view, req, policy.filter);
    let cov = coverage_sets(view, grid, req.hop_limit);
    let universe = view.occupied_zones(grid);
    greedy_selection(&cov, &candidates, &universe, req.k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dissem::RequestId;

    fn zs(ids: &[u32]) -> ZoneSet {
        ids.iter().map(|z| ZoneId(*z)).collect()
    }

    fn grid_600x700() -> ZoneGrid {
        ZoneGrid::new(Rect::with_size(600.0, 700.0).unwrap(), 50.0).unwrap()
    }

    #[test]
    fn grid_dimensions_and_zone_lookup() {
        let g = grid_600x700();
        assert_eq!((g.n_cols(), g.n_rows(), g.zone_count()), (12, 14, 168));
        assert_eq!(g.zone_of(&Position::new(0.0, 0.0)), ZoneId(0));
        assert_eq!(g.zone_of(&Position::new(299.0, 0.0)), ZoneId(5));
        assert_eq!(g.zone_of(&Position::new(50.0, 0.0)), ZoneId(1));
        assert_eq!(g.zone_of(&Position::new(600.0, 700.0)), ZoneId(167));
        assert_eq!(g.zone_of(&Position::new(-10.0, 1e4)), ZoneId(13 * 12));
    }

    #[test]
    fn bad_cell_size() {
        let area = Rect::with_size(10.0, 10.0).unwrap();
        assert_eq!(ZoneGrid::new(area, 0.0), Err(GeoError::CellSize(0.0)));
    }

    #[test]
    fn index_definitions() {
        let cov = CoverageSets::from_sets(
            1,
            BTreeMap::from([(VehicleId(1), zs(&[1, 2, 3])), (VehicleId(2), zs(&[2, 7]))]),
        );
        assert_eq!(zone_index(VehicleId(2), &cov), Ok(2));
        assert_eq!(dissimilarity(VehicleId(1), &zs(&[2]), &cov), Ok(2));
        assert_eq!(dissimilarity(VehicleId(2), &zs(&[2, 7, 9]), &cov), Ok(0));
        assert_eq!(
            dissimilarity(VehicleId(1), &ZoneSet::new(), &cov),
            zone_index(VehicleId(1), &cov)
        );
        assert_eq!(zone_index(VehicleId(5), &cov), Err(GeoError::UnknownVehicle(VehicleId(5))));
    }

    #[test]
    fn worked_greedy_example() {
        let (a, b, c) = (VehicleId(1), VehicleId(2), VehicleId(3));
        let cov = CoverageSets::from_sets(
            1,
            BTreeMap::from([(a, zs(&[1, 2, 3])), (b, zs(&[3, 4])), (c, zs(&[2, 3]))]),
        );
        let res = greedy_selection(&cov, &BTreeSet::from([a, b, c]), &zs(&[1, 2, 3, 4]), 3);
        assert_eq!(res.selected, vec![a, b]);
        assert_eq!(res.gains, vec![3, 1]);
        assert_eq!(res.stop_reason, StopReason::CoverageComplete);
        assert_eq!(res.covered, zs(&[1, 2, 3, 4]));
    }

    #[test]
    fn ties_go_to_smaller_id() {
        let cov = CoverageSets::from_sets(
            0,
            BTreeMap::from([(VehicleId(9), zs(&[1])), (VehicleId(4), zs(&[2]))]),
        );
        let res = greedy_selection(
            &cov,
            &BTreeSet::from([VehicleId(9), VehicleId(4)]),
            &zs(&[1, 2]),
            1,
        );
        assert_eq!(res.selected, vec![VehicleId(4)]);
        assert_eq!(res.stop_reason, StopReason::KReached);
    }

    #[test]
    fn no_candidates_is_zero_gain() {
        let res = greedy_selection(&CoverageSets::default(), &BTreeSet::new(), &zs(&[1]), 3);
        assert!(res.is_empty());
        assert_eq!(res.stop_reason, StopReason::ZeroGain);
    }

    fn both() -> Capabilities {
        Capabilities::BOTH
    }

    fn view_of(entries: &[(u32, (f64, f64), &[u32])]) -> WorldView {
        let mut view = WorldView::new(10.0, 5.0);
        for (id, (x, y), ns) in entries {
            view.insert(
                VehicleId(*id),
                VehicleView {
                    position: Position::new(*x, *y),
                    neighbors: ns.iter().map(|n| VehicleId(*n)).collect(),
                    capabilities: both(),
                    snapshot_time: 10.0,
                    reported: true,
                },
            );
        }
        view
    }

    #[test]
    fn coverage_bfs_respects_hop_limit() {
        let view = view_of(&[
            (0, (10.0, 10.0), &[1]),
            (1, (110.0, 10.0), &[0, 2]),
            (2, (210.0, 10.0), &[1]),
            (3, (400.0, 400.0), &[]),
        ]);
        let grid = grid_600x700();
        let at = |h| coverage_sets(&view, &grid, h);
        assert_eq!(at(0).zones(VehicleId(0)), Some(&zs(&[0])));
        assert_eq!(at(1).zones(VehicleId(0)), Some(&zs(&[0, 2])));
        assert_eq!(at(2).zones(VehicleId(0)).map(BTreeSet::len), Some(3));
        assert_eq!(at(1).zones(VehicleId(3)).map(BTreeSet::len), Some(1));
    }

    fn request(k: usize) -> DisseminationRequest {
        DisseminationRequest {
            id: RequestId(0),
            area: Rect::with_size(600.0, 700.0).unwrap(),
            payload_bytes: 500,
            k,
            hop_limit: 1,
            validity: 1.0,
            issue_time: crate::sim::SimTime::from_secs(10.0),
        }
    }

    #[test]
    fn single_vehicle_view() {
        let view = view_of(&[(5, (10.0, 10.0), &[])]);
        let res = select_virtual_infrastructure(&view, &grid_600x700(), &request(3));
        assert_eq!(res.selected, vec![VehicleId(5)]);
        assert_eq!(res.stop_reason, StopReason::CoverageComplete);
    }

    #[test]
    fn short_validity_fails_request() {
        let view = view_of(&[(5, (10.0, 10.0), &[])]);
        let mut req = request(3);
        req.validity = 0.01;
        let res = select_virtual_infrastructure(&view, &grid_600x700(), &req);
        assert!(res.is_empty());
        assert_eq!(res.stop_reason, StopReason::ValidityExpired);
    }

    #[test]
    fn stale_and_single_technology_vehicles_are_not_candidates() {
        let mut view = view_of(&[(1, (10.0, 10.0), &[]), (2, (300.0, 300.0), &[])]);
        view.vehicles.get_mut(&VehicleId(1)).unwrap().snapshot_time = 4.0;
        view.vehicles.get_mut(&VehicleId(2)).unwrap().capabilities = Capabilities::LTE_ONLY;
        let res = select_virtual_infrastructure(&view, &grid_600x700(), &request(3));
        assert!(res.is_empty());
        assert_eq!(res.stop_reason, StopReason::ZeroGain);
    }

    #[test]
    fn custom_filter_hook() {
        let view = view_of(&[(1, (10.0, 10.0), &[]), (2, (300.0, 300.0), &[])]);
        let not_one = |id: VehicleId, _: &VehicleView| id != VehicleId(1);
        let policy = SelectionPolicy {
            filter: &not_one,
            ..SelectionPolicy::default()
        };
        let res = select_with_policy(&view, &grid_600x700(), &request(3), &policy);
        assert_eq!(res.selected, vec![VehicleId(2)]);
        assert_eq!(res.stop_reason, StopReason::ZeroGain);
    }

    #[test]
    fn geoserver_keeps_latest_and_drops_stale() {
        let snap = |owner: u32, time: f64, x: f64| NeighborSnapshot {
            owner: VehicleId(owner),
            position: Position::new(x, 0.0),
            capabilities: both(),
            time,
            entries: vec![NeighborReport {
                id: VehicleId(99),
                position: Position::new(x + 1.0, 0.0),
                capabilities: Capabilities::SHORT_RANGE_ONLY,
                last_heard: time,
            }],
        };
        let mut geo = Geoserver::new(5.0);
        geo.ingest(snap(1, 3.0, 30.0));
        geo.ingest(snap(1, 2.0, 20.0));
        geo.ingest(snap(2, 1.0, 10.0));
        let view = geo.world_view(7.5);
        assert_eq!(view.vehicles[&VehicleId(1)].position, Position::new(30.0, 0.0));
        assert!(!view.vehicles.contains_key(&VehicleId(2)));
        let heard = &view.vehicles[&VehicleId(99)];
        assert!(!heard.reported);
        assert_eq!(heard.position, Position::new(31.0, 0.0));
    }
}
