//! Single-threaded discrete-event engine: CAM beaconing, neighbor-table
//! upkeep, periodic uploads to the geoserver and the abstract LTE channel.
//! Dissemination handlers live in [`crate::dissem`].

mod event;
mod neighbor;
mod time;

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use event::{Event, EventKind, EventQueue, Message, Payload};
pub use neighbor::{Cam, NeighborEntry, NeighborTable};
pub use time::SimTime;

use crate::dissem::{
    DeliveryLog, DisseminationRequest, Purpose, RequestId, Strategy, Technology, Transmission,
};
use crate::geoserver::{GeoError, Geoserver, NeighborReport, NeighborSnapshot, ZoneGrid};
use crate::radio::{link_exists, RadioError};
use crate::trace::{MobilityTrace, Position, Rect, TraceError, VehicleId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Capabilities {
    pub short_range: bool,
    pub lte: bool,
}

impl Capabilities {
    pub const BOTH: Self = Self {
        short_range: true,
        lte: true,
    };
    pub const LTE_ONLY: Self = Self {
        short_range: false,
        lte: true,
    };
    pub const SHORT_RANGE_ONLY: Self = Self {
        short_range: true,
        lte: false,
    };
}

impl Default for Capabilities {
    fn default() -> Self {
        Self::BOTH
    }
}

/// Fractions of the fleet per technology set; must sum to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapabilityMix {
    pub both: f64,
    pub lte_only: f64,
    pub short_range_only: f64,
}

impl Default for CapabilityMix {
    fn default() -> Self {
        Self {
            both: 1.0,
            lte_only: 0.0,
            short_range_only: 0.0,
        }
    }
}

impl CapabilityMix {
    pub fn validate(&self) -> Result<(), SimError> {
        let parts = [self.both, self.lte_only, self.short_range_only];
        if parts.iter().any(|p| !(0.0..=1.0).contains(p)) || (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(SimError::InvalidParams(format!(
                "capability fractions must lie in [0, 1] and sum to 1, got {parts:?}"
            )));
        }
        Ok(())
    }

    /// Deterministically deals technology sets to `vehicles` by shuffling
    /// them with `seed`.
    pub fn assign(
        &self,
        vehicles: impl IntoIterator<Item = VehicleId>,
        seed: u64,
    ) -> BTreeMap<VehicleId, Capabilities> {
        let mut ids: Vec<_> = vehicles.into_iter().collect();
        ids.sort();
        let n = ids.len() as f64;
        let lte_only = (self.lte_only * n).round() as usize;
        let sr_only = ((self.short_range_only * n).round() as usize).min(ids.len() - lte_only.min(ids.len()));
        ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        ids.iter()
            .enumerate()
            .map(|(i, v)| {
                let caps = if i < lte_only {
                    Capabilities::LTE_ONLY
                } else if i < lte_only + sr_only {
                    Capabilities::SHORT_RANGE_ONLY
                } else {
                    Capabilities::BOTH
                };
                (*v, caps)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Latencies {
    pub short_range: f64,
    pub lte_down: f64,
    pub lte_up: f64,
}

impl Default for Latencies {
    fn default() -> Self {
        Self {
            short_range: 0.005,
            lte_down: 0.050,
            lte_up: 0.060,
        }
    }
}

/// Message sizes in bytes, used only for overhead accounting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MessageSizes {
    pub cam: u32,
    pub nt_base: u32,
    pub nt_per_entry: u32,
    pub vi_notify: u32,
    pub request: u32,
    pub lte_header: u32,
    pub short_range_header: u32,
}

impl Default for MessageSizes {
    fn default() -> Self {
        Self {
            cam: 300,
            nt_base: 100,
            nt_per_entry: 20,
            vi_notify: 200,
            request: 100,
            lte_header: 60,
            short_range_header: 40,
        }
    }
}

/// Periodic activity. Tick `n` of a process with frequency `f` and phase
/// `offset` fires at `offset + n / f`, for every tick before the end time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub cam_hz: f64,
    pub upload_hz: f64,
    pub request_hz: f64,
    pub sweep_interval: f64,
    pub cam_offset: f64,
    pub upload_offset: f64,
    pub request_offset: f64,
    /// Half-width of the uniform per-beacon jitter, if enabled.
    pub cam_jitter: Option<f64>,
}

impl Default for Timing {
    fn default() -> Self {
        Self {
            cam_hz: 1.0,
            upload_hz: 1.0,
            request_hz: 1.0,
            sweep_interval: 1.0,
            cam_offset: 0.0,
            upload_offset: 0.1,
            request_offset: 0.2,
            cam_jitter: None,
        }
    }
}

/// Template for the periodic dissemination requests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RequestTemplate {
    /// Defaults to the trace bounding box.
    pub area: Option<Rect>,
    pub payload_bytes: u32,
    pub k: usize,
    pub hop_limit: u32,
    pub validity: f64,
}

impl Default for RequestTemplate {
    fn default() -> Self {
        Self {
            area: None,
            payload_bytes: 500,
            k: 5,
            hop_limit: 1,
            validity: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    pub duration: f64,
    pub nt_timeout: f64,
    /// Snapshot age beyond which the geoserver ignores an upload.
    pub staleness: f64,
    /// Oldest neighbor-table entry the geoserver treats as a live link.
    pub link_max_age: Option<f64>,
    pub timing: Timing,
    pub latencies: Latencies,
    pub sizes: MessageSizes,
    /// Short-range communication range in meters.
    pub radio_range: f64,
    pub zone_cell: f64,
    pub strategy: Strategy,
    pub request: RequestTemplate,
    /// Disable to run without periodic requests, e.g. to inject them by hand.
    pub periodic_requests: bool,
    /// Disable to run without beaconing and uploads.
    pub background: bool,
    pub seed: u64,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            duration: 180.0,
            nt_timeout: 5.0,
            staleness: 5.0,
            link_max_age: None,
            timing: Timing::default(),
            latencies: Latencies::default(),
            sizes: MessageSizes::default(),
            radio_range: 300.0,
            zone_cell: 50.0,
            strategy: Strategy::Navi,
            request: RequestTemplate::default(),
            periodic_requests: true,
            background: true,
            seed: 0,
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<(), SimError> {
        let t = &self.timing;
        let positive = [
            ("cam_hz", t.cam_hz),
            ("upload_hz", t.upload_hz),
            ("request_hz", t.request_hz),
            ("sweep_interval", t.sweep_interval),
            ("radio_range", self.radio_range),
            ("zone_cell", self.zone_cell),
            ("nt_timeout", self.nt_timeout),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SimError::InvalidParams(format!("{name} must be positive, got {v}")));
            }
        }
        let non_negative = [
            ("duration", self.duration),
            ("staleness", self.staleness),
            ("cam_offset", t.cam_offset),
            ("upload_offset", t.upload_offset),
            ("request_offset", t.request_offset),
            ("short_range latency", self.latencies.short_range),
            ("lte_down latency", self.latencies.lte_down),
            ("lte_up latency", self.latencies.lte_up),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(SimError::InvalidParams(format!("{name} must be non-negative, got {v}")));
            }
        }
        if self.request.k == 0 {
            return Err(SimError::InvalidParams("k must be at least 1".into()));
        }
        if self.request.payload_bytes == 0 {
            return Err(SimError::InvalidParams("payload must be at least 1 byte".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("event scheduled at {time} s while the clock is at {now} s")]
    EventInPast { time: f64, now: f64 },
    #[error("trace lasts {trace} s but the simulation needs {required} s")]
    TraceTooShort { trace: f64, required: f64 },
    #[error("invalid simulation parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Radio(#[from] RadioError),
    #[error(transparent)]
    Geo(#[from] GeoError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleAgent {
    pub id: VehicleId,
    pub capabilities: Capabilities,
    pub neighbor_table: NeighborTable,
    /// First reception time per request; never overwritten.
    pub received_requests: BTreeMap<RequestId, SimTime>,
    pub(crate) rebroadcast: BTreeSet<RequestId>,
}

impl VehicleAgent {
    pub fn new(id: VehicleId, capabilities: Capabilities) -> Self {
        Self {
            id,
            capabilities,
            neighbor_table: NeighborTable::new(id),
            received_requests: BTreeMap::new(),
            rebroadcast: BTreeSet::new(),
        }
    }
}

/// Processed-event record, kept when event recording is on.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessedEvent {
    pub time: SimTime,
    pub seq: u64,
    pub kind: &'static str,
}

/// Time parameters converted to the integer clock.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Clock {
    pub end: SimTime,
    pub nt_timeout: SimTime,
    pub short_range: SimTime,
    pub lte_down: SimTime,
    pub lte_up: SimTime,
    cam_period: SimTime,
    cam_offset: SimTime,
    upload_period: SimTime,
    upload_offset: SimTime,
    request_period: SimTime,
    request_offset: SimTime,
    sweep_period: SimTime,
    cam_jitter: Option<f64>,
}

impl Clock {
    fn new(p: &SimParams) -> Self {
        let t = &p.timing;
        Self {
            end: SimTime::from_secs(p.duration),
            nt_timeout: SimTime::from_secs(p.nt_timeout),
            short_range: SimTime::from_secs(p.latencies.short_range),
            lte_down: SimTime::from_secs(p.latencies.lte_down),
            lte_up: SimTime::from_secs(p.latencies.lte_up),
            cam_period: SimTime::from_secs(1.0 / t.cam_hz),
            cam_offset: SimTime::from_secs(t.cam_offset),
            upload_period: SimTime::from_secs(1.0 / t.upload_hz),
            upload_offset: SimTime::from_secs(t.upload_offset),
            request_period: SimTime::from_secs(1.0 / t.request_hz),
            request_offset: SimTime::from_secs(t.request_offset),
            sweep_period: SimTime::from_secs(t.sweep_interval),
            cam_jitter: t.cam_jitter.filter(|j| *j > 0.0),
        }
    }

    fn tick(offset: SimTime, period: SimTime, tick: u32) -> SimTime {
        SimTime(offset.0 + period.0 * u64::from(tick))
    }
}

pub struct Simulation<'a> {
    pub(crate) params: SimParams,
    pub(crate) clock: Clock,
    pub(crate) trace: &'a MobilityTrace,
    pub(crate) agents: BTreeMap<VehicleId, VehicleAgent>,
    pub(crate) geoserver: Geoserver,
    pub(crate) queue: EventQueue,
    pub(crate) now: SimTime,
    pub(crate) log: DeliveryLog,
    pub(crate) area: Rect,
    pub(crate) grid: ZoneGrid,
    pub(crate) requests: BTreeMap<RequestId, DisseminationRequest>,
    rng: ChaCha8Rng,
    processed: u64,
    recorded: Option<Vec<ProcessedEvent>>,
}

impl<'a> Simulation<'a> {
    /// Builds the world and schedules the first tick of every periodic
    /// process. Vehicles missing from `capabilities` get both technologies.
    pub fn new(
        params: SimParams,
        trace: &'a MobilityTrace,
        capabilities: &BTreeMap<VehicleId, Capabilities>,
    ) -> Result<Self, SimError> {
        params.validate()?;
        if trace.duration() < params.duration {
            return Err(SimError::TraceTooShort {
                trace: trace.duration(),
                required: params.duration,
            });
        }
        let area = match params.request.area {
            Some(a) => a,
            None => trace.bounding_box().unwrap_or(Rect {
                min: Position::default(),
                max: Position::default(),
            }),
        };
        let grid = ZoneGrid::new(area, params.zone_cell)?;
        let agents = trace
            .vehicles()
            .map(|v| {
                let caps = capabilities.get(&v).copied().unwrap_or_default();
                (v, VehicleAgent::new(v, caps))
            })
            .collect();
        let mut sim = Self {
            geoserver: Geoserver::new(params.staleness).with_link_max_age(params.link_max_age),
            rng: ChaCha8Rng::seed_from_u64(params.seed),
            clock: Clock::new(&params),
            params,
            trace,
            agents,
            queue: EventQueue::default(),
            now: SimTime::ZERO,
            log: DeliveryLog::default(),
            area,
            grid,
            requests: BTreeMap::new(),
            processed: 0,
            recorded: None,
        };
        sim.schedule_initial()?;
        Ok(sim)
    }

    fn schedule_initial(&mut self) -> Result<(), SimError> {
        if self.params.background {
            let ids: Vec<_> = self.agents.keys().copied().collect();
            for v in ids {
                let caps = self.agents[&v].capabilities;
                if caps.short_range {
                    self.schedule_cam(v, 0)?;
                    self.schedule_periodic(EventKind::ExpireSweep { vehicle: v, tick: 0 })?;
                }
                if caps.lte {
                    self.schedule_periodic(EventKind::UploadNt { vehicle: v, tick: 0 })?;
                }
            }
        }
        if self.params.periodic_requests {
            self.schedule_request_tick(0)?;
        }
        Ok(())
    }

    /// Schedules a sweep or upload tick if it falls before the end time.
    fn schedule_periodic(&mut self, kind: EventKind) -> Result<(), SimError> {
        let c = self.clock;
        let t = match kind {
            EventKind::ExpireSweep { tick, .. } => Clock::tick(SimTime::ZERO, c.sweep_period, tick),
            EventKind::UploadNt { tick, .. } => Clock::tick(c.upload_offset, c.upload_period, tick),
            _ => unreachable!("not a periodic background event"),
        };
        if t < c.end {
            self.schedule(t, kind)?;
        }
        Ok(())
    }

    fn schedule_cam(&mut self, v: VehicleId, tick: u32) -> Result<(), SimError> {
        let c = self.clock;
        let nominal = Clock::tick(c.cam_offset, c.cam_period, tick);
        if nominal >= c.end {
            return Ok(());
        }
        let t = match c.cam_jitter {
            Some(j) => {
                let offset = self.rng.random_range(-j..=j);
                SimTime::from_secs(nominal.as_secs() + offset).max(self.now)
            }
            None => nominal,
        };
        self.schedule(t, EventKind::EmitCam { vehicle: v, tick })?;
        Ok(())
    }

    fn schedule_request_tick(&mut self, tick: u32) -> Result<(), SimError> {
        let c = self.clock;
        let t = Clock::tick(c.request_offset, c.request_period, tick);
        if t < c.end {
            let id = RequestId(tick);
            let tpl = self.params.request;
            self.requests.insert(
                id,
                DisseminationRequest {
                    id,
                    area: self.area,
                    payload_bytes: tpl.payload_bytes,
                    k: tpl.k,
                    hop_limit: tpl.hop_limit,
                    validity: tpl.validity,
                    issue_time: t,
                },
            );
            self.schedule(t, EventKind::Request(id))?;
        }
        Ok(())
    }

    pub fn schedule(&mut self, time: SimTime, kind: EventKind) -> Result<u64, SimError> {
        if time < self.now {
            return Err(SimError::EventInPast {
                time: time.as_secs(),
                now: self.now.as_secs(),
            });
        }
        Ok(self.queue.push(time, kind))
    }

    pub fn record_events(&mut self, on: bool) {
        self.recorded = on.then(Vec::new);
    }

    pub fn recorded_events(&self) -> &[ProcessedEvent] {
        self.recorded.as_deref().unwrap_or(&[])
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn params(&self) -> &SimParams {
        &self.params
    }

    pub fn area(&self) -> &Rect {
        &self.area
    }

    pub fn grid(&self) -> &ZoneGrid {
        &self.grid
    }

    pub fn agents(&self) -> &BTreeMap<VehicleId, VehicleAgent> {
        &self.agents
    }

    pub fn agent(&self, v: VehicleId) -> Option<&VehicleAgent> {
        self.agents.get(&v)
    }

    pub fn geoserver(&self) -> &Geoserver {
        &self.geoserver
    }

    pub fn log(&self) -> &DeliveryLog {
        &self.log
    }

    pub fn into_log(self) -> DeliveryLog {
        self.log
    }

    pub fn events_processed(&self) -> u64 {
        self.processed
    }

    pub fn pending_events(&self) -> usize {
        self.queue.len()
    }

    /// Processes the next event; `None` once the queue is drained.
    pub fn step(&mut self) -> Result<Option<ProcessedEvent>, SimError> {
        let Some(event) = self.queue.pop() else {
            return Ok(None);
        };
        if event.time < self.now {
            return Err(SimError::EventInPast {
                time: event.time.as_secs(),
                now: self.now.as_secs(),
            });
        }
        self.now = event.time;
        self.processed += 1;
        let done = ProcessedEvent {
            time: event.time,
            seq: event.seq,
            kind: event.kind.name(),
        };
        if let Some(rec) = self.recorded.as_mut() {
            rec.push(done.clone());
        }
        self.dispatch(event.kind)?;
        Ok(Some(done))
    }

    /// Runs until no events remain. Periodic processes stop at the
    /// configured duration; deliveries already in flight still complete.
    pub fn run_to_end(&mut self) -> Result<(), SimError> {
        while self.step()?.is_some() {}
        Ok(())
    }

    /// Processes every event at or before `t`.
    pub fn run_until(&mut self, t: SimTime) -> Result<(), SimError> {
        while self.queue.peek_time().is_some_and(|next| next <= t) {
            self.step()?;
        }
        Ok(())
    }

    fn dispatch(&mut self, kind: EventKind) -> Result<(), SimError> {
        match kind {
            EventKind::EmitCam { vehicle, tick } => {
                self.emit_cam(vehicle)?;
                self.schedule_cam(vehicle, tick + 1)?;
            }
            EventKind::ExpireSweep { vehicle, tick } => {
                let (now, timeout) = (self.now, self.clock.nt_timeout);
                if let Some(agent) = self.agents.get_mut(&vehicle) {
                    agent.neighbor_table.expire(now, timeout);
                }
                self.schedule_periodic(EventKind::ExpireSweep { vehicle, tick: tick + 1 })?;
            }
            EventKind::UploadNt { vehicle, tick } => {
                self.upload_neighbor_table(vehicle)?;
                self.schedule_periodic(EventKind::UploadNt { vehicle, tick: tick + 1 })?;
            }
            EventKind::GeoserverIngest(snapshot) => self.geoserver.ingest(*snapshot),
            EventKind::Request(id) => {
                if let Some(req) = self.requests.get(&id).cloned() {
                    self.handle_request(&req)?;
                }
                if self.params.periodic_requests {
                    self.schedule_request_tick(id.0 + 1)?;
                }
            }
            EventKind::LteDeliver(v, Message::Payload(p)) => self.on_lte_payload(v, p)?,
            EventKind::ShortRangeDeliver(v, Message::Payload(p)) => self.on_short_range_payload(v, p)?,
            EventKind::ShortRangeDeliver(v, Message::Cam(cam)) => self.process_cam(v, cam),
            EventKind::LteDeliver(_, Message::Cam(_)) => {}
        }
        Ok(())
    }

    /// Short-range receivers of a broadcast from `sender` at the current
    /// instant, by ground-truth position.
    pub(crate) fn short_range_receivers(&self, sender: VehicleId) -> Result<Vec<VehicleId>, SimError> {
        let t = self.now.as_secs();
        let Some(origin) = self.trace.position_at(sender, t)? else {
            return Ok(Vec::new());
        };
        let mut out = Vec::new();
        for (id, agent) in &self.agents {
            if *id == sender || !agent.capabilities.short_range {
                continue;
            }
            if let Some(p) = self.trace.position_at(*id, t)? {
                if link_exists(&origin, &p, self.params.radio_range) {
                    out.push(*id);
                }
            }
        }
        Ok(out)
    }

    /// Broadcasts a CAM from `v`, scheduling one delivery per in-range
    /// short-range receiver. Returns the number of deliveries scheduled.
    pub fn emit_cam(&mut self, v: VehicleId) -> Result<usize, SimError> {
        let Some(agent) = self.agents.get(&v) else {
            return Err(TraceError::UnknownVehicle(v).into());
        };
        if !agent.capabilities.short_range {
            return Ok(0);
        }
        let capabilities = agent.capabilities;
        let Some(kin) = self.trace.kinematics_at(v, self.now.as_secs())? else {
            return Ok(0);
        };
        let cam = Cam {
            sender: v,
            position: kin.position,
            speed: kin.speed,
            heading: kin.heading,
            capabilities,
            gen_time: self.now,
        };
        self.log.transmissions.push(Transmission {
            time: self.now,
            technology: Technology::ShortRange,
            bytes: u64::from(self.params.sizes.cam),
            purpose: Purpose::Cam,
            src: Some(v),
            dst: None,
            request: None,
        });
        let receivers = self.short_range_receivers(v)?;
        let at = self.now + self.clock.short_range;
        for r in &receivers {
            self.schedule(at, EventKind::ShortRangeDeliver(*r, Message::Cam(cam)))?;
        }
        Ok(receivers.len())
    }

    pub fn process_cam(&mut self, v: VehicleId, cam: Cam) {
        let now = self.now;
        if let Some(agent) = self.agents.get_mut(&v) {
            if agent.capabilities.short_range {
                agent.neighbor_table.process_cam(cam, now);
            }
        }
    }

    /// Sends the fresh part of `v`'s neighbor table to the geoserver over
    /// the LTE uplink.
    pub fn upload_neighbor_table(&mut self, v: VehicleId) -> Result<(), SimError> {
        let (now, timeout) = (self.now, self.clock.nt_timeout);
        let Some(position) = self.trace.position_at(v, now.as_secs())? else {
            return Ok(());
        };
        let Some(agent) = self.agents.get_mut(&v) else {
            return Err(TraceError::UnknownVehicle(v).into());
        };
        if !agent.capabilities.lte {
            return Ok(());
        }
        agent.neighbor_table.expire(now, timeout);
        let entries: Vec<_> = agent
            .neighbor_table
            .fresh(now, timeout)
            .map(|(id, e)| NeighborReport {
                id: *id,
                position: e.last_cam.position,
                capabilities: e.last_cam.capabilities,
                last_heard: e.last_heard.as_secs(),
            })
            .collect();
        let sizes = self.params.sizes;
        let bytes = u64::from(sizes.nt_base) + u64::from(sizes.nt_per_entry) * entries.len() as u64;
        let snapshot = NeighborSnapshot {
            owner: v,
            position,
            capabilities: agent.capabilities,
            time: now.as_secs(),
            entries,
        };
        self.log.transmissions.push(Transmission {
            time: now,
            technology: Technology::Lte,
            bytes,
            purpose: Purpose::NtUpload,
            src: Some(v),
            dst: None,
            request: None,
        });
        let at = now + self.clock.lte_up;
        self.schedule(at, EventKind::GeoserverIngest(Box::new(snapshot)))?;
        Ok(())
    }
}

/// Runs a whole scenario and returns its delivery log.
pub fn run(
    params: SimParams,
    trace: &MobilityTrace,
    capabilities: &BTreeMap<VehicleId, Capabilities>,
) -> Result<DeliveryLog, SimError> {
    let mut sim = Simulation::new(params, trace, capabilities)?;
    sim.run_to_end()?;
    Ok(sim.into_log())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn capability_mix_counts() {
        let mix = CapabilityMix {
            both: 0.5,
            lte_only: 0.3,
            short_range_only: 0.2,
        };
        mix.validate().unwrap();
        let caps = mix.assign((0..10).map(VehicleId), 1);
        let count = |c| caps.values().filter(|x| **x == c).count();
        assert_eq!(count(Capabilities::LTE_ONLY), 3);
        assert_eq!(count(Capabilities::SHORT_RANGE_ONLY), 2);
        assert_eq!(count(Capabilities::BOTH), 5);
        assert_eq!(caps, mix.assign((0..10).map(VehicleId), 1));
    }

    #[test]
    fn capability_mix_must_sum_to_one() {
        let mix = CapabilityMix {
            both: 0.5,
            lte_only: 0.0,
            short_range_only: 0.0,
        };
        assert!(mix.validate().is_err());
    }

    #[test]
    fn rejects_short_trace_and_bad_params() {
        let trace = MobilityTrace::new(10.0);
        let params = SimParams::default();
        assert!(matches!(
            Simulation::new(params.clone(), &trace, &BTreeMap::new()),
            Err(SimError::TraceTooShort { .. })
        ));
        let bad = SimParams {
            duration: 5.0,
            radio_range: 0.0,
            ..params
        };
        assert!(matches!(
            Simulation::new(bad, &trace, &BTreeMap::new()),
            Err(SimError::InvalidParams(_))
        ));
    }

    #[test]
    fn past_events_are_rejected() {
        let trace = MobilityTrace::new(10.0);
        let params = SimParams {
            duration: 10.0,
            ..SimParams::default()
        };
        let mut sim = Simulation::new(params, &trace, &BTreeMap::new()).unwrap();
        sim.schedule(SimTime::from_secs(2.0), EventKind::Request(RequestId(999)))
            .unwrap();
        while sim.now() < SimTime::from_secs(2.0) {
            sim.step().unwrap();
        }
        assert!(matches!(
            sim.schedule(SimTime::from_secs(1.0), EventKind::Request(RequestId(1000))),
            Err(SimError::EventInPast { .. })
        ));
    }
}
