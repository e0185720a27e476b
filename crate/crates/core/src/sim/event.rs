use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::dissem::RequestId;
use crate::geoserver::NeighborSnapshot;
use crate::sim::{Cam, SimTime};
use crate::trace::VehicleId;

/// Dissemination payload in flight for one request.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Payload {
    pub request: RequestId,
    /// Short-range hops travelled so far; 0 for the LTE leg.
    pub hop: u32,
    /// Whether the receiver should rebroadcast on the short-range channel.
    pub relay: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Message {
    Cam(Cam),
    Payload(Payload),
}

#[derive(Debug, Clone, PartialEq)]
pub enum EventKind {
    EmitCam { vehicle: VehicleId, tick: u32 },
    ExpireSweep { vehicle: VehicleId, tick: u32 },
    UploadNt { vehicle: VehicleId, tick: u32 },
    GeoserverIngest(Box<NeighborSnapshot>),
    Request(RequestId),
    LteDeliver(VehicleId, Message),
    ShortRangeDeliver(VehicleId, Message),
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::EmitCam { .. } => "emit_cam",
            EventKind::ExpireSweep { .. } => "expire_sweep",
            EventKind::UploadNt { .. } => "upload_nt",
            EventKind::GeoserverIngest(_) => "geoserver_ingest",
            EventKind::Request(_) => "request",
            EventKind::LteDeliver(..) => "lte_deliver",
            EventKind::ShortRangeDeliver(..) => "short_range_deliver",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Event {
    pub time: SimTime,
    pub seq: u64,
    pub kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl Ord for Event {
    // reversed so the max-heap pops the earliest (time, seq) first
    fn cmp(&self, other: &Self) -> Ordering {
        (other.time, other.seq).cmp(&(self.time, self.seq))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Pending events, totally ordered by `(time, seq)`.
#[derive(Debug, Default)]
pub struct EventQueue {
    heap: BinaryHeap<Event>,
    next_seq: u64,
}

impl EventQueue {
    pub fn push(&mut self, time: SimTime, kind: EventKind) -> u64 {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Event { time, seq, kind });
        seq
    }

    pub fn pop(&mut self) -> Option<Event> {
        self.heap.pop()
    }

    pub fn peek_time(&self) -> Option<SimTime> {
        self.heap.peek().map(|e| e.time)
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}
