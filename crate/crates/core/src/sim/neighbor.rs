use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::sim::{Capabilities, SimTime};
use crate::trace::{Position, VehicleId};

/// Simplified cooperative awareness message.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cam {
    pub sender: VehicleId,
    pub position: Position,
    pub speed: f64,
    pub heading: f64,
    pub capabilities: Capabilities,
    pub gen_time: SimTime,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborEntry {
    pub last_cam: Cam,
    pub last_heard: SimTime,
}

/// Recently heard CAM senders of one vehicle.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborTable {
    owner: VehicleId,
    entries: BTreeMap<VehicleId, NeighborEntry>,
}

impl NeighborTable {
    pub fn new(owner: VehicleId) -> Self {
        Self {
            owner,
            entries: BTreeMap::new(),
        }
    }

    pub fn owner(&self) -> VehicleId {
        self.owner
    }

    /// Records `cam` as heard at `t`. The owner's own beacons are ignored.
    pub fn process_cam(&mut self, cam: Cam, t: SimTime) {
        if cam.sender == self.owner {
            return;
        }
        self.entries.insert(
            cam.sender,
            NeighborEntry {
                last_cam: cam,
                last_heard: t,
            },
        );
    }

    /// Drops entries not heard within `timeout`; returns how many went.
    pub fn expire(&mut self, now: SimTime, timeout: SimTime) -> usize {
        let before = self.entries.len();
        self.entries.retain(|_, e| now.saturating_sub(e.last_heard) <= timeout);
        before - self.entries.len()
    }

    pub fn fresh(
        &self,
        now: SimTime,
        timeout: SimTime,
    ) -> impl Iterator<Item = (&VehicleId, &NeighborEntry)> {
        self.entries
            .iter()
            .filter(move |(_, e)| now.saturating_sub(e.last_heard) <= timeout)
    }

    pub fn get(&self, v: VehicleId) -> Option<&NeighborEntry> {
        self.entries.get(&v)
    }

    pub fn contains(&self, v: VehicleId) -> bool {
        self.entries.contains_key(&v)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&VehicleId, &NeighborEntry)> {
        self.entries.iter()
    }

    /// Age of the least recently heard entry.
    pub fn oldest_age(&self, now: SimTime) -> Option<SimTime> {
        self.entries
            .values()
            .map(|e| now.saturating_sub(e.last_heard))
            .max()
    }
}
