//! Request lifecycle and strategy execution.
//!
//! NAVI: the geoserver elects virtual infrastructure (VI), pushes the
//! payload to each VI over LTE, and every VI rebroadcasts it once on the
//! short-range channel (receivers relay further while under the hop limit).
//! All-LTE: the geoserver unicasts the payload to every LTE vehicle in the
//! area.
//!
//! Selection works on the geoserver's possibly stale view; whether a
//! broadcast is heard is decided by ground-truth positions at send time.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geoserver::{select_with_policy, DualTechnology, SelectionPolicy, SelectionResult};
use crate::sim::{EventKind, Message, Payload, SimError, SimTime, Simulation};
use crate::trace::{Rect, VehicleId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RequestId(pub u32);

impl fmt::Display for RequestId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Navi,
    AllLte,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Navi => "navi",
            Strategy::AllLte => "all_lte",
        })
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "navi" => Ok(Strategy::Navi),
            "all_lte" | "all-lte" => Ok(Strategy::AllLte),
            other => Err(format!("unknown strategy {other:?} (expected navi or all_lte)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisseminationRequest {
    pub id: RequestId,
    pub area: Rect,
    pub payload_bytes: u32,
    /// Upper bound on the number of VI nodes.
    pub k: usize,
    pub hop_limit: u32,
    /// Seconds the information stays useful.
    pub validity: f64,
    pub issue_time: SimTime,
}

#[derive(Debug, Error, PartialEq)]
pub enum RequestError {
    #[error("k must be at least 1")]
    ZeroK,
    #[error("payload must be at least 1 byte")]
    EmptyPayload,
    #[error("request area does not intersect the scenario")]
    OutsideScenario,
}

impl DisseminationRequest {
    pub fn validate(&self, scenario: &Rect) -> Result<(), RequestError> {
        if self.k == 0 {
            return Err(RequestError::ZeroK);
        }
        if self.payload_bytes == 0 {
            return Err(RequestError::EmptyPayload);
        }
        if !self.area.intersects(scenario) {
            return Err(RequestError::OutsideScenario);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Technology {
    ShortRange,
    Lte,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Purpose {
    Cam,
    NtUpload,
    Request,
    ViNotify,
    LocalBroadcast,
    LteUnicast,
}

impl Purpose {
    /// Traffic caused by a dissemination request, as opposed to background
    /// awareness traffic.
    pub fn is_dissemination(&self) -> bool {
        matches!(
            self,
            Purpose::Request | Purpose::ViNotify | Purpose::LocalBroadcast | Purpose::LteUnicast
        )
    }
}

/// One transmission. `src`/`dst` of `None` stand for the geoserver side
/// (or a broadcast, for `dst`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transmission {
    pub time: SimTime,
    pub technology: Technology,
    pub bytes: u64,
    #[serde(rename = "kind")]
    pub purpose: Purpose,
    pub src: Option<VehicleId>,
    pub dst: Option<VehicleId>,
    pub request: Option<RequestId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reception {
    pub request: RequestId,
    pub vehicle: VehicleId,
    pub time: SimTime,
    pub technology: Technology,
    pub hop: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestRecord {
    pub id: RequestId,
    pub issue_time: SimTime,
    pub strategy: Strategy,
    pub k: usize,
    pub hop_limit: u32,
    /// Ground-truth vehicles inside the area at issue time.
    pub population: Vec<VehicleId>,
    pub selection: Option<SelectionResult>,
    pub failed: bool,
}

/// Everything the metrics need, in event order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DeliveryLog {
    pub requests: Vec<RequestRecord>,
    pub transmissions: Vec<Transmission>,
    pub receptions: Vec<Reception>,
}

/// Line-delimited log record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum LogRecord {
    Request(RequestRecord),
    Tx(Transmission),
    Rx(Reception),
}

#[derive(Debug, Error)]
pub enum LogError {
    #[error("log i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("log line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}

impl DeliveryLog {
    pub fn request(&self, id: RequestId) -> Option<&RequestRecord> {
        self.requests.iter().find(|r| r.id == id)
    }

    pub fn receptions_for(&self, id: RequestId) -> impl Iterator<Item = &Reception> {
        self.receptions.iter().filter(move |r| r.request == id)
    }

    pub fn transmissions_for(&self, id: RequestId) -> impl Iterator<Item = &Transmission> {
        self.transmissions.iter().filter(move |t| t.request == Some(id))
    }

    /// Writes one JSON record per line: requests first, then transmissions,
    /// then receptions, each in event order.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<(), LogError> {
        let records = self
            .requests
            .iter()
            .cloned()
            .map(LogRecord::Request)
            .chain(self.transmissions.iter().cloned().map(LogRecord::Tx))
            .chain(self.receptions.iter().cloned().map(LogRecord::Rx));
        for rec in records {
            serde_json::to_writer(&mut out, &rec).map_err(|source| LogError::Json { line: 0, source })?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(input: R) -> Result<Self, LogError> {
        let mut log = DeliveryLog::default();
        for (idx, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: LogRecord =
                serde_json::from_str(&line).map_err(|source| LogError::Json { line: idx + 1, source })?;
            match rec {
                LogRecord::Request(r) => log.requests.push(r),
                LogRecord::Tx(t) => log.transmissions.push(t),
                LogRecord::Rx(r) => log.receptions.push(r),
            }
        }
        Ok(log)
    }

    /// Structural self-checks; returns one message per violation.
    pub fn check_invariants(&self) -> Vec<String> {
        let mut problems = Vec::new();
        let mut seen = BTreeSet::new();
        for rx in &self.receptions {
            if !seen.insert((rx.request, rx.vehicle)) {
                problems.push(format!(
                    "request {} received twice by vehicle {}",
                    rx.request, rx.vehicle
                ));
            }
        }
        let mut sends: BTreeMap<RequestId, Vec<&Transmission>> = BTreeMap::new();
        for tx in &self.transmissions {
            if let Some(r) = tx.request {
                sends.entry(r).or_default().push(tx);
            }
        }
        for rx in &self.receptions {
            let caused = sends.get(&rx.request).is_some_and(|txs| {
                txs.iter().any(|tx| {
                    tx.time <= rx.time
                        && tx.technology == rx.technology
                        && match rx.technology {
                            Technology::Lte => tx.dst == Some(rx.vehicle),
                            Technology::ShortRange => tx.purpose == Purpose::LocalBroadcast,
                        }
                })
            });
            if !caused {
                problems.push(format!(
                    "reception of request {} by {} at {} has no earlier transmission",
                    rx.request, rx.vehicle, rx.time
                ));
            }
        }
        for req in &self.requests {
            if let Some(sel) = &req.selection {
                if sel.selected.len() > req.k {
                    problems.push(format!("request {} selected more than k nodes", req.id));
                }
            }
        }
        problems
    }
}

impl Simulation<'_> {
    /// Takes a request at the geoserver at the current instant: logs the
    /// request packet, runs the configured strategy and schedules its
    /// deliveries.
    pub fn handle_request(&mut self, req: &DisseminationRequest) -> Result<(), SimError> {
        let t = self.now;
        let population = self.population(req, t)?;
        self.log.transmissions.push(Transmission {
            time: t,
            technology: Technology::Lte,
            bytes: u64::from(self.params.sizes.request),
            purpose: Purpose::Request,
            src: None,
            dst: None,
            request: Some(req.id),
        });
        let strategy = self.params.strategy;
        let mut record = RequestRecord {
            id: req.id,
            issue_time: t,
            strategy,
            k: req.k,
            hop_limit: req.hop_limit,
            population,
            selection: None,
            failed: false,
        };
        match strategy {
            Strategy::Navi => {
                let view = self.geoserver.world_view(t.as_secs());
                let latencies = self.params.latencies;
                let policy = SelectionPolicy {
                    min_delivery_latency: latencies.lte_down + latencies.short_range,
                    filter: &DualTechnology,
                };
                let grid = if req.area == *self.grid.area() {
                    self.grid
                } else {
                    crate::geoserver::ZoneGrid::new(req.area, self.params.zone_cell)?
                };
                let selection = select_with_policy(&view, &grid, req, &policy);
                record.failed = selection.is_empty();
                if !selection.is_empty() {
                    self.execute_navi(&selection, req, t)?;
                }
                record.selection = Some(selection);
            }
            Strategy::AllLte => {
                let targets: Vec<_> = record
                    .population
                    .iter()
                    .copied()
                    .filter(|v| self.agents.get(v).is_some_and(|a| a.capabilities.lte))
                    .collect();
                record.failed = targets.is_empty();
                self.execute_all_lte(req, t, &targets)?;
            }
        }
        self.log.requests.push(record);
        Ok(())
    }

    fn population(&self, req: &DisseminationRequest, t: SimTime) -> Result<Vec<VehicleId>, SimError> {
        let mut out = Vec::new();
        for v in self.agents.keys() {
            if let Some(p) = self.trace.position_at(*v, t.as_secs())? {
                if req.area.contains(&p) {
                    out.push(*v);
                }
            }
        }
        Ok(out)
    }

    /// Notifies every selected VI over LTE; each rebroadcasts on arrival.
    pub fn execute_navi(
        &mut self,
        selection: &SelectionResult,
        req: &DisseminationRequest,
        t: SimTime,
    ) -> Result<(), SimError> {
        self.requests.entry(req.id).or_insert_with(|| req.clone());
        let bytes = u64::from(self.params.sizes.vi_notify) + u64::from(req.payload_bytes);
        let at = t + self.clock.lte_down;
        for vi in &selection.selected {
            self.log.transmissions.push(Transmission {
                time: t,
                technology: Technology::Lte,
                bytes,
                purpose: Purpose::ViNotify,
                src: None,
                dst: Some(*vi),
                request: Some(req.id),
            });
            let payload = Payload {
                request: req.id,
                hop: 0,
                relay: true,
            };
            self.schedule(at, EventKind::LteDeliver(*vi, Message::Payload(payload)))?;
        }
        Ok(())
    }

    /// One LTE unicast per target, all arriving after the downlink latency.
    pub fn execute_all_lte(
        &mut self,
        req: &DisseminationRequest,
        t: SimTime,
        targets: &[VehicleId],
    ) -> Result<(), SimError> {
        self.requests.entry(req.id).or_insert_with(|| req.clone());
        let bytes = u64::from(self.params.sizes.lte_header) + u64::from(req.payload_bytes);
        let at = t + self.clock.lte_down;
        for v in targets {
            self.log.transmissions.push(Transmission {
                time: t,
                technology: Technology::Lte,
                bytes,
                purpose: Purpose::LteUnicast,
                src: None,
                dst: Some(*v),
                request: Some(req.id),
            });
            let payload = Payload {
                request: req.id,
                hop: 0,
                relay: false,
            };
            self.schedule(at, EventKind::LteDeliver(*v, Message::Payload(payload)))?;
        }
        Ok(())
    }

    fn record_reception(&mut self, v: VehicleId, p: Payload, technology: Technology) {
        let now = self.now;
        let Some(agent) = self.agents.get_mut(&v) else {
            return;
        };
        if agent.received_requests.contains_key(&p.request) {
            return;
        }
        agent.received_requests.insert(p.request, now);
        self.log.receptions.push(Reception {
            request: p.request,
            vehicle: v,
            time: now,
            technology,
            hop: p.hop,
        });
    }

    pub(crate) fn on_lte_payload(&mut self, v: VehicleId, p: Payload) -> Result<(), SimError> {
        self.record_reception(v, p, Technology::Lte);
        if p.relay {
            self.local_broadcast(v, p)?;
        }
        Ok(())
    }

    pub(crate) fn on_short_range_payload(&mut self, v: VehicleId, p: Payload) -> Result<(), SimError> {
        self.record_reception(v, p, Technology::ShortRange);
        if p.relay {
            self.local_broadcast(v, p)?;
        }
        Ok(())
    }

    /// Rebroadcasts `p` from `v` once per request.
    fn local_broadcast(&mut self, v: VehicleId, p: Payload) -> Result<(), SimError> {
        let Some(agent) = self.agents.get_mut(&v) else {
            return Ok(());
        };
        if !agent.capabilities.short_range || !agent.rebroadcast.insert(p.request) {
            return Ok(());
        }
        let Some(req) = self.requests.get(&p.request) else {
            return Ok(());
        };
        let hop_limit = req.hop_limit;
        let bytes = u64::from(req.payload_bytes) + u64::from(self.params.sizes.short_range_header);
        if self.trace.position_at(v, self.now.as_secs())?.is_none() {
            return Ok(());
        }
        self.log.transmissions.push(Transmission {
            time: self.now,
            technology: Technology::ShortRange,
            bytes,
            purpose: Purpose::LocalBroadcast,
            src: Some(v),
            dst: None,
            request: Some(p.request),
        });
        let hop = p.hop + 1;
        let next = Payload {
            request: p.request,
            hop,
            relay: hop < hop_limit,
        };
        let at = self.now + self.clock.short_range;
        for r in self.short_range_receivers(v)? {
            self.schedule(at, EventKind::ShortRangeDeliver(r, Message::Payload(next)))?;
        }
        Ok(())
    }
}
