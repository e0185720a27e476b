//! Mobility traces: NS-2 ingestion, random-waypoint generation and
//! position queries at arbitrary (continuous) simulation times.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default plausibility cap on vehicle speed, 70 km/h.
pub const DEFAULT_MAX_SPEED: f64 = 70.0 / 3.6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VehicleId(pub u32);

impl fmt::Display for VehicleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Planar position in meters (x east, y north).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Axis-aligned rectangle, closed on all sides for containment tests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: Position,
    pub max: Position,
}

impl Rect {
    pub fn new(min: Position, max: Position) -> Result<Self, TraceError> {
        if !min.is_finite() || !max.is_finite() || min.x > max.x || min.y > max.y {
            return Err(TraceError::InvalidArea { min, max });
        }
        Ok(Self { min, max })
    }

    /// Rectangle anchored at the origin.
    pub fn with_size(width: f64, height: f64) -> Result<Self, TraceError> {
        Self::new(Position::new(0.0, 0.0), Position::new(width, height))
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn area_km2(&self) -> f64 {
        self.width() * self.height() / 1e6
    }

    pub fn is_degenerate(&self) -> bool {
        self.width() <= 0.0 || self.height() <= 0.0
    }

    pub fn contains(&self, p: &Position) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn intersects(&self, other: &Rect) -> bool {
        self.min.x <= other.max.x
            && other.min.x <= self.max.x
            && self.min.y <= other.max.y
            && other.min.y <= self.max.y
    }

    pub fn expanded(&self, margin: f64) -> Rect {
        Rect {
            min: Position::new(self.min.x - margin, self.min.y - margin),
            max: Position::new(self.max.x + margin, self.max.y + margin),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum TraceError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: setdest for node {vehicle} before its initial X_/Y_ position")]
    SetdestBeforeInit { line: usize, vehicle: VehicleId },
    #[error("line {line}: speed {speed} m/s exceeds plausible maximum {max} m/s")]
    ImplausibleSpeed { line: usize, speed: f64, max: f64 },
    #[error("unknown vehicle {0}")]
    UnknownVehicle(VehicleId),
    #[error("vehicle {0} already present in trace")]
    DuplicateVehicle(VehicleId),
    #[error("invalid query time {0}")]
    InvalidTime(f64),
    #[error("vehicle {vehicle}: segment at {time} s starts before the previous one")]
    UnorderedSegment { vehicle: VehicleId, time: f64 },
    #[error("invalid speed {0}")]
    InvalidSpeed(f64),
    #[error("invalid area: min {min:?}, max {max:?}")]
    InvalidArea { min: Position, max: Position },
    #[error("invalid generator parameters: {0}")]
    InvalidGenerator(String),
}

/// One `setdest` leg: starting at `start` at `start_time`, heading towards
/// `dest` at constant `speed` and pausing there once arrived.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start_time: f64,
    pub start: Position,
    pub dest: Position,
    pub speed: f64,
}

impl Segment {
    pub fn length(&self) -> f64 {
        self.start.distance(&self.dest)
    }

    /// Time at which the destination is reached; infinite for a zero speed
    /// on a non-empty leg.
    pub fn arrival_time(&self) -> f64 {
        let len = self.length();
        if len == 0.0 {
            self.start_time
        } else if self.speed == 0.0 {
            f64::INFINITY
        } else {
            self.start_time + len / self.speed
        }
    }

    pub fn position_at(&self, t: f64) -> Position {
        let len = self.length();
        if len == 0.0 || self.speed == 0.0 || t <= self.start_time {
            return self.start;
        }
        let travelled = self.speed * (t - self.start_time);
        if travelled >= len {
            return self.dest;
        }
        let f = travelled / len;
        Position::new(
            self.start.x + (self.dest.x - self.start.x) * f,
            self.start.y + (self.dest.y - self.start.y) * f,
        )
    }

    fn heading(&self) -> f64 {
        (self.dest.y - self.start.y).atan2(self.dest.x - self.start.x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Track {
    pub appears_at: f64,
    pub initial: Position,
    pub segments: Vec<Segment>,
}

impl Track {
    fn active_segment(&self, t: f64) -> Option<&Segment> {
        let idx = self.segments.partition_point(|s| s.start_time <= t);
        idx.checked_sub(1).map(|i| &self.segments[i])
    }

    fn position_at(&self, t: f64) -> Option<Position> {
        if t < self.appears_at {
            return None;
        }
        Some(match self.active_segment(t) {
            Some(seg) => seg.position_at(t),
            None => self.initial,
        })
    }

    /// Resting position after the last leg.
    pub fn final_position(&self) -> Position {
        self.segments
            .last()
            .map(|s| s.position_at(f64::INFINITY))
            .unwrap_or(self.initial)
    }
}

/// Kinematic state carried in awareness beacons.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kinematics {
    pub position: Position,
    pub speed: f64,
    pub heading: f64,
}

/// Piecewise-linear trajectories of a vehicle population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MobilityTrace {
    tracks: BTreeMap<VehicleId, Track>,
    duration: f64,
}

impl MobilityTrace {
    pub fn new(duration: f64) -> Self {
        Self {
            tracks: BTreeMap::new(),
            duration: duration.max(0.0),
        }
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn set_duration(&mut self, duration: f64) {
        self.duration = duration.max(0.0);
    }

    pub fn len(&self) -> usize {
        self.tracks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tracks.is_empty()
    }

    pub fn vehicles(&self) -> impl Iterator<Item = VehicleId> + '_ {
        self.tracks.keys().copied()
    }

    pub fn track(&self, v: VehicleId) -> Option<&Track> {
        self.tracks.get(&v)
    }

    pub fn add_vehicle(
        &mut self,
        v: VehicleId,
        appears_at: f64,
        initial: Position,
    ) -> Result<(), TraceError> {
        if self.tracks.contains_key(&v) {
            return Err(TraceError::DuplicateVehicle(v));
        }
        self.tracks.insert(
            v,
            Track {
                appears_at,
                initial,
                segments: Vec::new(),
            },
        );
        Ok(())
    }

    /// Opens a new leg for `v` at `time` from wherever the vehicle is at
    /// that instant. Legs must be pushed in time order.
    pub fn push_setdest(
        &mut self,
        v: VehicleId,
        time: f64,
        dest: Position,
        speed: f64,
    ) -> Result<(), TraceError> {
        if !(speed.is_finite() && speed >= 0.0) {
            return Err(TraceError::InvalidSpeed(speed));
        }
        let track = self.tracks.get_mut(&v).ok_or(TraceError::UnknownVehicle(v))?;
        if let Some(last) = track.segments.last() {
            if time < last.start_time {
                return Err(TraceError::UnorderedSegment { vehicle: v, time });
            }
        }
        let start = match track.active_segment(time) {
            Some(seg) => seg.position_at(time),
            None => track.initial,
        };
        track.segments.push(Segment {
            start_time: time,
            start,
            dest,
            speed,
        });
        let end = track.segments.last().map(Segment::arrival_time).unwrap_or(time);
        if end.is_finite() {
            self.duration = self.duration.max(end);
        }
        self.duration = self.duration.max(time);
        Ok(())
    }

    /// Position of `v` at `t`; `None` before the vehicle first appears.
    /// Past its last leg a vehicle stays parked at the final destination.
    pub fn position_at(&self, v: VehicleId, t: f64) -> Result<Option<Position>, TraceError> {
        if !t.is_finite() || t < 0.0 {
            return Err(TraceError::InvalidTime(t));
        }
        let track = self.tracks.get(&v).ok_or(TraceError::UnknownVehicle(v))?;
        Ok(track.position_at(t))
    }

    pub fn kinematics_at(&self, v: VehicleId, t: f64) -> Result<Option<Kinematics>, TraceError> {
        let Some(position) = self.position_at(v, t)? else {
            return Ok(None);
        };
        let track = &self.tracks[&v];
        let (speed, heading) = match track.active_segment(t) {
            Some(seg) if t < seg.arrival_time() && seg.length() > 0.0 => (seg.speed, seg.heading()),
            _ => (0.0, 0.0),
        };
        Ok(Some(Kinematics {
            position,
            speed,
            heading,
        }))
    }

    /// Ground-truth positions of every vehicle present at `t`.
    pub fn positions_at(&self, t: f64) -> BTreeMap<VehicleId, Position> {
        self.tracks
            .iter()
            .filter_map(|(v, track)| track.position_at(t).map(|p| (*v, p)))
            .collect()
    }

    /// Smallest rectangle containing every waypoint of every vehicle.
    pub fn bounding_box(&self) -> Option<Rect> {
        let mut points = self.tracks.values().flat_map(|t| {
            std::iter::once(t.initial).chain(t.segments.iter().flat_map(|s| [s.start, s.dest]))
        });
        let first = points.next()?;
        let (mut min, mut max) = (first, first);
        for p in points {
            min.x = min.x.min(p.x);
            min.y = min.y.min(p.y);
            max.x = max.x.max(p.x);
            max.y = max.y.max(p.y);
        }
        Some(Rect { min, max })
    }

    /// Shifts every coordinate so the bounding box starts at the origin.
    pub fn normalized(&self) -> MobilityTrace {
        let Some(bbox) = self.bounding_box() else {
            return self.clone();
        };
        let shift = |p: Position| Position::new(p.x - bbox.min.x, p.y - bbox.min.y);
        let tracks = self
            .tracks
            .iter()
            .map(|(v, t)| {
                let track = Track {
                    appears_at: t.appears_at,
                    initial: shift(t.initial),
                    segments: t
                        .segments
                        .iter()
                        .map(|s| Segment {
                            start: shift(s.start),
                            dest: shift(s.dest),
                            ..*s
                        })
                        .collect(),
                };
                (*v, track)
            })
            .collect();
        MobilityTrace {
            tracks,
            duration: self.duration,
        }
    }

    /// Serializes to the NS-2 movement dialect accepted by [`parse_ns2_trace`].
    /// Appearance times are not representable and are dropped.
    pub fn to_ns2(&self) -> String {
        let mut out = String::new();
        for (v, track) in &self.tracks {
            let _ = writeln!(out, "$node_({v}) set X_ {}", track.initial.x);
            let _ = writeln!(out, "$node_({v}) set Y_ {}", track.initial.y);
            let _ = writeln!(out, "$node_({v}) set Z_ 0");
        }
        let mut moves: Vec<(f64, VehicleId, &Segment)> = self
            .tracks
            .iter()
            .flat_map(|(v, t)| t.segments.iter().map(move |s| (s.start_time, *v, s)))
            .collect();
        moves.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for (time, v, seg) in moves {
            let _ = writeln!(
                out,
                "$ns_ at {time} \"$node_({v}) setdest {} {} {}\"",
                seg.dest.x, seg.dest.y, seg.speed
            );
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceWarning {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct Ns2Options {
    pub max_speed: f64,
}

impl Default for Ns2Options {
    fn default() -> Self {
        Self {
            max_speed: DEFAULT_MAX_SPEED,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ParsedTrace {
    pub trace: MobilityTrace,
    pub warnings: Vec<TraceWarning>,
}

/// Parses an NS-2 movement trace, logging any warnings.
pub fn parse_ns2_trace(text: &str) -> Result<MobilityTrace, TraceError> {
    let parsed = parse_ns2_trace_with(text, &Ns2Options::default())?;
    for w in &parsed.warnings {
        log::warn!("trace line {}: {}", w.line, w.message);
    }
    Ok(parsed.trace)
}

pub fn parse_ns2_trace_with(text: &str, opts: &Ns2Options) -> Result<ParsedTrace, TraceError> {
    #[derive(Default)]
    struct Init {
        x: Option<f64>,
        y: Option<f64>,
    }
    struct Move {
        time: f64,
        vehicle: VehicleId,
        dest: Position,
        speed: f64,
    }

    let mut inits: BTreeMap<VehicleId, Init> = BTreeMap::new();
    let mut moves = Vec::new();
    let mut warnings = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let stmt = raw.trim();
        if stmt.is_empty() || stmt.starts_with('#') {
            continue;
        }
        if stmt.starts_with("$node_(") {
            let (vehicle, rest) = split_node(stmt, line)?;
            let mut tok = rest.split_whitespace();
            if tok.next() != Some("set") {
                continue;
            }
            let axis = tok.next();
            if !matches!(axis, Some("X_") | Some("Y_")) {
                continue;
            }
            let value = number(tok.next(), line, "coordinate")?;
            let init = inits.entry(vehicle).or_default();
            let slot = if axis == Some("X_") {
                &mut init.x
            } else {
                &mut init.y
            };
            if slot.is_some() {
                warnings.push(TraceWarning {
                    line,
                    message: format!("duplicate initial {} for node {vehicle}, last wins", axis.unwrap_or("")),
                });
            }
            *slot = Some(value);
        } else if let Some(rest) = stmt.strip_prefix("$ns_") {
            let mut tok = rest.trim_start().splitn(3, char::is_whitespace);
            if tok.next() != Some("at") {
                continue;
            }
            let time = number(tok.next(), line, "time")?;
            let body = tok.next().unwrap_or("").trim().trim_matches('"').trim();
            if !body.starts_with("$node_(") {
                continue;
            }
            let (vehicle, rest) = split_node(body, line)?;
            let mut tok = rest.split_whitespace();
            if tok.next() != Some("setdest") {
                continue;
            }
            let x = number(tok.next(), line, "destination x")?;
            let y = number(tok.next(), line, "destination y")?;
            let speed = number(tok.next(), line, "speed")?;
            if time < 0.0 {
                return Err(parse_err(line, format!("negative time {time}")));
            }
            if speed < 0.0 {
                return Err(parse_err(line, format!("negative speed {speed}")));
            }
            if speed > opts.max_speed {
                return Err(TraceError::ImplausibleSpeed {
                    line,
                    speed,
                    max: opts.max_speed,
                });
            }
            match inits.get(&vehicle) {
                Some(Init {
                    x: Some(_),
                    y: Some(_),
                }) => {}
                _ => return Err(TraceError::SetdestBeforeInit { line, vehicle }),
            }
            moves.push(Move {
                time,
                vehicle,
                dest: Position::new(x, y),
                speed,
            });
        }
    }

    let mut trace = MobilityTrace::new(0.0);
    for (vehicle, init) in &inits {
        if let (Some(x), Some(y)) = (init.x, init.y) {
            trace.add_vehicle(*vehicle, 0.0, Position::new(x, y))?;
        } else {
            warnings.push(TraceWarning {
                line: 0,
                message: format!("node {vehicle} has an incomplete initial position, ignored"),
            });
        }
    }
    moves.sort_by(|a, b| a.time.total_cmp(&b.time));
    for m in moves {
        trace.push_setdest(m.vehicle, m.time, m.dest, m.speed)?;
    }
    Ok(ParsedTrace { trace, warnings })
}

fn parse_err(line: usize, message: String) -> TraceError {
    TraceError::Parse { line, message }
}

fn split_node(stmt: &str, line: usize) -> Result<(VehicleId, &str), TraceError> {
    let inner = &stmt["$node_(".len()..];
    let close = inner
        .find(')')
        .ok_or_else(|| parse_err(line, "unterminated node index".into()))?;
    let id = inner[..close]
        .trim()
        .parse::<u32>()
        .map_err(|e| parse_err(line, format!("bad node index {:?}: {e}", &inner[..close])))?;
    Ok((VehicleId(id), &inner[close + 1..]))
}

fn number(tok: Option<&str>, line: usize, what: &str) -> Result<f64, TraceError> {
    let tok = tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    let v = tok
        .trim_matches('"')
        .parse::<f64>()
        .map_err(|e| parse_err(line, format!("bad {what} {tok:?}: {e}")))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("non-finite {what}")));
    }
    Ok(v)
}

/// Parameters of the random-waypoint generator. Defaults mirror the
/// 45-vehicle, 180 s, roughly 0.44 km² urban scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticTraceSpec {
    pub seed: u64,
    pub vehicles: usize,
    pub area: Rect,
    pub duration: f64,
    /// Minimum and maximum speed in m/s.
    pub speed_range: (f64, f64),
}

impl Default for SyntheticTraceSpec {
    fn default() -> Self {
        Self {
            seed: 7,
            vehicles: 45,
            area: Rect {
                min: Position::new(0.0, 0.0),
                max: Position::new(600.0, 730.0),
            },
            duration: 180.0,
            speed_range: (10.0 / 3.6, 50.0 / 3.6),
        }
    }
}

impl SyntheticTraceSpec {
    pub fn generate(&self) -> Result<MobilityTrace, TraceError> {
        generate_synthetic_trace(self.seed, self.vehicles, self.area, self.duration, self.speed_range)
    }
}

/// Random-waypoint trajectories, fully determined by `seed`. Every vehicle
/// keeps drawing waypoints until its next leg would start after `duration`.
pub fn generate_synthetic_trace(
    seed: u64,
    n: usize,
    area: Rect,
    duration: f64,
    speed_range: (f64, f64),
) -> Result<MobilityTrace, TraceError> {
    let (vmin, vmax) = speed_range;
    if n == 0 {
        return Err(TraceError::InvalidGenerator("need at least one vehicle".into()));
    }
    if area.is_degenerate() {
        return Err(TraceError::InvalidGenerator("degenerate area".into()));
    }
    if !(duration.is_finite() && duration >= 0.0) {
        return Err(TraceError::InvalidGenerator(format!("bad duration {duration}")));
    }
    if !(vmin > 0.0 && vmin <= vmax && vmax.is_finite()) {
        return Err(TraceError::InvalidGenerator(format!(
            "bad speed range {vmin}..{vmax}"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let point = |rng: &mut ChaCha8Rng| {
        Position::new(
            rng.random_range(area.min.x..=area.max.x),
            rng.random_range(area.min.y..=area.max.y),
        )
    };
    let mut trace = MobilityTrace::new(duration);
    for i in 0..n {
        let v = VehicleId(i as u32);
        let initial = point(&mut rng);
        trace.add_vehicle(v, 0.0, initial)?;
        let mut t = 0.0;
        while t < duration {
            let dest = point(&mut rng);
            let speed = if vmin == vmax {
                vmin
            } else {
                rng.random_range(vmin..vmax)
            };
            trace.push_setdest(v, t, dest, speed)?;
            t = trace.tracks[&v].segments.last().map(Segment::arrival_time).unwrap_or(t);
        }
    }
    trace.duration = duration;
    Ok(trace)
}
