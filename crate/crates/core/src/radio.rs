//! Deterministic short-range propagation: a threshold range derived from the
//! link budget, and unit-disk connectivity snapshots.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::trace::{MobilityTrace, Position, VehicleId};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Center of the 5.9 GHz ITS band.
pub const ITS_G5_FREQUENCY: f64 = 5.9e9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PropagationModel {
    /// Fixed communication range in meters, independent of power.
    FixedRange(f64),
    /// Range at which free-space path loss consumes the whole link budget.
    FriisThreshold,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadioConfig {
    pub tx_power_dbm: f64,
    pub rx_sensitivity_dbm: f64,
    pub frequency_hz: f64,
    pub model: PropagationModel,
}

impl Default for RadioConfig {
    fn default() -> Self {
        Self {
            tx_power_dbm: 23.0,
            rx_sensitivity_dbm: -85.0,
            frequency_hz: ITS_G5_FREQUENCY,
            model: PropagationModel::FriisThreshold,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum RadioError {
    #[error("tx power {0} dBm outside [0, 33]")]
    TxPower(f64),
    #[error("frequency must be positive, got {0} Hz")]
    Frequency(f64),
    #[error("fixed range must be positive, got {0} m")]
    Range(f64),
    #[error("range_from_power needs the Friis threshold model")]
    NotFriis,
}

impl RadioConfig {
    pub fn with_tx_power(tx_power_dbm: f64) -> Self {
        Self {
            tx_power_dbm,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), RadioError> {
        if !(0.0..=33.0).contains(&self.tx_power_dbm) {
            return Err(RadioError::TxPower(self.tx_power_dbm));
        }
        if !(self.frequency_hz > 0.0) {
            return Err(RadioError::Frequency(self.frequency_hz));
        }
        if let PropagationModel::FixedRange(r) = self.model {
            if !(r > 0.0) {
                return Err(RadioError::Range(r));
            }
        }
        Ok(())
    }

    /// Communication range under whichever model is configured.
    pub fn range(&self) -> Result<f64, RadioError> {
        self.validate()?;
        match self.model {
            PropagationModel::FixedRange(r) => Ok(r),
            PropagationModel::FriisThreshold => range_from_power(self),
        }
    }
}

/// Distance at which free-space path loss equals `tx_power - rx_sensitivity`:
/// `R = (λ / 4π) · 10^((Ptx − Psens) / 20)`.
pub fn range_from_power(cfg: &RadioConfig) -> Result<f64, RadioError> {
    if cfg.model != PropagationModel::FriisThreshold {
        return Err(RadioError::NotFriis);
    }
    if !(cfg.frequency_hz > 0.0) {
        return Err(RadioError::Frequency(cfg.frequency_hz));
    }
    let wavelength = SPEED_OF_LIGHT / cfg.frequency_hz;
    let budget_db = cfg.tx_power_dbm - cfg.rx_sensitivity_dbm;
    Ok(wavelength / (4.0 * PI) * 10f64.powf(budget_db / 20.0))
}

/// Closed-ball link test: a pair exactly `range` apart is connected.
pub fn link_exists(a: &Position, b: &Position, range: f64) -> bool {
    a.distance(b) <= range
}

/// Undirected unit-disk graph of the vehicles present at one instant.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConnectivityGraph {
    pub timestamp: f64,
    adjacency: BTreeMap<VehicleId, BTreeSet<VehicleId>>,
}

impl ConnectivityGraph {
    pub fn nodes(&self) -> impl Iterator<Item = VehicleId> + '_ {
        self.adjacency.keys().copied()
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn neighbors(&self, v: VehicleId) -> Option<&BTreeSet<VehicleId>> {
        self.adjacency.get(&v)
    }

    pub fn has_edge(&self, a: VehicleId, b: VehicleId) -> bool {
        self.adjacency.get(&a).is_some_and(|n| n.contains(&b))
    }

    /// Edges as `(a, b)` with `a < b`.
    pub fn edges(&self) -> Vec<(VehicleId, VehicleId)> {
        self.adjacency
            .iter()
            .flat_map(|(a, ns)| ns.iter().filter(move |b| a < *b).map(move |b| (*a, *b)))
            .collect()
    }

    pub fn degree(&self, v: VehicleId) -> usize {
        self.adjacency.get(&v).map_or(0, BTreeSet::len)
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adjacency.values().map(BTreeSet::len).collect()
    }

    pub fn mean_degree(&self) -> f64 {
        if self.adjacency.is_empty() {
            return 0.0;
        }
        self.degrees().iter().sum::<usize>() as f64 / self.adjacency.len() as f64
    }
}

pub fn connectivity_snapshot(
    positions: &BTreeMap<VehicleId, Position>,
    range: f64,
    t: f64,
) -> ConnectivityGraph {
    let mut adjacency: BTreeMap<VehicleId, BTreeSet<VehicleId>> =
        positions.keys().map(|v| (*v, BTreeSet::new())).collect();
    let nodes: Vec<_> = positions.iter().collect();
    for (i, (a, pa)) in nodes.iter().enumerate() {
        for (b, pb) in &nodes[i + 1..] {
            if link_exists(pa, pb, range) {
                adjacency.get_mut(a).expect("node").insert(**b);
                adjacency.get_mut(b).expect("node").insert(**a);
            }
        }
    }
    ConnectivityGraph {
        timestamp: t,
        adjacency,
    }
}

/// Node degrees pooled over ground-truth snapshots every `step` seconds in
/// `[0, end)`, with `end` capped at the trace duration.
pub fn degree_samples(trace: &MobilityTrace, range: f64, step: f64, end: f64) -> Vec<usize> {
    let end = end.min(trace.duration());
    let mut out = Vec::new();
    if !(step > 0.0) {
        return out;
    }
    let mut i = 0u32;
    loop {
        let t = f64::from(i) * step;
        if t >= end {
            break;
        }
        let graph = connectivity_snapshot(&trace.positions_at(t), range, t);
        out.extend(graph.degrees());
        i += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn friis(tx: f64, sens: f64) -> RadioConfig {
        RadioConfig {
            tx_power_dbm: tx,
            rx_sensitivity_dbm: sens,
            ..RadioConfig::default()
        }
    }

    #[test]
    fn zero_budget_gives_lambda_over_4pi() {
        let r = range_from_power(&friis(10.0, 10.0)).unwrap();
        assert!((r - 0.004043).abs() < 1e-6, "{r}");
    }

    #[test]
    fn sixteen_dbm_at_minus_85() {
        let r = range_from_power(&friis(16.0, -85.0)).unwrap();
        // free-space loss 20·log10(4πR/λ) at R must equal the 101 dB budget
        let wavelength = 0.050_812_28;
        let fspl = 20.0 * (4.0 * PI * r / wavelength).log10();
        assert!((fspl - 101.0).abs() < 1e-4, "{fspl}");
        assert!((r - 453.6).abs() < 0.1, "{r}");
    }

    #[test]
    fn six_db_doubles_range() {
        let r1 = range_from_power(&friis(10.0, -80.0)).unwrap();
        let r2 = range_from_power(&friis(10.0 + 20.0 * 2f64.log10(), -80.0)).unwrap();
        assert!((r2 / r1 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn bad_configs() {
        let mut cfg = friis(16.0, -85.0);
        cfg.frequency_hz = 0.0;
        assert_eq!(range_from_power(&cfg), Err(RadioError::Frequency(0.0)));
        assert_eq!(friis(40.0, -85.0).range(), Err(RadioError::TxPower(40.0)));
        let fixed = RadioConfig {
            model: PropagationModel::FixedRange(0.0),
            ..RadioConfig::default()
        };
        assert_eq!(fixed.range(), Err(RadioError::Range(0.0)));
        assert_eq!(range_from_power(&fixed), Err(RadioError::NotFriis));
    }

    #[test]
    fn link_boundary_is_inclusive() {
        let a = Position::new(0.0, 0.0);
        assert!(link_exists(&a, &a, 1.0));
        assert!(link_exists(&a, &Position::new(100.0, 0.0), 100.0));
        assert!(!link_exists(&a, &Position::new(100.0 + 1e-6, 0.0), 100.0));
    }

    #[test]
    fn collinear_path_graph() {
        let positions: BTreeMap<_, _> = [0.0, 100.0, 200.0]
            .iter()
            .enumerate()
            .map(|(i, x)| (VehicleId(i as u32), Position::new(*x, 0.0)))
            .collect();
        let g = connectivity_snapshot(&positions, 100.0, 0.0);
        assert_eq!(
            g.edges(),
            vec![(VehicleId(0), VehicleId(1)), (VehicleId(1), VehicleId(2))]
        );
    }

    #[test]
    fn single_node_has_no_edges() {
        let positions = BTreeMap::from([(VehicleId(4), Position::new(3.0, 3.0))]);
        let g = connectivity_snapshot(&positions, 500.0, 1.0);
        assert!(g.edges().is_empty());
        assert_eq!(g.degree(VehicleId(4)), 0);
    }
}
