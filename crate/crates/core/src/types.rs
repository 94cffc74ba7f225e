//! Domain types: event sequences, datasets, type clusters, causality graphs.

use crate::error::{HawkesError, Result};

/// One event of a marked temporal point process. Type indices are 0-based
/// internally; the JSON Lines dataset format uses 1-based indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub type_idx: usize,
}

/// One realization on a horizon `[0, T]`: events sorted by time, ties broken
/// by type index (ties are allowed only across distinct types).
#[derive(Debug, Clone, PartialEq)]
pub struct EventSequence {
    events: Vec<Event>,
    horizon: f64,
}

impl EventSequence {
    /// Builds a sequence from `(time, type_idx)` pairs, sorting into the
    /// canonical `(time, type)` order and validating the invariants.
    pub fn new(events: Vec<(f64, usize)>, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(HawkesError::InvalidSequence(format!(
                "horizon must be positive and finite, got {horizon}"
            )));
        }
        let mut events: Vec<Event> = events
            .into_iter()
            .map(|(time, type_idx)| Event { time, type_idx })
            .collect();
        for e in &events {
            if !e.time.is_finite() || e.time < 0.0 || e.time > horizon {
                return Err(HawkesError::InvalidSequence(format!(
                    "event time {} outside [0, {horizon}]",
                    e.time
                )));
            }
        }
        events.sort_by(|a, b| {
            a.time
                .partial_cmp(&b.time)
                .unwrap()
                .then(a.type_idx.cmp(&b.type_idx))
        });
        for w in events.windows(2) {
            if w[0].time == w[1].time && w[0].type_idx == w[1].type_idx {
                return Err(HawkesError::InvalidSequence(format!(
                    "duplicate event (t={}, type={})",
                    w[0].time, w[0].type_idx
                )));
            }
        }
        Ok(Self { events, horizon })
    }

    pub fn empty(horizon: f64) -> Result<Self> {
        Self::new(Vec::new(), horizon)
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Largest type index present, or None for an empty sequence.
    pub fn max_type(&self) -> Option<usize> {
        self.events.iter().map(|e| e.type_idx).max()
    }
}

/// A set of event sequences over a common set of `num_types` event types.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub sequences: Vec<EventSequence>,
    pub num_types: usize,
}

impl Dataset {
    pub fn new(sequences: Vec<EventSequence>, num_types: usize) -> Result<Self> {
        if num_types == 0 {
            return Err(HawkesError::InvalidConfig("num_types must be >= 1".into()));
        }
        for (c, seq) in sequences.iter().enumerate() {
            if let Some(max) = seq.max_type() {
                if max >= num_types {
                    return Err(HawkesError::DimensionMismatch(format!(
                        "sequence {c} contains type index {max} but dataset has {num_types} types"
                    )));
                }
            }
        }
        Ok(Self {
            sequences,
            num_types,
        })
    }

    pub fn total_events(&self) -> usize {
        self.sequences.iter().map(|s| s.len()).sum()
    }

    pub fn total_horizon(&self) -> f64 {
        self.sequences.iter().map(|s| s.horizon()).sum()
    }

    /// Longest sequence horizon; the basis support is taken over this.
    pub fn max_horizon(&self) -> f64 {
        self.sequences
            .iter()
            .map(|s| s.horizon())
            .fold(0.0, f64::max)
    }

    pub fn events_of_type(&self, type_idx: usize) -> usize {
        self.sequences
            .iter()
            .flat_map(|s| s.events())
            .filter(|e| e.type_idx == type_idx)
            .count()
    }
}

/// A partition of the event types into disjoint clusters. `peers(u)` is the
/// cluster containing `u` minus `u` itself.
#[derive(Debug, Clone)]
pub struct ClusterStructure {
    clusters: Vec<Vec<usize>>,
    peers: Vec<Vec<usize>>,
}

impl ClusterStructure {
    /// `clusters` uses 0-based type indices and must partition `0..num_types`.
    pub fn new(clusters: Vec<Vec<usize>>, num_types: usize) -> Result<Self> {
        let mut seen = vec![false; num_types];
        for cluster in &clusters {
            if cluster.is_empty() {
                return Err(HawkesError::InvalidConfig("empty cluster".into()));
            }
            for &u in cluster {
                if u >= num_types {
                    return Err(HawkesError::InvalidConfig(format!(
                        "cluster member {u} out of range (num_types {num_types})"
                    )));
                }
                if seen[u] {
                    return Err(HawkesError::InvalidConfig(format!(
                        "type {u} appears in more than one cluster"
                    )));
                }
                seen[u] = true;
            }
        }
        if seen.iter().any(|&s| !s) {
            return Err(HawkesError::InvalidConfig(
                "clusters must cover every event type".into(),
            ));
        }
        let mut peers = vec![Vec::new(); num_types];
        for cluster in &clusters {
            for &u in cluster {
                peers[u] = cluster.iter().copied().filter(|&v| v != u).collect();
            }
        }
        Ok(Self { clusters, peers })
    }

    pub fn clusters(&self) -> &[Vec<usize>] {
        &self.clusters
    }

    /// Cluster of `u` minus `u` itself (the paper's C_u).
    pub fn peers(&self, u: usize) -> &[usize] {
        &self.peers[u]
    }

    pub fn num_types(&self) -> usize {
        self.peers.len()
    }

    /// True iff `u` and `v` share a cluster and differ.
    pub fn same_cluster(&self, u: usize, v: usize) -> bool {
        u != v && self.peers[u].contains(&v)
    }
}

/// Directed Granger causality graph over event types. `adjacency[u][u2]`
/// is true iff the edge u2 -> u is present, i.e. past type-u2 events
/// influence type-u intensity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrangerGraph {
    adjacency: Vec<Vec<bool>>,
}

impl GrangerGraph {
    pub fn new(adjacency: Vec<Vec<bool>>) -> Result<Self> {
        let n = adjacency.len();
        if adjacency.iter().any(|row| row.len() != n) {
            return Err(HawkesError::DimensionMismatch(
                "adjacency matrix must be square".into(),
            ));
        }
        Ok(Self { adjacency })
    }

    pub fn num_types(&self) -> usize {
        self.adjacency.len()
    }

    /// Edge u2 -> u present?
    pub fn has_edge(&self, u: usize, u2: usize) -> bool {
        self.adjacency[u][u2]
    }

    pub fn adjacency(&self) -> &[Vec<bool>] {
        &self.adjacency
    }

    pub fn num_edges(&self) -> usize {
        self.adjacency
            .iter()
            .map(|r| r.iter().filter(|&&b| b).count())
            .sum()
    }

    pub fn num_absent(&self) -> usize {
        let n = self.num_types();
        n * n - self.num_edges()
    }
}
