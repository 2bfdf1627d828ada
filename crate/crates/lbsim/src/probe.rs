//! Probing phase: per-path probe packets, hop-by-hop class downgrade and
//! bottleneck folding, destination-side scoring, two-path selection, and
//! acknowledgment bookkeeping.
//!
//! Reference wire layout (record types are kept in memory; nothing is
//! serialized onto a real wire):
//!
//! ```text
//! probe:  path id (8 bit) | seq (32 bit) | requested (2 bit)
//!         | granted (2 bit) | B_EF, B_AF, B_BE (16 bit each, packets)
//!         | bottleneck router (8 bit)
//! ack:    path id (8 bit) | probe seq (32 bit) | granted (2 bit)
//!         | sum (16 bit, packets) | acks in round (8 bit)
//! ```

use std::collections::{BTreeMap, BTreeSet};

use crate::router::{ClassCode, Router, ServiceClass};
use crate::sim::{NodeId, SimTime};
use crate::{Error, Result};

/// A probe traveling one candidate path.
#[derive(Debug, Clone)]
pub struct ProbePacket {
    pub path_id: String,
    pub seq: u64,
    pub requested: ServiceClass,
    /// Current grant; only ever downgrades along the path.
    pub granted: ClassCode,
    /// Most-congested router seen so far and its remaining buffer vector.
    pub bottleneck: Option<Bottleneck>,
    pub sent_at: SimTime,
    pub size_bits: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bottleneck {
    /// Remaining buffer space per class, packets: [EF, AF, BE].
    pub remaining: [f64; 3],
    pub router: NodeId,
}

impl Bottleneck {
    pub fn total(&self) -> f64 {
        self.remaining.iter().sum()
    }
}

impl ProbePacket {
    pub fn new(
        path_id: String,
        seq: u64,
        requested: ServiceClass,
        sent_at: SimTime,
        size_bits: u64,
    ) -> ProbePacket {
        ProbePacket {
            path_id,
            seq,
            requested,
            granted: requested.into(),
            bottleneck: None,
            sent_at,
            size_bits,
        }
    }
}

/// Acknowledgment returned to the splitting router for one selected path.
#[derive(Debug, Clone)]
pub struct AckPacket {
    pub path_id: String,
    pub probe_seq: u64,
    /// The path's score: summed remaining buffer space at its bottleneck.
    pub sum: f64,
    pub granted: ClassCode,
    /// How many acknowledgments this round produced; lets the splitter
    /// apply the rate update exactly once, after the last one.
    pub acks_in_round: u8,
}

/// Per-path bookkeeping exported in stats and reports.
#[derive(Debug, Clone)]
pub struct PathInfo {
    pub path_id: String,
    pub hops: Vec<NodeId>,
    pub last_sum: f64,
    pub selected: bool,
    pub split_rate: f64,
}

/// Fold one router's congestion state into a traversing probe: keep the
/// remaining-buffer vector of the most crowded router seen so far (smallest
/// three-class total), and downgrade the carried grant if this router cannot
/// honor it.
pub fn fold_bottleneck(probe: &mut ProbePacket, router: &Router, out_link_capacity_bps: f64) {
    let local = Bottleneck {
        remaining: router.remaining_buffer_vector(),
        router: router.id,
    };
    let replace = match &probe.bottleneck {
        None => true,
        Some(carried) => local.total() < carried.total(),
    };
    if replace {
        probe.bottleneck = Some(local);
    }
    probe.granted = match probe.granted.as_class() {
        None => ClassCode::None,
        Some(class) => router.grant_class(class, out_link_capacity_bps),
    };
}

/// Path score at the destination: the carried bottleneck vector's total.
pub fn score_path(probe: &ProbePacket) -> f64 {
    probe
        .bottleneck
        .as_ref()
        .expect("probe scored before traversing any router")
        .total()
}

/// The `n_select` highest-scoring paths, ties broken by smaller path id.
/// All paths when fewer exist; an empty score map is an error (callers keep
/// the previous selection).
pub fn select_paths(scores: &BTreeMap<String, f64>, n_select: usize) -> Result<Vec<String>> {
    if scores.is_empty() {
        return Err(Error::EmptyScores);
    }
    let mut ranked: Vec<(&String, f64)> = scores.iter().map(|(id, &s)| (id, s)).collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    Ok(ranked
        .into_iter()
        .take(n_select)
        .map(|(id, _)| id.clone())
        .collect())
}

/// What a probe reported when it reached the destination.
#[derive(Debug, Clone, Copy)]
pub struct ProbeReport {
    pub sum: f64,
    pub granted: ClassCode,
}

/// Destination-side state for one probing round: which paths were probed,
/// which probes came back, and whether the round has been closed (all probes
/// arrived, or the straggler deadline passed).
#[derive(Debug)]
pub struct RoundTracker {
    pub round: u64,
    expected: BTreeSet<String>,
    received: BTreeMap<String, ProbeReport>,
    closed: bool,
}

/// Result of closing a round: scores for every expected path (missing
/// probes score zero) and the reports that actually arrived.
#[derive(Debug)]
pub struct RoundOutcome {
    pub round: u64,
    pub scores: BTreeMap<String, f64>,
    pub received: BTreeMap<String, ProbeReport>,
}

impl RoundTracker {
    pub fn new(round: u64, expected: impl IntoIterator<Item = String>) -> RoundTracker {
        RoundTracker {
            round,
            expected: expected.into_iter().collect(),
            received: BTreeMap::new(),
            closed: false,
        }
    }

    /// Record a returned probe; true when every expected probe has arrived.
    pub fn record(&mut self, path_id: &str, report: ProbeReport) -> bool {
        if self.closed || !self.expected.contains(path_id) {
            return false;
        }
        self.received.insert(path_id.to_string(), report);
        self.received.len() == self.expected.len()
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    /// Close the round. `None` when nothing came back: the previous
    /// selection and rates stay in force.
    pub fn close(&mut self) -> Option<RoundOutcome> {
        if self.closed {
            return None;
        }
        self.closed = true;
        if self.received.is_empty() {
            return None;
        }
        let scores = self
            .expected
            .iter()
            .map(|id| {
                let sum = self.received.get(id).map_or(0.0, |r| r.sum);
                (id.clone(), sum)
            })
            .collect();
        Some(RoundOutcome {
            round: self.round,
            scores,
            received: std::mem::take(&mut self.received),
        })
    }
}
