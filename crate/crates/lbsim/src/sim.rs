//! Discrete-event core: simulation clock, event queue, links, seeded
//! random streams.
//!
//! Events are dispatched in `(fire_at, seq)` order, where `seq` is the
//! insertion sequence number. The tie-break makes simultaneous events
//! reproducible without floating-point epsilon tricks, and named random
//! streams keep stochastic consumers independent of each other: adding a
//! traffic source never perturbs the splitter's draw sequence.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use sha2::{Digest, Sha256};

use crate::{Error, Result};

/// Node handle; an index into the topology's node table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

/// Simulation time in seconds. Never NaN, never negative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimTime(f64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0.0);

    pub fn from_secs(secs: f64) -> SimTime {
        assert!(secs.is_finite() && secs >= 0.0, "invalid sim time {secs}");
        SimTime(secs)
    }

    pub fn secs(self) -> f64 {
        self.0
    }

    /// This time plus a non-negative duration in seconds.
    pub fn offset(self, dt_secs: f64) -> SimTime {
        assert!(dt_secs.is_finite() && dt_secs >= 0.0, "invalid offset {dt_secs}");
        SimTime(self.0 + dt_secs)
    }
}

impl Eq for SimTime {}

impl PartialOrd for SimTime {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for SimTime {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl std::ops::Sub for SimTime {
    type Output = f64;

    /// Elapsed seconds between two instants.
    fn sub(self, rhs: SimTime) -> f64 {
        self.0 - rhs.0
    }
}

/// A scheduled event carrying an engine-defined payload.
#[derive(Debug)]
pub struct Event<K> {
    pub fire_at: SimTime,
    pub seq: u64,
    pub kind: K,
}

struct Entry<K> {
    fire_at: SimTime,
    seq: u64,
    kind: K,
}

impl<K> PartialEq for Entry<K> {
    fn eq(&self, other: &Self) -> bool {
        self.fire_at == other.fire_at && self.seq == other.seq
    }
}

impl<K> Eq for Entry<K> {}

impl<K> PartialOrd for Entry<K> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<K> Ord for Entry<K> {
    // Reversed so the BinaryHeap pops the earliest (fire_at, seq) first.
    fn cmp(&self, other: &Self) -> Ordering {
        (other.fire_at, other.seq).cmp(&(self.fire_at, self.seq))
    }
}

/// Time-ordered event queue with a monotone clock.
pub struct EventQueue<K> {
    heap: BinaryHeap<Entry<K>>,
    next_seq: u64,
    clock: SimTime,
}

impl<K> Default for EventQueue<K> {
    fn default() -> Self {
        EventQueue {
            heap: BinaryHeap::new(),
            next_seq: 0,
            clock: SimTime::ZERO,
        }
    }
}

impl<K> EventQueue<K> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn clock(&self) -> SimTime {
        self.clock
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    /// Enqueue an event; returns its sequence number (the event handle).
    ///
    /// Scheduling in the past is a logic error and aborts the run.
    pub fn schedule(&mut self, fire_at: SimTime, kind: K) -> u64 {
        assert!(
            fire_at >= self.clock,
            "event scheduled in the past: {} < clock {}",
            fire_at.secs(),
            self.clock.secs()
        );
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Entry { fire_at, seq, kind });
        seq
    }

    /// Pop the next event with `fire_at <= end`, advancing the clock to it.
    pub fn pop_before(&mut self, end: SimTime) -> Option<Event<K>> {
        match self.heap.peek() {
            Some(entry) if entry.fire_at <= end => {
                let entry = self.heap.pop().unwrap();
                self.clock = entry.fire_at;
                Some(Event {
                    fire_at: entry.fire_at,
                    seq: entry.seq,
                    kind: entry.kind,
                })
            }
            _ => None,
        }
    }

    /// Advance the clock to `end` once dispatching is finished.
    pub fn advance_to(&mut self, end: SimTime) {
        assert!(end >= self.clock, "clock cannot move backwards");
        self.clock = end;
    }
}

/// A point-to-point channel with a fixed rate and propagation delay.
#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub from: NodeId,
    pub to: NodeId,
    pub capacity_bps: f64,
    pub prop_delay_s: f64,
}

impl Link {
    pub fn new(from: NodeId, to: NodeId, capacity_bps: f64, prop_delay_s: f64) -> Result<Link> {
        if !(capacity_bps.is_finite() && capacity_bps > 0.0) {
            return Err(Error::Config(format!(
                "link capacity_bps must be > 0, got {capacity_bps}"
            )));
        }
        if !(prop_delay_s.is_finite() && prop_delay_s >= 0.0) {
            return Err(Error::Config(format!(
                "link prop_delay_s must be >= 0, got {prop_delay_s}"
            )));
        }
        Ok(Link {
            from,
            to,
            capacity_bps,
            prop_delay_s,
        })
    }

    /// Arrival time at the far end for a packet departing at `depart`:
    /// transmission time plus propagation delay.
    pub fn transmit(&self, packet_bits: u64, depart: SimTime) -> Result<SimTime> {
        if packet_bits == 0 {
            return Err(Error::Config("zero-size packet".into()));
        }
        Ok(depart.offset(packet_bits as f64 / self.capacity_bps + self.prop_delay_s))
    }
}

/// Deterministic random stream, keyed by `(seed, stream_id)`.
///
/// Identical keys produce identical sequences on every platform; distinct
/// stream ids are statistically independent.
pub struct RngStream {
    rng: ChaCha12Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: &str) -> RngStream {
        let mut hasher = Sha256::new();
        hasher.update(seed.to_le_bytes());
        hasher.update(stream_id.as_bytes());
        let digest = hasher.finalize();
        let mut key = [0u8; 32];
        key.copy_from_slice(&digest);
        RngStream {
            rng: ChaCha12Rng::from_seed(key),
        }
    }

    /// Uniform draw in `[0, 1)`.
    pub fn next_uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Uniform draw in the open interval `(0, 1)`; zero is re-drawn.
    pub fn next_open_uniform(&mut self) -> f64 {
        loop {
            let u = self.rng.random::<f64>();
            if u > 0.0 {
                return u;
            }
        }
    }
}
