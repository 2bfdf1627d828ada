//! DiffServ router: per-class FIFO buffers, weighted-fair-queuing service,
//! moving-average rate and buffer estimation, the average-buffer drop rule,
//! and the per-class availability test used while grading probes.
//!
//! Each router keeps, per service class, an exponentially-weighted moving
//! average of the arrival bit rate and of the instantaneous buffer length:
//!
//! ```text
//! avg_new = (1 - e^(-tau/k)) * current + e^(-tau/k) * avg_old
//! ```
//!
//! where `tau` is the time since that average's previous update and
//! `k` (default 0.01 s) sets the memory time constant. For the rate average
//! `current` is `packet_bits / tau`; for the buffer average it is the
//! instantaneous queue length in packets.

use std::collections::VecDeque;

use crate::sim::{NodeId, SimTime};
use crate::traffic::DataPacket;

/// Floor applied to `tau` when two updates land on the same instant, since
/// the rate form divides by `tau`.
pub const TAU_FLOOR_S: f64 = 1e-9;

/// DiffServ service class, in strict priority order for downgrade search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ServiceClass {
    Ef,
    Af,
    Be,
}

impl ServiceClass {
    pub const ALL: [ServiceClass; 3] = [ServiceClass::Ef, ServiceClass::Af, ServiceClass::Be];

    pub fn index(self) -> usize {
        match self {
            ServiceClass::Ef => 0,
            ServiceClass::Af => 1,
            ServiceClass::Be => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ServiceClass::Ef => "ef",
            ServiceClass::Af => "af",
            ServiceClass::Be => "be",
        }
    }

    /// Classes checked when `self` is requested: `self` and everything below.
    pub fn downgrade_chain(self) -> impl Iterator<Item = ServiceClass> {
        Self::ALL.into_iter().skip(self.index())
    }
}

/// Two-bit wire encoding of a granted class; `11` means no class available.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassCode {
    Ef,
    Af,
    Be,
    None,
}

impl ClassCode {
    pub fn bits(self) -> u8 {
        match self {
            ClassCode::Ef => 0b00,
            ClassCode::Af => 0b01,
            ClassCode::Be => 0b10,
            ClassCode::None => 0b11,
        }
    }

    pub fn from_bits(bits: u8) -> ClassCode {
        match bits & 0b11 {
            0b00 => ClassCode::Ef,
            0b01 => ClassCode::Af,
            0b10 => ClassCode::Be,
            _ => ClassCode::None,
        }
    }

    pub fn as_class(self) -> Option<ServiceClass> {
        match self {
            ClassCode::Ef => Some(ServiceClass::Ef),
            ClassCode::Af => Some(ServiceClass::Af),
            ClassCode::Be => Some(ServiceClass::Be),
            ClassCode::None => None,
        }
    }
}

impl From<ServiceClass> for ClassCode {
    fn from(class: ServiceClass) -> ClassCode {
        match class {
            ServiceClass::Ef => ClassCode::Ef,
            ServiceClass::Af => ClassCode::Af,
            ServiceClass::Be => ClassCode::Be,
        }
    }
}

/// Fixed-size per-class table.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ClassMap<T>(pub [T; 3]);

impl<T> ClassMap<T> {
    pub fn from_fn(mut f: impl FnMut(ServiceClass) -> T) -> ClassMap<T> {
        ClassMap([
            f(ServiceClass::Ef),
            f(ServiceClass::Af),
            f(ServiceClass::Be),
        ])
    }

    pub fn iter(&self) -> impl Iterator<Item = (ServiceClass, &T)> {
        ServiceClass::ALL.iter().map(move |&c| (c, &self.0[c.index()]))
    }
}

impl<T> std::ops::Index<ServiceClass> for ClassMap<T> {
    type Output = T;
    fn index(&self, class: ServiceClass) -> &T {
        &self.0[class.index()]
    }
}

impl<T> std::ops::IndexMut<ServiceClass> for ClassMap<T> {
    fn index_mut(&mut self, class: ServiceClass) -> &mut T {
        &mut self.0[class.index()]
    }
}

/// Per-class WFQ weight and buffer depth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassConfig {
    /// Fraction of the output capacity guaranteed to this class.
    pub wfq_weight: f64,
    /// Maximum buffer length in packets.
    pub max_buffer_pkts: u32,
}

/// One moving-average step: convex combination of the current observation
/// and the previous average, weighted by `e^(-tau/k)`.
pub fn ema_step(old: f64, current: f64, tau_s: f64, k_s: f64) -> f64 {
    let w = (-tau_s / k_s).exp();
    (1.0 - w) * current + w * old
}

/// Averaged arrival rate and buffer length for one (router, class) pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmaState {
    pub avg_rate_bps: f64,
    pub avg_buffer_pkts: f64,
    pub last_rate_update: SimTime,
    pub last_buffer_update: SimTime,
    pub k_s: f64,
}

impl EmaState {
    /// Cold start: both averages at zero, timestamps at t=0.
    pub fn new(k_s: f64) -> EmaState {
        EmaState {
            avg_rate_bps: 0.0,
            avg_buffer_pkts: 0.0,
            last_rate_update: SimTime::ZERO,
            last_buffer_update: SimTime::ZERO,
            k_s,
        }
    }

    /// Fold the arrival of a `pkt_bits`-sized packet at `now` into the
    /// average rate.
    pub fn update_rate(&mut self, pkt_bits: u64, now: SimTime) {
        let tau = (now - self.last_rate_update).max(TAU_FLOOR_S);
        self.avg_rate_bps = ema_step(self.avg_rate_bps, pkt_bits as f64 / tau, tau, self.k_s);
        self.last_rate_update = now;
    }

    /// Fold the instantaneous buffer length observed at `now` into the
    /// average buffer length.
    pub fn update_buffer(&mut self, inst_buffer_pkts: u32, now: SimTime) {
        let tau = (now - self.last_buffer_update).max(TAU_FLOOR_S);
        self.avg_buffer_pkts = ema_step(self.avg_buffer_pkts, inst_buffer_pkts as f64, tau, self.k_s);
        self.last_buffer_update = now;
    }
}

/// Outcome of offering a data packet to a router.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnqueueOutcome {
    Accepted,
    Dropped,
}

#[derive(Debug)]
struct Queued {
    pkt: DataPacket,
    finish_tag: f64,
}

#[derive(Debug)]
struct ClassState {
    config: ClassConfig,
    ema: EmaState,
    queue: VecDeque<Queued>,
}

#[derive(Debug)]
struct InService {
    pkt: DataPacket,
    completes_at: SimTime,
}

/// WFQ virtual-time bookkeeping: system virtual time advances at
/// `service_rate / sum(weights of backlogged classes)`, and each packet is
/// tagged at arrival with `max(vtime, class last finish) + bits / weight`.
#[derive(Debug)]
struct Wfq {
    vtime: f64,
    updated_at: SimTime,
    last_finish: ClassMap<f64>,
}

/// A DiffServ router with one WFQ-scheduled output.
#[derive(Debug)]
pub struct Router {
    pub id: NodeId,
    classes: ClassMap<ClassState>,
    /// Output capacity available to WFQ; the degraded scenarios reduce it
    /// below the outgoing link capacity.
    pub service_rate_bps: f64,
    wfq: Wfq,
    in_service: Option<InService>,
    drops: ClassMap<u64>,
}

impl Router {
    pub fn new(id: NodeId, configs: ClassMap<ClassConfig>, service_rate_bps: f64, k_s: f64) -> Router {
        assert!(service_rate_bps > 0.0);
        Router {
            id,
            classes: ClassMap::from_fn(|c| ClassState {
                config: configs[c],
                ema: EmaState::new(k_s),
                queue: VecDeque::new(),
            }),
            service_rate_bps,
            wfq: Wfq {
                vtime: 0.0,
                updated_at: SimTime::ZERO,
                last_finish: ClassMap([0.0; 3]),
            },
            in_service: None,
        drops: ClassMap([0; 3]),
        }
    }

    pub fn ema(&self, class: ServiceClass) -> &EmaState {
        &self.classes[class].ema
    }

    pub fn ema_mut(&mut self, class: ServiceClass) -> &mut EmaState {
        &mut self.classes[class].ema
    }

    pub fn class_config(&self, class: ServiceClass) -> ClassConfig {
        self.classes[class].config
    }

    pub fn queue_len(&self, class: ServiceClass) -> usize {
        self.classes[class].queue.len()
    }

    pub fn drops(&self, class: ServiceClass) -> u64 {
        self.drops[class]
    }

    pub fn is_busy(&self) -> bool {
        self.in_service.is_some()
    }

    pub fn has_backlog(&self) -> bool {
        ServiceClass::ALL.iter().any(|&c| !self.classes[c].queue.is_empty())
    }

    /// Packets currently held by this router (queued plus in service).
    pub fn held_packets(&self) -> u64 {
        let queued: usize = ServiceClass::ALL.iter().map(|&c| self.classes[c].queue.len()).sum();
        queued as u64 + self.in_service.is_some() as u64
    }

    fn backlogged_weight(&self) -> f64 {
        let mut sum = 0.0;
        for &c in &ServiceClass::ALL {
            let queued = !self.classes[c].queue.is_empty();
            let serving = self
                .in_service
                .as_ref()
                .is_some_and(|s| s.pkt.class == c);
            if queued || serving {
                sum += self.classes[c].config.wfq_weight;
            }
        }
        sum
    }

    fn advance_vtime(&mut self, now: SimTime) {
        let bw = self.backlogged_weight();
        if bw > 0.0 {
            self.wfq.vtime += (now - self.wfq.updated_at) * self.service_rate_bps / bw;
        }
        self.wfq.updated_at = now;
    }

    /// Offer a data packet to its granted class's buffer.
    ///
    /// The packet is destroyed (and the class's averages left untouched)
    /// when the average buffer length already exceeds the configured depth,
    /// or when the queue is physically full. Otherwise it is appended and
    /// both averages are updated.
    pub fn enqueue_data(&mut self, pkt: DataPacket, now: SimTime) -> EnqueueOutcome {
        self.advance_vtime(now);
        let class = pkt.class;
        let state = &mut self.classes[class];
        let max = state.config.max_buffer_pkts;
        if state.ema.avg_buffer_pkts > max as f64 || state.queue.len() >= max as usize {
            self.drops[class] += 1;
            return EnqueueOutcome::Dropped;
        }
        let size_bits = pkt.size_bits;
        let start = self.wfq.vtime.max(self.wfq.last_finish[class]);
        let finish_tag = start + size_bits as f64 / state.config.wfq_weight;
        self.wfq.last_finish[class] = finish_tag;
        state.queue.push_back(Queued { pkt, finish_tag });
        let inst_len = state.queue.len() as u32;
        state.ema.update_buffer(inst_len, now);
        state.ema.update_rate(size_bits, now);
        EnqueueOutcome::Accepted
    }

    /// Start serving the backlogged head-of-line packet with the smallest
    /// virtual finish tag; ties go to the higher-priority class. Returns the
    /// chosen packet and its service completion time. `None` when every
    /// queue is empty or the output is already busy.
    pub fn wfq_dequeue(&mut self, now: SimTime) -> Option<(&DataPacket, SimTime)> {
        if self.in_service.is_some() {
            return None;
        }
        self.advance_vtime(now);
        let mut best: Option<(ServiceClass, f64)> = None;
        for &c in &ServiceClass::ALL {
            if let Some(head) = self.classes[c].queue.front() {
                if best.is_none_or(|(_, tag)| head.finish_tag < tag) {
                    best = Some((c, head.finish_tag));
                }
            }
        }
        let (class, _) = best?;
        let queued = self.classes[class].queue.pop_front().unwrap();
        let completes_at = now.offset(queued.pkt.size_bits as f64 / self.service_rate_bps);
        self.in_service = Some(InService {
            pkt: queued.pkt,
            completes_at,
        });
        let svc = self.in_service.as_ref().unwrap();
        Some((&svc.pkt, svc.completes_at))
    }

    /// Finish the in-service packet and release the output.
    pub fn complete_service(&mut self, now: SimTime) -> DataPacket {
        self.advance_vtime(now);
        let svc = self.in_service.take().expect("no packet in service");
        debug_assert_eq!(svc.completes_at, now);
        svc.pkt
    }

    /// Admission test: the class's averaged arrival rate must be strictly
    /// below its WFQ allocation of the outgoing link.
    pub fn class_available(&self, class: ServiceClass, link_capacity_bps: f64) -> bool {
        self.classes[class].ema.avg_rate_bps
            < self.classes[class].config.wfq_weight * link_capacity_bps
    }

    /// First available class in the downgrade chain from `requested`,
    /// or `None` (code 11) when the chain is exhausted.
    pub fn grant_class(&self, requested: ServiceClass, link_capacity_bps: f64) -> ClassCode {
        for class in requested.downgrade_chain() {
            if self.class_available(class, link_capacity_bps) {
                return class.into();
            }
        }
        ClassCode::None
    }

    /// Remaining buffer space for a class: configured depth minus the
    /// averaged buffer length, clamped at zero.
    pub fn remaining_buffer(&self, class: ServiceClass) -> f64 {
        let state = &self.classes[class];
        (state.config.max_buffer_pkts as f64 - state.ema.avg_buffer_pkts).max(0.0)
    }

    /// Remaining buffer space for all three classes.
    pub fn remaining_buffer_vector(&self) -> [f64; 3] {
        [
            self.remaining_buffer(ServiceClass::Ef),
            self.remaining_buffer(ServiceClass::Af),
            self.remaining_buffer(ServiceClass::Be),
        ]
    }

    /// Fold a probe arrival into the averages (enabled by the
    /// `probes_update_ema` scenario flag). The probe observes the queue of
    /// the class it is currently granted, falling back to its request.
    pub fn observe_probe(&mut self, probe_bits: u64, class: ServiceClass, now: SimTime) {
        let inst_len = self.classes[class].queue.len() as u32;
        let state = &mut self.classes[class];
        state.ema.update_buffer(inst_len, now);
        state.ema.update_rate(probe_bits, now);
    }
}
