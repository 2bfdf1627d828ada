//! Packet sources: constant-bit-rate main traffic and a heavy-tailed
//! ON/OFF source (Pareto period lengths, exponential interarrivals while ON).

use crate::router::ServiceClass;
use crate::sim::{NodeId, RngStream, SimTime};

/// A data packet traveling source to destination.
#[derive(Debug, Clone, PartialEq)]
pub struct DataPacket {
    pub id: u64,
    /// Requested class at creation; rewritten to the granted class by the
    /// ingress router's admission step.
    pub class: ServiceClass,
    pub size_bits: u64,
    pub created_at: SimTime,
    pub src: NodeId,
    pub dst: NodeId,
    /// Stamped by the splitter at the ingress router.
    pub path_id: Option<String>,
}

/// Emission model for one source.
#[derive(Debug, Clone, PartialEq)]
pub enum SourceModel {
    Cbr {
        rate_bps: f64,
    },
    ParetoOnOff {
        /// Pareto (scale, shape) for ON-period length in seconds.
        on_scale: f64,
        on_shape: f64,
        /// Pareto (scale, shape) for OFF-period length in seconds.
        off_scale: f64,
        off_shape: f64,
        /// Mean of the exponential interarrival gap while ON, seconds.
        interarrival_mean: f64,
    },
}

/// One traffic source feeding the source node.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceSpec {
    pub model: SourceModel,
    pub start_time: f64,
    pub packet_bytes: u32,
    /// Requested-class mix; fractions sum to 1. Kept in class order so the
    /// cumulative draw is deterministic.
    pub class_mix: Vec<(ServiceClass, f64)>,
}

impl SourceSpec {
    pub fn packet_bits(&self) -> u64 {
        self.packet_bytes as u64 * 8
    }
}

/// Next constant-bit-rate departure after `prev`: the packet's serialization
/// interval at the source rate.
pub fn cbr_next_departure(spec: &SourceSpec, prev: SimTime) -> SimTime {
    match spec.model {
        SourceModel::Cbr { rate_bps } => prev.offset(spec.packet_bits() as f64 / rate_bps),
        _ => panic!("cbr_next_departure on a non-CBR source"),
    }
}

/// Pareto inverse CDF with location = scale: `scale * u^(-1/shape)`.
/// `u` must lie strictly inside (0, 1); the caller re-draws endpoints.
pub fn pareto_sample(scale: f64, shape: f64, u: f64) -> f64 {
    debug_assert!(u > 0.0 && u < 1.0);
    debug_assert!(scale > 0.0 && shape > 0.0);
    scale * u.powf(-1.0 / shape)
}

/// Exponential inverse CDF: mean `mean`, `u` strictly inside (0, 1).
pub fn exp_sample(mean: f64, u: f64) -> f64 {
    debug_assert!(u > 0.0 && u < 1.0);
    -mean * u.ln()
}

/// Draw a requested class from the mix by cumulative interval.
pub fn draw_class(mix: &[(ServiceClass, f64)], u: f64) -> ServiceClass {
    let mut acc = 0.0;
    for &(class, frac) in mix {
        acc += frac;
        if u < acc {
            return class;
        }
    }
    mix.last().expect("empty class mix").0
}

/// Departure-time stream for one source, up to a horizon.
///
/// CBR emits the first packet exactly at the start time and then at fixed
/// intervals. The ON/OFF source starts its first ON period at the start
/// time; while ON, gaps are exponential; a gap that crosses the ON-period
/// end is discarded and the process restarts at the next ON start.
pub enum SourceSchedule {
    Cbr {
        next: Option<SimTime>,
        interval_s: f64,
        horizon: SimTime,
    },
    OnOff(Box<OnOffSchedule>),
}

impl SourceSchedule {
    pub fn new(spec: &SourceSpec, rng: RngStream, horizon: SimTime) -> SourceSchedule {
        match spec.model {
            SourceModel::Cbr { rate_bps } => {
                let start = SimTime::from_secs(spec.start_time);
                SourceSchedule::Cbr {
                    next: (start <= horizon).then_some(start),
                    interval_s: spec.packet_bits() as f64 / rate_bps,
                    horizon,
                }
            }
            SourceModel::ParetoOnOff {
                on_scale,
                on_shape,
                off_scale,
                off_shape,
                interarrival_mean,
            } => SourceSchedule::OnOff(Box::new(OnOffSchedule {
                on_scale,
                on_shape,
                off_scale,
                off_shape,
                mean_gap: interarrival_mean,
                rng,
                started: false,
                start: spec.start_time,
                on_until: 0.0,
                prev: 0.0,
                horizon: horizon.secs(),
            })),
        }
    }
}

impl Iterator for SourceSchedule {
    type Item = SimTime;

    fn next(&mut self) -> Option<SimTime> {
        match self {
            SourceSchedule::Cbr {
                next,
                interval_s,
                horizon,
            } => {
                let t = (*next)?;
                let following = t.offset(*interval_s);
                *next = (following <= *horizon).then_some(following);
                Some(t)
            }
            SourceSchedule::OnOff(schedule) => schedule.next(),
        }
    }
}

/// ON/OFF emission process with Pareto period lengths.
pub struct OnOffSchedule {
    on_scale: f64,
    on_shape: f64,
    off_scale: f64,
    off_shape: f64,
    mean_gap: f64,
    rng: RngStream,
    started: bool,
    start: f64,
    /// End of the current ON period.
    on_until: f64,
    /// Reference point for the next exponential gap: the previous emission,
    /// or the current ON period's start.
    prev: f64,
    horizon: f64,
}

impl OnOffSchedule {
    fn pareto_on(&mut self) -> f64 {
        let u = self.rng.next_open_uniform();
        pareto_sample(self.on_scale, self.on_shape, u)
    }

    fn pareto_off(&mut self) -> f64 {
        let u = self.rng.next_open_uniform();
        // A zero scale degenerates to zero-length OFF periods, used by tests
        // to recover a pure Poisson stream.
        if self.off_scale == 0.0 {
            return 0.0;
        }
        pareto_sample(self.off_scale, self.off_shape, u)
    }
}

impl Iterator for OnOffSchedule {
    type Item = SimTime;

    fn next(&mut self) -> Option<SimTime> {
        if self.start > self.horizon {
            return None;
        }
        if !self.started {
            self.started = true;
            self.on_until = self.start + self.pareto_on();
            self.prev = self.start;
        }
        loop {
            let u = self.rng.next_open_uniform();
            let candidate = self.prev + exp_sample(self.mean_gap, u);
            if candidate <= self.on_until {
                if candidate > self.horizon {
                    return None;
                }
                self.prev = candidate;
                return Some(SimTime::from_secs(candidate));
            }
            // Gap crossed the ON boundary: discard it, wait out the OFF
            // period, restart at the next ON start.
            let off = self.pareto_off();
            let on = self.pareto_on();
            let on_start = self.on_until + off;
            if on_start > self.horizon {
                return None;
            }
            self.on_until = on_start + on;
            self.prev = on_start;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cbr_spec(rate_bps: f64, packet_bytes: u32) -> SourceSpec {
        SourceSpec {
            model: SourceModel::Cbr { rate_bps },
            start_time: 5.0,
            packet_bytes,
            class_mix: vec![(ServiceClass::Ef, 1.0)],
        }
    }

    fn paper_onoff(off_scale: f64) -> SourceSpec {
        SourceSpec {
            model: SourceModel::ParetoOnOff {
                on_scale: 40.0,
                on_shape: 1.4,
                off_scale,
                off_shape: 1.4,
                interarrival_mean: 0.001,
            },
            start_time: 5.0,
            packet_bytes: 500,
            class_mix: vec![(ServiceClass::Ef, 1.0)],
        }
    }

    #[test]
    fn cbr_interval_is_exact() {
        let spec = cbr_spec(4.0e6, 500);
        let next = cbr_next_departure(&spec, SimTime::from_secs(5.0));
        assert_eq!(next.secs(), 5.0 + 4000.0 / 4.0e6);
        let spec = cbr_spec(4.0e6, 1000);
        let next = cbr_next_departure(&spec, SimTime::ZERO);
        assert_eq!(next.secs(), 8000.0 / 4.0e6);
    }

    #[test]
    fn cbr_first_departure_at_start_time() {
        let spec = cbr_spec(4.0e6, 500);
        let rng = RngStream::new(1, "t");
        let mut sched = SourceSchedule::new(&spec, rng, SimTime::from_secs(60.0));
        assert_eq!(sched.next().unwrap().secs(), 5.0);
    }

    #[test]
    fn cbr_interdeparture_times_constant() {
        let spec = cbr_spec(4.0e6, 500);
        let rng = RngStream::new(1, "t");
        let sched = SourceSchedule::new(&spec, rng, SimTime::from_secs(6.0));
        let times: Vec<f64> = sched.map(|t| t.secs()).collect();
        assert!(times.len() > 900);
        let d0 = times[1] - times[0];
        for w in times.windows(2) {
            assert_eq!(w[1] - w[0], d0);
        }
    }

    #[test]
    fn pareto_lower_bound_is_scale() {
        // u -> 1 gives the distribution's minimum, the scale itself.
        let s = pareto_sample(40.0, 1.4, 1.0 - 1e-15);
        assert!((s - 40.0).abs() < 1e-10);
        assert!(pareto_sample(40.0, 1.4, 0.5) > 40.0);
    }

    #[test]
    fn pareto_empirical_mean_paper_parameters() {
        // Analytic mean: scale * shape / (shape - 1) = 140 s.
        let mut rng = RngStream::new(12, "pareto-mean");
        let n = 1_000_000;
        let mut sum = 0.0;
        for _ in 0..n {
            sum += pareto_sample(40.0, 1.4, rng.next_open_uniform());
        }
        let mean = sum / n as f64;
        assert!((mean - 140.0).abs() / 140.0 < 0.05, "mean {mean}");
    }

    #[test]
    fn pareto_empirical_mean_unit_scale() {
        // scale 1, shape 1.4: mean 3.5 s.
        let mut rng = RngStream::new(12, "pareto-mean-unit");
        let n = 1_000_000;
        let mut sum = 0.0;
        for _ in 0..n {
            sum += pareto_sample(1.0, 1.4, rng.next_open_uniform());
        }
        let mean = sum / n as f64;
        assert!((mean - 3.5).abs() / 3.5 < 0.05, "mean {mean}");
    }

    #[test]
    fn onoff_zero_off_is_poisson_rate() {
        // OFF forced to zero length: a pure Poisson stream at
        // packet_bits / interarrival_mean = 4 Mbps.
        let spec = paper_onoff(0.0);
        let rng = RngStream::new(3, "onoff-poisson");
        let horizon = 5.0 + 60.0;
        let sched = SourceSchedule::new(&spec, rng, SimTime::from_secs(horizon));
        let count = sched.count() as f64;
        let rate_bps = count * 4000.0 / 60.0;
        assert!((rate_bps - 4.0e6).abs() / 4.0e6 < 0.02, "rate {rate_bps}");
    }

    #[test]
    fn onoff_empty_before_start() {
        let spec = paper_onoff(1.0);
        let rng = RngStream::new(3, "onoff-early");
        let mut sched = SourceSchedule::new(&spec, rng, SimTime::from_secs(4.0));
        assert!(sched.next().is_none());
    }

    #[test]
    fn onoff_long_run_rate_matches_on_fraction() {
        // ON fraction 140 / (140 + 3.5); long-run rate about 3.902 Mbps.
        let spec = paper_onoff(1.0);
        let rng = RngStream::new(8, "onoff-longrun");
        let horizon = 5.0 + 10_000.0;
        let sched = SourceSchedule::new(&spec, rng, SimTime::from_secs(horizon));
        let count = sched.count() as f64;
        let rate_bps = count * 4000.0 / 10_000.0;
        let expected = 4.0e6 * 140.0 / 143.5;
        assert!(
            (rate_bps - expected).abs() / expected < 0.10,
            "rate {rate_bps}, expected {expected}"
        );
    }

    #[test]
    fn onoff_silent_during_off_periods() {
        // Reconstruct the ON windows from an identically-seeded RNG and
        // check that every emission falls inside one.
        let spec = paper_onoff(1.0);
        let horizon = 5.0 + 2_000.0;
        let emissions: Vec<f64> = SourceSchedule::new(
            &spec,
            RngStream::new(21, "onoff-windows"),
            SimTime::from_secs(horizon),
        )
        .map(|t| t.secs())
        .collect();
        assert!(!emissions.is_empty());
        // Replay the same draw sequence, tracking windows.
        let mut rng = RngStream::new(21, "onoff-windows");
        let mut windows = Vec::new();
        let mut on_start = 5.0;
        let mut on_until = on_start + pareto_sample(40.0, 1.4, rng.next_open_uniform());
        let mut prev = on_start;
        loop {
            let cand = prev + exp_sample(0.001, rng.next_open_uniform());
            if cand <= on_until {
                prev = cand;
                if cand > horizon {
                    break;
                }
            } else {
                windows.push((on_start, on_until));
                let off = pareto_sample(1.0, 1.4, rng.next_open_uniform());
                let on = pareto_sample(40.0, 1.4, rng.next_open_uniform());
                on_start = on_until + off;
                if on_start > horizon {
                    break;
                }
                on_until = on_start + on;
                prev = on_start;
            }
        }
        windows.push((on_start, on_until));
        for &t in &emissions {
            assert!(
                windows.iter().any(|&(a, b)| t >= a && t <= b),
                "emission {t} outside every ON window"
            );
        }
    }

    #[test]
    fn draw_class_respects_cumulative_intervals() {
        let mix = vec![
            (ServiceClass::Ef, 0.25),
            (ServiceClass::Af, 0.25),
            (ServiceClass::Be, 0.5),
        ];
        assert_eq!(draw_class(&mix, 0.0), ServiceClass::Ef);
        assert_eq!(draw_class(&mix, 0.249), ServiceClass::Ef);
        assert_eq!(draw_class(&mix, 0.25), ServiceClass::Af);
        assert_eq!(draw_class(&mix, 0.6), ServiceClass::Be);
        assert_eq!(draw_class(&mix, 0.999_999), ServiceClass::Be);
    }
}
