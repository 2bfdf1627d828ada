//! Measurement: per-window throughput (packets per second received at the
//! destination) and end-to-end delay (send-to-receive seconds), with
//! windowed rows and cumulative summary percentiles.

use crate::sim::SimTime;
use crate::traffic::DataPacket;

pub const CSV_HEADER: &str = "t,window_s,throughput_pps,mean_delay_s,p95_delay_s,drops_ef,drops_af,drops_be,rate_path1,rate_path2,generated,delivered,in_flight";

/// One closed measurement window.
#[derive(Debug, Clone, PartialEq)]
pub struct StatsSample {
    /// Window end time, seconds.
    pub t: f64,
    pub window_s: f64,
    pub throughput_pps: f64,
    /// Mean delay over this window's deliveries; empty when none.
    pub mean_delay_s: Option<f64>,
    /// 95th-percentile delay over this window's deliveries.
    pub p95_delay_s: Option<f64>,
    /// Cumulative drops per class: [EF, AF, BE].
    pub drops: [u64; 3],
    /// Current split rates of the first two candidate paths.
    pub split_rates: [f64; 2],
    pub generated: u64,
    pub delivered: u64,
    pub in_flight: u64,
}

impl StatsSample {
    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.9}")).unwrap_or_default();
        format!(
            "{:.3},{:.3},{:.4},{},{},{},{},{},{:.6},{:.6},{},{},{}",
            self.t,
            self.window_s,
            self.throughput_pps,
            opt(self.mean_delay_s),
            opt(self.p95_delay_s),
            self.drops[0],
            self.drops[1],
            self.drops[2],
            self.split_rates[0],
            self.split_rates[1],
            self.generated,
            self.delivered,
            self.in_flight,
        )
    }
}

/// Delay/throughput accumulators owned by the event loop.
#[derive(Debug, Default)]
pub struct Metrics {
    pub generated: u64,
    pub delivered: u64,
    window_deliveries: u64,
    window_delays: Vec<f64>,
    all_delays: Vec<f64>,
    samples: Vec<StatsSample>,
}

impl Metrics {
    pub fn new() -> Metrics {
        Metrics::default()
    }

    pub fn record_generated(&mut self) {
        self.generated += 1;
    }

    /// Record a delivery at `now`. A negative delay is a logic error.
    pub fn record_delivery(&mut self, pkt: &DataPacket, now: SimTime) {
        let delay = now - pkt.created_at;
        assert!(delay >= 0.0, "negative delay for packet {}", pkt.id);
        self.delivered += 1;
        self.window_deliveries += 1;
        self.window_delays.push(delay);
        self.all_delays.push(delay);
    }

    /// Close the current window and emit its sample.
    pub fn sample_window(
        &mut self,
        t: SimTime,
        window_s: f64,
        drops: [u64; 3],
        split_rates: [f64; 2],
        in_flight: u64,
    ) -> &StatsSample {
        let n = self.window_deliveries;
        let mean = (n > 0).then(|| self.window_delays.iter().sum::<f64>() / n as f64);
        let p95 = percentile(&mut self.window_delays.clone(), 0.95);
        let sample = StatsSample {
            t: t.secs(),
            window_s,
            throughput_pps: n as f64 / window_s,
            mean_delay_s: mean,
            p95_delay_s: p95,
            drops,
            split_rates,
            generated: self.generated,
            delivered: self.delivered,
            in_flight,
        };
        self.samples.push(sample);
        self.window_deliveries = 0;
        self.window_delays.clear();
        self.samples.last().unwrap()
    }

    pub fn samples(&self) -> &[StatsSample] {
        &self.samples
    }

    pub fn csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for s in &self.samples {
            out.push_str(&s.csv_row());
            out.push('\n');
        }
        out
    }

    /// Cumulative delay mean over the whole run.
    pub fn mean_delay(&self) -> Option<f64> {
        (!self.all_delays.is_empty())
            .then(|| self.all_delays.iter().sum::<f64>() / self.all_delays.len() as f64)
    }

    /// Cumulative delay percentile (nearest-rank) over the whole run.
    pub fn delay_percentile(&self, q: f64) -> Option<f64> {
        percentile(&mut self.all_delays.clone(), q)
    }
}

fn percentile(values: &mut [f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let rank = ((q * values.len() as f64).ceil() as usize).clamp(1, values.len());
    Some(values[rank - 1])
}
