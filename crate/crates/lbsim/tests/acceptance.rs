//! Acceptance suite: one test per release criterion, each printing a
//! PASS line when it holds. Tolerances are pinned here, in code.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

// Frozen oracle constants carry their full 20-digit provenance.
#![allow(clippy::excessive_precision)]

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use lbsim::config::{ScenarioConfig, SourceConfig};
use lbsim::engine::Simulation;
use lbsim::probe::{fold_bottleneck, score_path, ProbePacket};
use lbsim::router::{ema_step, ClassConfig, ClassMap, Router, ServiceClass};
use lbsim::runner::{compare_scenarios, run_scenario};
use lbsim::sim::{NodeId, RngStream, SimTime};
use lbsim::split::{compute_rates, pick_path};
use lbsim::traffic::DataPacket;

fn scenario_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn load(name: &str) -> ScenarioConfig {
    ScenarioConfig::from_path(&scenario_dir().join(name)).expect("scenario file parses")
}

fn paper_router(id: u32) -> Router {
    let configs = ClassMap([
        ClassConfig { wfq_weight: 0.22, max_buffer_pkts: 24 },
        ClassConfig { wfq_weight: 0.33, max_buffer_pkts: 53 },
        ClassConfig { wfq_weight: 0.44, max_buffer_pkts: 374 },
    ]);
    Router::new(NodeId(id), configs, 4.5e6, 0.01)
}

fn data_pkt(id: u64, class: ServiceClass) -> DataPacket {
    DataPacket {
        id,
        class,
        size_bits: 4000,
        created_at: SimTime::ZERO,
        src: NodeId(0),
        dst: NodeId(99),
        path_id: None,
    }
}

/// Criterion 1: with full capacity and 4 Mbps CBR both balancing modes are
/// lossless and deliver within 1% of 1000 packets/s, within 2% of each
/// other, across 5 seeds; every run finishes in under 30 s of wall time.
#[test]
fn acceptance_1_parity_under_no_congestion() {
    let single = load("baseline_single.toml");
    let two = load("baseline_two_path.toml");
    assert_eq!(single.duration_s, 60.0);
    for seed in 1..=5u64 {
        let started = Instant::now();
        let a = run_scenario(&single, Some(seed)).unwrap().summary;
        let runtime_a = started.elapsed();
        let started = Instant::now();
        let b = run_scenario(&two, Some(seed)).unwrap().summary;
        let runtime_b = started.elapsed();
        assert!(runtime_a.as_secs_f64() <= 30.0, "single run took {runtime_a:?}");
        assert!(runtime_b.as_secs_f64() <= 30.0, "two-path run took {runtime_b:?}");
        let thr_a = a.mean_throughput_pps.unwrap();
        let thr_b = b.mean_throughput_pps.unwrap();
        assert!(
            (thr_a - 1000.0).abs() <= 10.0,
            "seed {seed}: single throughput {thr_a}"
        );
        assert!(
            (thr_b - 1000.0).abs() <= 10.0,
            "seed {seed}: two-path throughput {thr_b}"
        );
        assert!(
            (thr_a - thr_b).abs() <= 0.02 * 1000.0,
            "seed {seed}: throughput gap {thr_a} vs {thr_b}"
        );
        assert_eq!(a.total_drops(), 0, "seed {seed}: single dropped packets");
        assert_eq!(b.total_drops(), 0, "seed {seed}: two-path dropped packets");
    }
    println!("acceptance 1 (parity under no congestion): PASS");
}

/// Criterion 2: with router1 degraded to 3.5 Mbps under 4 Mbps CBR,
/// two-path balancing beats single-path on both throughput and delay in at
/// least 9 of 10 seeds.
#[test]
fn acceptance_2_balancing_benefit_under_degradation() {
    let single = load("degraded_single.toml");
    let two = load("degraded_two_path.toml");
    assert_eq!(single.duration_s, 120.0);
    let seeds: Vec<u64> = (1..=10).collect();
    let report = compare_scenarios(&single, &two, &seeds).unwrap();
    let wins = report
        .pairs
        .iter()
        .filter(|p| p.b_higher_throughput() && p.b_lower_delay())
        .count();
    assert!(
        wins >= 9,
        "two-path won both metrics in only {wins}/10 seeds \
         (throughput fraction {}, delay fraction {})",
        report.frac_b_higher_throughput,
        report.frac_b_lower_delay
    );
    println!("acceptance 2 (balancing benefit, degraded router1): PASS ({wins}/10 seeds)");
}

/// Criterion 3: the same ordering holds with the heavy-tailed ON/OFF source.
#[test]
fn acceptance_3_balancing_benefit_self_similar() {
    let single = load("selfsim_single.toml");
    let two = load("selfsim_two_path.toml");
    let seeds: Vec<u64> = (1..=10).collect();
    let report = compare_scenarios(&single, &two, &seeds).unwrap();
    let wins = report
        .pairs
        .iter()
        .filter(|p| p.b_higher_throughput() && p.b_lower_delay())
        .count();
    assert!(
        wins >= 9,
        "two-path won both metrics in only {wins}/10 seeds \
         (throughput fraction {}, delay fraction {})",
        report.frac_b_higher_throughput,
        report.frac_b_lower_delay
    );
    println!("acceptance 3 (balancing benefit, self-similar source): PASS ({wins}/10 seeds)");
}

/// Criterion 4: the rate average converges to within 1% of a CBR source's
/// rate after one simulated second through one router, and single steps
/// match an independent high-precision evaluation to 10 significant digits.
#[test]
fn acceptance_4_ema_correctness() {
    // Engine route: a one-router path carrying 4 Mbps; BE is requested and
    // stays granted (the downgrade chain ends at BE, and an exhausted chain
    // falls back to best effort), so the BE average sees the whole stream.
    let raw = r#"
name = "ema-convergence"
balancing = "single-path"
duration_s = 2.0
probe_requested_class = "be"

[[sources]]
model = "cbr"
rate_bps = 4.0e6
start_time = 0.0
class_mix = { be = 1.0 }

[topology]
source = "source"
destination = "destination"
ingress = "r0"
links = [
    { from = "source", to = "r0" },
    { from = "r0", to = "destination" },
]
"#;
    let config = ScenarioConfig::from_toml_str(raw).unwrap();
    let mut sim = Simulation::from_config(&config, Some(1)).unwrap();
    sim.run_until(SimTime::from_secs(1.0));
    let ema = sim.router_ema("r0", ServiceClass::Be).unwrap();
    let err = (ema.avg_rate_bps - 4.0e6).abs() / 4.0e6;
    assert!(err < 0.01, "rate average {} after 1 s", ema.avg_rate_bps);

    // Single-step fidelity: 100 randomized (l, tau, r_old) triples against
    // the algebraically independent form l/tau + w*(r_old - l/tau), plus
    // values frozen from a 50-digit evaluation.
    let mut rng = RngStream::new(20260810, "acceptance-ema");
    for _ in 0..100 {
        let l = 100.0 + rng.next_uniform() * 11_900.0;
        let tau = 1e-6 + rng.next_uniform() * 0.5;
        let old = rng.next_uniform() * 8.0e6;
        let got = ema_step(old, l / tau, tau, 0.01);
        let w = (-tau / 0.01_f64).exp();
        let oracle = l / tau + w * (old - l / tau);
        let scale = got.abs().max(oracle.abs()).max(1.0);
        assert!(
            (got - oracle).abs() / scale < 5e-10,
            "single-step mismatch: {got} vs {oracle}"
        );
    }
    for (l, tau, old, expected) in [
        (3943.190973719327f64, 0.024332809177564654f64, 36263.136586542896f64, 151014.6170940461947f64),
        (744.4250400501479, 0.29725695501342014, 7758394.306631235, 2504.3149631280100367),
        (108.40775720832245, 0.05470170621628633, 6638533.60835977, 29925.090724531365492),
        (9509.731506797294, 0.15272007549577776, 4237540.995972869, 62270.006615298131057),
        (10055.968887975405, 0.24681520136620647, 2310598.6119975047, 40742.907418224903172),
        (11148.02859263286, 0.12147531546879495, 2300762.502523732, 91783.677426334400543),
    ] {
        let got = ema_step(old, l / tau, tau, 0.01);
        assert!(
            (got - expected).abs() / expected < 1e-10,
            "frozen value mismatch: {got} vs {expected}"
        );
    }
    println!("acceptance 4 (rate-average correctness): PASS");
}

/// Criterion 5: three saturating same-size flows share served bits within
/// 3% of the normalized 0.22/0.33/0.44 weights over 10^4 packets.
#[test]
fn acceptance_5_wfq_shares() {
    let mut router = paper_router(1);
    let mut served = [0u64; 3];
    let mut now = SimTime::ZERO;
    let mut id = 0;
    let mut total = 0u64;
    while total < 10_000 {
        for &c in &ServiceClass::ALL {
            while router.queue_len(c) < 4 {
                router.enqueue_data(data_pkt(id, c), now);
                id += 1;
            }
        }
        let (_, fin) = router.wfq_dequeue(now).map(|(p, f)| (p.id, f)).unwrap();
        now = fin;
        let pkt = router.complete_service(now);
        served[pkt.class.index()] += pkt.size_bits;
        total += 1;
    }
    let total_bits: u64 = served.iter().sum();
    let weights = [0.22, 0.33, 0.44];
    let wsum: f64 = weights.iter().sum();
    for (i, &w) in weights.iter().enumerate() {
        let share = served[i] as f64 / total_bits as f64;
        let target = w / wsum;
        assert!(
            (share - target).abs() / target <= 0.03,
            "class {i}: share {share} vs target {target}"
        );
    }
    println!("acceptance 5 (WFQ served-bit shares): PASS");
}

/// Criterion 6: at fixed rates {0.25, 0.75}, a million seeded draws land
/// within three binomial standard deviations (0.0013) of 0.25.
#[test]
fn acceptance_6_splitter_fidelity() {
    let sums: BTreeMap<String, f64> =
        [("p1".to_string(), 125.0), ("p2".to_string(), 375.0)].into();
    let state = compute_rates(&sums, SimTime::ZERO).unwrap();
    assert_eq!(state.rates["p1"], 0.25);
    let mut rng = RngStream::new(7, "acceptance-splitter");
    let n = 1_000_000u64;
    let mut to_p1 = 0u64;
    for _ in 0..n {
        if pick_path(&state, rng.next_uniform()) == "p1" {
            to_p1 += 1;
        }
    }
    let frac = to_p1 as f64 / n as f64;
    assert!(
        (frac - 0.25).abs() <= 0.0013,
        "empirical fraction {frac} outside 0.25 +/- 0.0013"
    );
    println!("acceptance 6 (splitter fidelity): PASS (fraction {frac})");
}

/// Criterion 7: on an idle network with stock buffer depths, every probed
/// path scores exactly 24 + 53 + 374 = 451.
#[test]
fn acceptance_7_idle_path_score() {
    let mut config = ScenarioConfig::with_defaults("idle-score");
    config.duration_s = 10.0;
    // Keep the network idle: the source starts after the horizon.
    config.sources = vec![SourceConfig {
        start_time: 100.0,
        ..Default::default()
    }];
    let out = run_scenario(&config, Some(1)).unwrap();
    assert_eq!(out.summary.probing_rounds, 20);
    assert_eq!(out.summary.final_sums.len(), 2);
    for (id, sum) in &out.summary.final_sums {
        assert_eq!(*sum, 451.0, "path {id} scored {sum}");
    }
    println!("acceptance 7 (idle-path score 451): PASS");
}

/// Criterion 8: every shipped scenario re-runs to a byte-identical CSV and
/// conserves packets on every sample row.
#[test]
fn acceptance_8_determinism_and_conservation() {
    let files = [
        "baseline_single.toml",
        "baseline_two_path.toml",
        "degraded_single.toml",
        "degraded_two_path.toml",
        "selfsim_single.toml",
        "selfsim_two_path.toml",
    ];
    for file in files {
        let config = load(file);
        for seed in [1u64, 2] {
            let first = run_scenario(&config, Some(seed)).unwrap();
            let second = run_scenario(&config, Some(seed)).unwrap();
            assert_eq!(first.csv, second.csv, "{file} seed {seed}: CSV differs across runs");
            for line in first.csv.lines().skip(1) {
                let cols: Vec<&str> = line.split(',').collect();
                let num = |i: usize| cols[i].parse::<u64>().unwrap();
                let drops = num(5) + num(6) + num(7);
                assert_eq!(
                    num(10),
                    num(11) + drops + num(12),
                    "{file} seed {seed}: conservation violated on row {line}"
                );
            }
        }
    }
    println!("acceptance 8 (determinism and conservation): PASS");
}

/// Criterion 9: on a hand-built three-router state, folding plus scoring
/// equals a brute-force minimum over all routers, exactly.
#[test]
fn acceptance_9_bottleneck_fold_oracle() {
    let mut routers = vec![paper_router(1), paper_router(2), paper_router(3)];
    // Hand-built averaged buffer occupancies.
    let occupancies = [
        [14.0, 23.0, 274.0], // remaining 10 + 30 + 100 = 140
        [19.0, 23.0, 284.0], // remaining  5 + 30 + 90 = 125
        [4.0, 3.0, 174.0],   // remaining 20 + 50 + 200 = 270
    ];
    for (router, occ) in routers.iter_mut().zip(occupancies) {
        for (i, &c) in ServiceClass::ALL.iter().enumerate() {
            router.ema_mut(c).avg_buffer_pkts = occ[i];
        }
    }
    let mut probe = ProbePacket::new("p1".into(), 0, ServiceClass::Ef, SimTime::ZERO, 400);
    for router in &routers {
        fold_bottleneck(&mut probe, router, 4.5e6);
    }
    // Brute force over all routers.
    let expected = routers
        .iter()
        .map(|r| {
            let v = r.remaining_buffer_vector();
            (r.id, v, v.iter().sum::<f64>())
        })
        .min_by(|a, b| a.2.total_cmp(&b.2))
        .unwrap();
    let carried = probe.bottleneck.as_ref().unwrap();
    assert_eq!(carried.router, expected.0);
    assert_eq!(carried.remaining, expected.1);
    assert_eq!(score_path(&probe), expected.2);
    assert_eq!(score_path(&probe), 125.0);
    println!("acceptance 9 (bottleneck fold oracle): PASS");
}
