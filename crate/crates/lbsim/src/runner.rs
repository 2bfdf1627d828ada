//! Scenario running and paired scenario comparison.

use std::path::Path;

use rayon::prelude::*;

use crate::config::ScenarioConfig;
use crate::engine::{RunOutput, RunSummary, Simulation};
use crate::{Error, Result};

/// Run one scenario deterministically; `seed_override` takes precedence
/// over the config's seed.
pub fn run_scenario(config: &ScenarioConfig, seed_override: Option<u64>) -> Result<RunOutput> {
    Ok(Simulation::from_config(config, seed_override)?.run())
}

/// Run and write the stats CSV to `out`.
pub fn run_scenario_to_file(
    config: &ScenarioConfig,
    seed_override: Option<u64>,
    out: &Path,
) -> Result<RunOutput> {
    let output = run_scenario(config, seed_override)?;
    std::fs::write(out, &output.csv)?;
    Ok(output)
}

fn fmt_opt(v: Option<f64>, digits: usize) -> String {
    v.map(|x| format!("{x:.digits$}")).unwrap_or_else(|| "n/a".into())
}

/// Human-readable run digest for the CLI.
pub fn summary_text(summary: &RunSummary) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "scenario {} (seed {}): {} s simulated, {} probing rounds\n",
        summary.name, summary.seed, summary.duration_s, summary.probing_rounds
    ));
    out.push_str(&format!(
        "  packets: generated {}, delivered {}, dropped {} (ef {}, af {}, be {})\n",
        summary.generated,
        summary.delivered,
        summary.total_drops(),
        summary.drops[0],
        summary.drops[1],
        summary.drops[2],
    ));
    out.push_str(&format!(
        "  mean throughput: {} pps\n",
        fmt_opt(summary.mean_throughput_pps, 2)
    ));
    out.push_str(&format!(
        "  delay: mean {} s, p50 {} s, p95 {} s, p99 {} s\n",
        fmt_opt(summary.mean_delay_s, 6),
        fmt_opt(summary.p50_delay_s, 6),
        fmt_opt(summary.p95_delay_s, 6),
        fmt_opt(summary.p99_delay_s, 6),
    ));
    let rates: Vec<String> = summary
        .final_rates
        .iter()
        .map(|(id, r)| format!("{id}={r:.4}"))
        .collect();
    out.push_str(&format!("  final split rates: {}\n", rates.join(", ")));
    let sums: Vec<String> = summary
        .final_sums
        .iter()
        .map(|(id, s)| format!("{id}={s:.2}"))
        .collect();
    out.push_str(&format!("  last path scores: {}\n", sums.join(", ")));
    out
}

/// One seed's paired results.
#[derive(Debug, Clone)]
pub struct ComparePair {
    pub seed: u64,
    pub a: RunSummary,
    pub b: RunSummary,
}

impl ComparePair {
    pub fn b_higher_throughput(&self) -> bool {
        match (self.a.mean_throughput_pps, self.b.mean_throughput_pps) {
            (Some(a), Some(b)) => b > a,
            _ => false,
        }
    }

    pub fn b_lower_delay(&self) -> bool {
        match (self.a.mean_delay_s, self.b.mean_delay_s) {
            (Some(a), Some(b)) => b < a,
            _ => false,
        }
    }
}

/// Seed-replicated comparison of two scenarios.
#[derive(Debug, Clone)]
pub struct CompareReport {
    pub pairs: Vec<ComparePair>,
    /// Fraction of seeds where scenario B's mean throughput is strictly
    /// higher than A's.
    pub frac_b_higher_throughput: f64,
    /// Fraction of seeds where scenario B's mean delay is strictly lower.
    pub frac_b_lower_delay: f64,
}

/// Run both scenarios under every seed (in parallel; runs share nothing)
/// and report per-seed ordering. The configs must simulate the same
/// duration.
pub fn compare_scenarios(
    config_a: &ScenarioConfig,
    config_b: &ScenarioConfig,
    seeds: &[u64],
) -> Result<CompareReport> {
    if config_a.duration_s != config_b.duration_s {
        return Err(Error::DurationMismatch(config_a.duration_s, config_b.duration_s));
    }
    config_a.validate()?;
    config_b.validate()?;
    let pairs: Vec<ComparePair> = seeds
        .par_iter()
        .map(|&seed| -> Result<ComparePair> {
            let a = run_scenario(config_a, Some(seed))?.summary;
            let b = run_scenario(config_b, Some(seed))?.summary;
            Ok(ComparePair { seed, a, b })
        })
        .collect::<Result<_>>()?;
    let n = pairs.len().max(1) as f64;
    let frac_b_higher_throughput =
        pairs.iter().filter(|p| p.b_higher_throughput()).count() as f64 / n;
    let frac_b_lower_delay = pairs.iter().filter(|p| p.b_lower_delay()).count() as f64 / n;
    Ok(CompareReport {
        pairs,
        frac_b_higher_throughput,
        frac_b_lower_delay,
    })
}

pub const COMPARE_CSV_HEADER: &str = "seed,throughput_a_pps,throughput_b_pps,mean_delay_a_s,mean_delay_b_s,b_higher_throughput,b_lower_delay";

/// Report CSV: one row per seed plus a trailing summary row with the means
/// and the win fractions.
pub fn compare_csv(report: &CompareReport) -> String {
    let mut out = String::from(COMPARE_CSV_HEADER);
    out.push('\n');
    let field = |v: Option<f64>| v.map(|x| format!("{x:.9}")).unwrap_or_default();
    for pair in &report.pairs {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            pair.seed,
            field(pair.a.mean_throughput_pps),
            field(pair.b.mean_throughput_pps),
            field(pair.a.mean_delay_s),
            field(pair.b.mean_delay_s),
            pair.b_higher_throughput() as u8,
            pair.b_lower_delay() as u8,
        ));
    }
    let mean = |xs: Vec<Option<f64>>| -> Option<f64> {
        let vals: Vec<f64> = xs.into_iter().flatten().collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    };
    let mean_a_thr = mean(report.pairs.iter().map(|p| p.a.mean_throughput_pps).collect());
    let mean_b_thr = mean(report.pairs.iter().map(|p| p.b.mean_throughput_pps).collect());
    let mean_a_delay = mean(report.pairs.iter().map(|p| p.a.mean_delay_s).collect());
    let mean_b_delay = mean(report.pairs.iter().map(|p| p.b.mean_delay_s).collect());
    out.push_str(&format!(
        "summary,{},{},{},{},{:.3},{:.3}\n",
        field(mean_a_thr),
        field(mean_b_thr),
        field(mean_a_delay),
        field(mean_b_delay),
        report.frac_b_higher_throughput,
        report.frac_b_lower_delay,
    ));
    out
}
