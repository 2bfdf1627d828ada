use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use lbsim::config::ScenarioConfig;
use lbsim::runner::{compare_csv, compare_scenarios, run_scenario_to_file, summary_text};
use lbsim::{Error, Result};

#[derive(Parser)]
#[command(
    name = "lbsim",
    about = "Deterministic simulator for probing-based adaptive multipath load balancing",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its stats CSV.
    Run {
        /// Scenario TOML file.
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run two scenarios over a seed list and write a paired report.
    Compare {
        /// Scenario A TOML file.
        #[arg(long)]
        a: PathBuf,
        /// Scenario B TOML file.
        #[arg(long)]
        b: PathBuf,
        /// Seeds: an inclusive range "0..9" or a comma list "1,2,3".
        #[arg(long)]
        seeds: String,
        /// Report CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the candidate paths a scenario would use.
    Paths {
        /// Scenario TOML file.
        #[arg(long)]
        config: PathBuf,
    },
}

fn parse_seeds(raw: &str) -> Result<Vec<u64>> {
    let parse_one = |s: &str| -> Result<u64> {
        s.trim()
            .parse::<u64>()
            .map_err(|_| Error::Config(format!("seeds: invalid seed {s:?}")))
    };
    if let Some((lo, hi)) = raw.split_once("..") {
        let lo = parse_one(lo)?;
        let hi = parse_one(hi)?;
        if hi < lo {
            return Err(Error::Config(format!("seeds: empty range {raw:?}")));
        }
        return Ok((lo..=hi).collect());
    }
    raw.split(',').map(parse_one).collect()
}

fn real_main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, seed, out } => {
            let config = ScenarioConfig::from_path(&config)?;
            let output = run_scenario_to_file(&config, seed, &out)?;
            print!("{}", summary_text(&output.summary));
            println!("stats written to {}", out.display());
        }
        Command::Compare { a, b, seeds, out } => {
            let config_a = ScenarioConfig::from_path(&a)?;
            let config_b = ScenarioConfig::from_path(&b)?;
            let seeds = parse_seeds(&seeds)?;
            let report = compare_scenarios(&config_a, &config_b, &seeds)?;
            std::fs::write(&out, compare_csv(&report))?;
            println!(
                "{} seeds: B higher throughput in {:.0}%, B lower delay in {:.0}%",
                report.pairs.len(),
                100.0 * report.frac_b_higher_throughput,
                100.0 * report.frac_b_lower_delay,
            );
            println!("report written to {}", out.display());
        }
        Command::Paths { config } => {
            let config = ScenarioConfig::from_path(&config)?;
            let compiled = config.compile(None)?;
            for (id, hops) in &compiled.candidates {
                let seq = compiled.topology.full_node_sequence(hops);
                let names: Vec<&str> =
                    seq.iter().map(|&n| compiled.topology.node_name(n)).collect();
                println!("{id}: {}", names.join(" -> "));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
