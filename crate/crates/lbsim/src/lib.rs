//! Deterministic discrete-event simulator for probing-based adaptive multipath
//! load balancing over DiffServ routers.
//!
//! The simulated system sends small probe packets along every candidate path
//! once per probing period. Each router on a path grades the probe (per-class
//! admission against its WFQ allocation) and folds its remaining buffer space
//! into the probe, so a probe that reaches the destination carries the
//! bottleneck router's per-class remaining buffer vector. The destination
//! scores each path by the bottleneck's summed remaining space, selects the
//! two best paths, and acknowledges the scores back to the splitting (ingress)
//! router, which divides data traffic across the selected paths in proportion
//! to their scores.

pub mod config;
pub mod engine;
pub mod metrics;
pub mod probe;
pub mod router;
pub mod runner;
pub mod sim;
pub mod split;
pub mod topology;
pub mod traffic;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Configuration rejected; the message names the offending field.
    #[error("invalid config: {0}")]
    Config(String),
    /// No source-to-destination path exists in the topology.
    #[error("no path from {0} to {1}")]
    NoPath(String, String),
    /// A probing round ended with no scored paths.
    #[error("no scored paths in this probing round")]
    EmptyScores,
    /// Split-rate computation over an empty path set.
    #[error("empty path-score map")]
    EmptyRates,
    /// Compared scenarios must simulate the same duration.
    #[error("scenario durations differ: {0} s vs {1} s")]
    DurationMismatch(f64, f64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// CLI exit code: 1 for configuration problems, 2 for runtime failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Config(_) | Error::NoPath(_, _) | Error::DurationMismatch(_, _) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
