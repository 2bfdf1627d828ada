//! Traffic splitting: per-path rates proportional to the paths' bottleneck
//! scores, and per-packet path assignment by a uniform draw.

use std::collections::BTreeMap;

use crate::sim::SimTime;
use crate::{Error, Result};

/// Current split rates over the selected paths. Rates sum to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitState {
    pub rates: BTreeMap<String, f64>,
    pub last_update: SimTime,
}

/// Rate for each path: its score divided by the score total. When every
/// score is zero the split falls back to uniform.
pub fn compute_rates(sums: &BTreeMap<String, f64>, now: SimTime) -> Result<SplitState> {
    if sums.is_empty() {
        return Err(Error::EmptyRates);
    }
    let total: f64 = sums.values().sum();
    let n = sums.len() as f64;
    let rates = sums
        .iter()
        .map(|(id, &s)| {
            let rate = if total > 0.0 { s / total } else { 1.0 / n };
            (id.clone(), rate)
        })
        .collect();
    Ok(SplitState {
        rates,
        last_update: now,
    })
}

/// The path whose cumulative-rate interval contains `u`. Paths are walked
/// in id order, so the mapping is a pure function of `(state, u)`.
pub fn pick_path(state: &SplitState, u: f64) -> &str {
    assert!(!state.rates.is_empty(), "pick_path on empty split state");
    assert!((0.0..1.0).contains(&u), "u out of range: {u}");
    let mut acc = 0.0;
    for (id, &rate) in &state.rates {
        acc += rate;
        if u < acc {
            return id;
        }
    }
    // Floating-point slack: the last path with nonzero rate absorbs it.
    state
        .rates
        .iter()
        .rev()
        .find(|(_, &r)| r > 0.0)
        .map(|(id, _)| id.as_str())
        .expect("all split rates zero")
}
