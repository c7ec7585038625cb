//! Update-latency probes for the constant-time claim.
//!
//! The coefficient update has no dependence on stream history, so the
//! per-update latency measured late in a long stream should match the latency
//! measured early. `measure_update_latency` times individual updates at two
//! stream positions and reports the medians.

use crate::state::{CoefficientState, StateError};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::time::Instant;

/// Median per-update latencies sampled around two stream positions.
#[derive(Debug, Clone, Copy)]
pub struct LatencyReport {
    pub early_position: u64,
    pub late_position: u64,
    pub early_median_ns: f64,
    pub late_median_ns: f64,
}

impl LatencyReport {
    /// Late/early median ratio; 1.0 means perfectly history-independent.
    pub fn ratio(&self) -> f64 {
        self.late_median_ns / self.early_median_ns
    }
}

/// Feeds a synthetic standard normal stream into a stationary state of the
/// given order and times `probes` consecutive updates starting at each of the
/// two positions (1-based). `early < late` is required.
pub fn measure_update_latency(
    order: usize,
    early: u64,
    late: u64,
    probes: usize,
    seed: u64,
) -> Result<LatencyReport, StateError> {
    assert!(early >= 1 && late > early, "positions must satisfy 1 <= early < late");
    let mut state = CoefficientState::stationary(order)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut early_samples = Vec::with_capacity(probes);
    let mut late_samples = Vec::with_capacity(probes);
    let total = late + probes as u64;
    let mut position = 0u64;
    while position < total {
        let x: f64 = rng.sample(StandardNormal);
        let y: f64 = rng.sample(StandardNormal);
        position += 1;
        let timed_bucket = if position >= early && position < early + probes as u64 {
            Some(&mut early_samples)
        } else if position >= late && position < late + probes as u64 {
            Some(&mut late_samples)
        } else {
            None
        };
        match timed_bucket {
            Some(bucket) => {
                let t0 = Instant::now();
                state.update(x, y)?;
                bucket.push(t0.elapsed().as_nanos() as f64);
            }
            None => state.update(x, y)?,
        }
    }
    Ok(LatencyReport {
        early_position: early,
        late_position: late,
        early_median_ns: median(&mut early_samples),
        late_median_ns: median(&mut late_samples),
    })
}

fn median(samples: &mut [f64]) -> f64 {
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = samples.len();
    if n % 2 == 1 {
        samples[n / 2]
    } else {
        0.5 * (samples[n / 2 - 1] + samples[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_has_positive_medians() {
        let report = measure_update_latency(6, 100, 2000, 101, 1).unwrap();
        assert!(report.early_median_ns > 0.0);
        assert!(report.late_median_ns > 0.0);
        assert!(report.ratio().is_finite());
    }

    #[test]
    fn median_of_odd_and_even() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
