//! Previous-tick resampling of quote streams into aligned basis-point log
//! returns.
//!
//! Each tick carries a UTC millisecond timestamp and a bid/ask pair; the
//! mid-price is `(bid + ask) / 2`. Interval boundaries are aligned to epoch
//! multiples of the interval, and the price recorded at a boundary is the
//! mid-price of the most recent tick at or before it. Boundaries that precede
//! an instrument's first tick are dropped from the common span; after an
//! instrument's data ends its last price carries forward, which yields zero
//! returns there.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TickError {
    #[error("tick {index}: prices must satisfy ask >= bid > 0 (bid={bid}, ask={ask})")]
    InvalidQuote { index: usize, bid: f64, ask: f64 },

    #[error("tick {index}: timestamps must be non-decreasing ({prev} then {curr})")]
    TimestampOrder { index: usize, prev: u64, curr: u64 },

    #[error("each stream needs at least {needed} ticks, got {got}")]
    TooFewTicks { needed: usize, got: usize },

    #[error("interval must be positive")]
    InvalidInterval,

    #[error("the streams' time spans do not overlap")]
    EmptyOverlap,

    #[error("common span covers fewer than two interval boundaries; no returns can be formed")]
    TooFewBoundaries,
}

/// One top-of-book quote.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TickRecord {
    /// Milliseconds since the Unix epoch, UTC.
    pub timestamp_ms: u64,
    pub bid: f64,
    pub ask: f64,
}

impl TickRecord {
    pub fn new(timestamp_ms: u64, bid: f64, ask: f64) -> Result<Self, TickError> {
        let record = Self {
            timestamp_ms,
            bid,
            ask,
        };
        record.validate(0)?;
        Ok(record)
    }

    fn validate(&self, index: usize) -> Result<(), TickError> {
        if !(self.bid.is_finite() && self.ask.is_finite() && self.bid > 0.0 && self.ask >= self.bid)
        {
            return Err(TickError::InvalidQuote {
                index,
                bid: self.bid,
                ask: self.ask,
            });
        }
        Ok(())
    }

    pub fn mid(&self) -> f64 {
        (self.bid + self.ask) / 2.0
    }
}

/// Aligned per-interval basis-point log returns for two instruments.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

impl ReturnSeries {
    pub fn len(&self) -> usize {
        self.left.len()
    }

    pub fn is_empty(&self) -> bool {
        self.left.is_empty()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.left.iter().copied().zip(self.right.iter().copied())
    }
}

fn validate_stream(ticks: &[TickRecord]) -> Result<(), TickError> {
    if ticks.len() < 2 {
        return Err(TickError::TooFewTicks {
            needed: 2,
            got: ticks.len(),
        });
    }
    let mut prev = ticks[0].timestamp_ms;
    for (index, t) in ticks.iter().enumerate() {
        t.validate(index)?;
        if t.timestamp_ms < prev {
            return Err(TickError::TimestampOrder {
                index,
                prev,
                curr: t.timestamp_ms,
            });
        }
        prev = t.timestamp_ms;
    }
    Ok(())
}

/// Mid-prices of one stream sampled at the boundaries `k * interval_ms` for
/// `k` in `k_start ..= k_end` by previous-tick lookup.
fn sample_previous_tick(
    ticks: &[TickRecord],
    interval_ms: u64,
    k_start: u64,
    k_end: u64,
) -> Vec<f64> {
    let mut prices = Vec::with_capacity((k_end - k_start + 1) as usize);
    let mut cursor = 0usize;
    let mut last_mid = ticks[0].mid();
    for k in k_start..=k_end {
        let boundary = k * interval_ms;
        while cursor < ticks.len() && ticks[cursor].timestamp_ms <= boundary {
            last_mid = ticks[cursor].mid();
            cursor += 1;
        }
        prices.push(last_mid);
    }
    prices
}

/// Resamples two tick streams onto a shared interval grid and returns the
/// aligned basis-point log returns `1e4 * ln(p_{k+1} / p_k)`.
///
/// The grid starts at the first boundary not before either instrument's first
/// tick and ends at the last boundary not after the later of the two final
/// ticks. The streams must overlap in time and the grid must contain at least
/// two boundaries.
pub fn previous_tick_resample(
    left: &[TickRecord],
    right: &[TickRecord],
    interval_ms: u64,
) -> Result<ReturnSeries, TickError> {
    if interval_ms == 0 {
        return Err(TickError::InvalidInterval);
    }
    validate_stream(left)?;
    validate_stream(right)?;

    let first = left[0].timestamp_ms.max(right[0].timestamp_ms);
    let last_overlap = left[left.len() - 1]
        .timestamp_ms
        .min(right[right.len() - 1].timestamp_ms);
    if last_overlap < first {
        return Err(TickError::EmptyOverlap);
    }
    let last = left[left.len() - 1]
        .timestamp_ms
        .max(right[right.len() - 1].timestamp_ms);

    let k_start = first.div_ceil(interval_ms);
    let k_end = last / interval_ms;
    if k_end < k_start + 1 {
        return Err(TickError::TooFewBoundaries);
    }

    let p_left = sample_previous_tick(left, interval_ms, k_start, k_end);
    let p_right = sample_previous_tick(right, interval_ms, k_start, k_end);

    let to_returns = |prices: &[f64]| -> Vec<f64> {
        prices
            .windows(2)
            .map(|w| 1e4 * (w[1] / w[0]).ln())
            .collect()
    };
    Ok(ReturnSeries {
        left: to_returns(&p_left),
        right: to_returns(&p_right),
    })
}
